#include "cardioreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "cardioreg/error.hpp"
#include "cardioreg/seqio.hpp"

namespace cardioreg::metrics {

namespace {

using imaging::Mask;

void require_same_geometry(const LabelMap& a, const LabelMap& b) {
  if (!a.same_geometry(b)) throw Error(ErrorCode::dimension_mismatch, "label maps differ in size or spacing");
}

Mask boundary_mask(const Mask& m) {
  Mask out(m.width, m.height);
  for (const auto& [x, y] : imaging::boundary_pixels(m)) out.set(x, y, true);
  return out;
}

/// Distances (mm) from each boundary pixel of `from` to the nearest boundary pixel of `to`.
std::vector<double> directed_distances(const Mask& from, const Mask& to_boundary, double sx, double sy) {
  const auto d2 = imaging::squared_distance_transform(to_boundary, sx, sy);
  std::vector<double> out;
  for (const auto& [x, y] : imaging::boundary_pixels(from))
    out.push_back(std::sqrt(d2[static_cast<std::size_t>(y) * static_cast<std::size_t>(from.width) + x]));
  return out;
}

bool adjacent_to(const LabelMap& m, int x, int y, Label l) {
  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  for (int k = 0; k < 4; ++k) {
    const int nx = x + dx[k];
    const int ny = y + dy[k];
    if (m.contains(nx, ny) && m.is(nx, ny, l)) return true;
  }
  return false;
}

double segment_distance_px(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax;
  const double vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx);
  const double dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Boundary pixels this close (pixel units) to the base segment belong to it.
constexpr double kBaseSegmentTolerancePx = 1.5;

}  // namespace

std::string_view region_name(Region r) {
  switch (r) {
    case Region::lv: return "lv";
    case Region::myo: return "myo";
    case Region::epi: return "epi";
  }
  return "unknown";
}

Mask region_mask(const LabelMap& map, Region r) {
  switch (r) {
    case Region::lv: return imaging::class_mask(map, Label::lv);
    case Region::myo: return imaging::class_mask(map, Label::myo);
    case Region::epi: return imaging::foreground_mask(map);
  }
  return {};
}

double dice(const LabelMap& a, const LabelMap& b, Region r) {
  require_same_geometry(a, b);
  const auto ma = region_mask(a, r);
  const auto mb = region_mask(b, r);
  std::size_t inter = 0;
  std::size_t na = 0;
  std::size_t nb = 0;
  for (std::size_t i = 0; i < ma.data.size(); ++i) {
    na += ma.data[i];
    nb += mb.data[i];
    inter += ma.data[i] & mb.data[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

SurfaceDistance surface_distance(const LabelMap& a, const LabelMap& b, Region r) {
  require_same_geometry(a, b);
  const auto ma = region_mask(a, r);
  const auto mb = region_mask(b, r);
  if (ma.count() == 0 || mb.count() == 0)
    throw Error(ErrorCode::undefined_metric, std::string("empty ") + std::string(region_name(r)) + " region");
  const double sx = a.spacing().sx;
  const double sy = a.spacing().sy;
  const auto ab = directed_distances(ma, boundary_mask(mb), sx, sy);
  const auto ba = directed_distances(mb, boundary_mask(ma), sx, sy);
  SurfaceDistance out;
  double sum = 0.0;
  for (double d : ab) {
    out.hausdorff_mm = std::max(out.hausdorff_mm, d);
    sum += d;
  }
  for (double d : ba) {
    out.hausdorff_mm = std::max(out.hausdorff_mm, d);
    sum += d;
  }
  out.assd_mm = sum / static_cast<double>(ab.size() + ba.size());
  return out;
}

double hausdorff(const LabelMap& a, const LabelMap& b, Region r) { return surface_distance(a, b, r).hausdorff_mm; }

double assd(const LabelMap& a, const LabelMap& b, Region r) { return surface_distance(a, b, r).assd_mm; }

FrameMetrics frame_metrics(const LabelMap& pred, const LabelMap& gt) {
  FrameMetrics fm;
  for (auto r : kAllRegions) {
    auto& m = fm[r];
    m.dice = dice(pred, gt, r);
    if (region_mask(pred, r).count() > 0 && region_mask(gt, r).count() > 0) {
      const auto sd = surface_distance(pred, gt, r);
      m.hd_mm = sd.hausdorff_mm;
      m.assd_mm = sd.assd_mm;
    }
  }
  return fm;
}

double ef_from_areas(std::span<const double> lv_area) {
  if (lv_area.size() < 2) throw Error(ErrorCode::sequence_too_short, "EF needs at least 2 frames");
  const auto [lo, hi] = std::minmax_element(lv_area.begin(), lv_area.end());
  if (!(*hi > 0.0)) throw Error(ErrorCode::invalid_argument, "end-diastolic area must be positive");
  if (!(*lo > 0.0)) throw Error(ErrorCode::invalid_argument, "LV areas must be positive");
  return 100.0 * (*hi - *lo) / *hi;
}

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::lv_disconnected: return "lv_disconnected";
    case Violation::myo_disconnected: return "myo_disconnected";
    case Violation::lv_holes: return "lv_holes";
    case Violation::myo_holes: return "myo_holes";
    case Violation::lv_myo_detached: return "lv_myo_detached";
    case Violation::myo_open_beyond_base: return "myo_open_beyond_base";
  }
  return "unknown";
}

bool AnatomicalReport::has(Violation v) const {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

AnatomicalReport anatomical_check(const LabelMap& mask) {
  AnatomicalReport rep;
  const auto lv = imaging::class_mask(mask, Label::lv);
  const auto myo = imaging::class_mask(mask, Label::myo);
  if (imaging::connected_components(lv, imaging::Connectivity::eight).count() != 1)
    rep.violations.push_back(Violation::lv_disconnected);
  if (imaging::connected_components(myo, imaging::Connectivity::eight).count() != 1)
    rep.violations.push_back(Violation::myo_disconnected);

  // background pockets that cannot reach the image border
  const auto bg = imaging::class_mask(mask, Label::background);
  const auto comps = imaging::connected_components(bg, imaging::Connectivity::four);
  std::vector<char> touches_border(static_cast<std::size_t>(comps.count()), 0);
  std::vector<char> touches_myo(static_cast<std::size_t>(comps.count()), 0);
  const int w = mask.width();
  const int h = mask.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int c = comps.labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + x];
      if (c < 0) continue;
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_border[static_cast<std::size_t>(c)] = 1;
      if (adjacent_to(mask, x, y, Label::myo)) touches_myo[static_cast<std::size_t>(c)] = 1;
    }
  bool lv_hole = false;
  bool myo_hole = false;
  for (int c = 0; c < comps.count(); ++c) {
    if (touches_border[static_cast<std::size_t>(c)]) continue;
    (touches_myo[static_cast<std::size_t>(c)] ? myo_hole : lv_hole) = true;
  }
  if (lv.count() > 0) {
    // a non-background island enclosed by LV is an LV hole as well
    if (imaging::count_holes(lv) > 0) lv_hole = true;
  }
  if (lv_hole) rep.violations.push_back(Violation::lv_holes);
  if (myo_hole) rep.violations.push_back(Violation::myo_holes);

  if (lv.count() == 0) return rep;

  // base pixels: LV pixels 4-adjacent to in-image background
  std::vector<std::pair<int, int>> base;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (lv.at(x, y) && adjacent_to(mask, x, y, Label::background)) base.emplace_back(x, y);
  if (base.empty()) {
    rep.violations.push_back(Violation::myo_open_beyond_base);
    return rep;
  }
  std::pair<int, int> pa = base.front();
  std::pair<int, int> pb = base.front();
  long best = -1;
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      const long dx = base[i].first - base[j].first;
      const long dy = base[i].second - base[j].second;
      const long d = dx * dx + dy * dy;
      if (d > best) {
        best = d;
        pa = base[i];
        pb = base[j];
      }
    }
  for (const auto& [x, y] : imaging::boundary_pixels(lv)) {
    if (segment_distance_px(x, y, pa.first, pa.second, pb.first, pb.second) <= kBaseSegmentTolerancePx) continue;
    if (!adjacent_to(mask, x, y, Label::myo)) {
      rep.violations.push_back(Violation::lv_myo_detached);
      break;
    }
  }
  return rep;
}

SegSequence gaussian_baseline(const SegSequence& seq, std::optional<double> sigma) {
  const std::size_t n = seq.frames.size();
  if (n < 3) throw Error(ErrorCode::sequence_too_short, "Gaussian baseline needs at least 3 frames");
  validate_uniform_geometry(seq);
  const double s = sigma.value_or(static_cast<double>(n) / 20.0);
  if (!std::isfinite(s) || s < 0.0) throw Error(ErrorCode::invalid_argument, "sigma must be finite and non-negative");
  if (s == 0.0) return seq;

  const int radius = static_cast<int>(std::ceil(3.0 * s));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * k * k / (s * s));
    kernel[static_cast<std::size_t>(k + radius)] = v;
    ksum += v;
  }
  for (auto& v : kernel) v /= ksum;

  SegSequence out = seq;
  const std::size_t pixels = seq.frames.front().size();
  std::vector<std::span<const std::uint8_t>> in_labels;
  for (const auto& f : seq.frames) in_labels.push_back(f.labels());
  const auto last = static_cast<long>(n) - 1;
  for (std::size_t t = 0; t < n; ++t) {
    auto dst = out.frames[t].labels();
    for (std::size_t p = 0; p < pixels; ++p) {
      std::array<double, kMaxLabel + 1> score{};
      for (int k = -radius; k <= radius; ++k) {
        const long src = std::clamp(static_cast<long>(t) + k, 0L, last);
        score[in_labels[static_cast<std::size_t>(src)][p]] += kernel[static_cast<std::size_t>(k + radius)];
      }
      const std::uint8_t original = in_labels[t][p];
      std::uint8_t best = original;
      for (std::uint8_t c = 0; c <= kMaxLabel; ++c)
        if (score[c] > score[best]) best = c;
      dst[p] = best;
    }
  }
  return out;
}

Evaluation evaluate_pair(const SegSequence& pred, const SegSequence& gt, const consistency::Thresholds* tau,
                         const attributes::NormalizationStats* stats) {
  if (pred.frames.size() != gt.frames.size())
    throw Error(ErrorCode::length_mismatch, "prediction has " + std::to_string(pred.frames.size()) +
                                                " frames, ground truth " + std::to_string(gt.frames.size()));
  if (pred.frames.empty()) throw Error(ErrorCode::empty_input, "empty sequences");
  Evaluation e;
  std::vector<double> area_pred;
  std::vector<double> area_gt;
  for (std::size_t t = 0; t < pred.frames.size(); ++t) {
    const auto& p = pred.frames[t];
    const auto& g = gt.frames[t];
    try {
      require_same_geometry(p, g);
    } catch (const Error& err) {
      rethrow_with_frame(err, t);
    }
    e.frames.push_back(frame_metrics(p, g));
    const double px = p.spacing().sx * p.spacing().sy;
    area_pred.push_back(static_cast<double>(p.count(Label::lv)) * px);
    area_gt.push_back(static_cast<double>(g.count(Label::lv)) * px);
    e.anatomy.push_back(anatomical_check(p));
    if (!e.anatomy.back().plausible()) ++e.anatomical_error_frames;
  }
  for (auto r : kAllRegions) {
    auto& s = e.summary[static_cast<std::size_t>(r)];
    double dsum = 0.0;
    double hsum = 0.0;
    double asum = 0.0;
    std::size_t defined = 0;
    for (const auto& f : e.frames) {
      dsum += f[r].dice;
      if (f[r].hd_mm) {
        hsum += *f[r].hd_mm;
        asum += *f[r].assd_mm;
        ++defined;
      }
    }
    s.mean_dice = dsum / static_cast<double>(e.frames.size());
    if (defined > 0) {
      s.mean_hd_mm = hsum / static_cast<double>(defined);
      s.mean_assd_mm = asum / static_cast<double>(defined);
    }
  }
  if (pred.frames.size() >= 2) {
    e.ef_pred = ef_from_areas(area_pred);
    e.ef_gt = ef_from_areas(area_gt);
    e.ef_abs_error = std::abs(e.ef_pred - e.ef_gt);
  }
  if (tau && stats) {
    const auto series = attributes::extract_series(pred);
    e.consistency = consistency::check(series, *stats, *tau);
  }
  return e;
}

std::string evaluation_json(const Evaluation& e, int indent) {
  using json = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["frames"] = e.frames.size();
  auto& regions = j["regions"];
  regions = json::object();
  for (auto r : kAllRegions) {
    const auto& s = e[r];
    regions[std::string(region_name(r))] = {
        {"mean_dice", s.mean_dice}, {"mean_hd_mm", opt(s.mean_hd_mm)}, {"mean_assd_mm", opt(s.mean_assd_mm)}};
  }
  j["ef_pred"] = e.ef_pred;
  j["ef_gt"] = e.ef_gt;
  j["ef_abs_error"] = e.ef_abs_error;
  j["anatomical_error_frames"] = e.anatomical_error_frames;
  json violations = json::object();
  for (auto v : kAllViolations) {
    std::size_t count = 0;
    for (const auto& a : e.anatomy) count += a.has(v) ? 1 : 0;
    violations[std::string(violation_name(v))] = count;
  }
  j["violations"] = violations;
  j["consistency"] = e.consistency ? json::parse(consistency::report_json(*e.consistency)) : json(nullptr);
  return j.dump(indent);
}

void write_frame_csv(const Evaluation& e, const std::filesystem::path& path) {
  std::string out = "frame,t";
  for (auto r : kAllRegions) {
    const auto n = std::string(region_name(r));
    out += "," + n + "_dice," + n + "_hd_mm," + n + "_assd_mm";
  }
  out += ",anatomical_errors\n";
  const std::size_t n = e.frames.size();
  for (std::size_t t = 0; t < n; ++t) {
    const double norm_t = n > 1 ? static_cast<double>(t) / static_cast<double>(n - 1) : 0.0;
    out += std::to_string(t) + "," + seqio::format_double(norm_t);
    for (auto r : kAllRegions) {
      const auto& m = e.frames[t][r];
      out += "," + seqio::format_double(m.dice);
      out += "," + (m.hd_mm ? seqio::format_double(*m.hd_mm) : std::string());
      out += "," + (m.assd_mm ? seqio::format_double(*m.assd_mm) : std::string());
    }
    out += "," + std::to_string(e.anatomy[t].violations.size()) + "\n";
  }
  seqio::write_text_file(path, out);
}

}  // namespace cardioreg::metrics
