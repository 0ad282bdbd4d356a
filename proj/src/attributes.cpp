#include "cardioreg/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "cardioreg/error.hpp"
#include "cardioreg/seqio.hpp"

namespace cardioreg::attributes {

using imaging::Connectivity;
using imaging::Mask;

AttributeVector extract_attributes(const LabelMap& mask, ShapeLandmarks* landmarks) {
  const double sx = mask.spacing().sx;
  const double sy = mask.spacing().sy;
  const int w = mask.width();
  const int h = mask.height();

  const Mask lv = imaging::largest_component(imaging::class_mask(mask, Label::lv), Connectivity::eight);
  const std::size_t lv_count = lv.count();
  const std::size_t myo_count = mask.count(Label::myo);
  if (lv_count == 0) throw Error(ErrorCode::attribute_extraction, "mask has no LV pixels");
  if (myo_count == 0) throw Error(ErrorCode::attribute_extraction, "mask has no MYO pixels");

  AttributeVector out;
  out[Attribute::lv_area] = static_cast<double>(lv_count) * sx * sy;
  out[Attribute::myo_area] = static_cast<double>(myo_count) * sx * sy;

  // EPI centroid over every foreground pixel
  double ex = 0.0;
  double ey = 0.0;
  std::size_t epi_count = 0;
  // LV moments
  double lx = 0.0;
  double ly = 0.0;
  std::vector<std::pair<int, int>> base;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) != 0) {
        ex += mask.x_mm(x);
        ey += mask.y_mm(y);
        ++epi_count;
      }
      if (!lv.at(x, y)) continue;
      lx += mask.x_mm(x);
      ly += mask.y_mm(y);
      const bool touches_bg = (mask.contains(x - 1, y) && mask.is(x - 1, y, Label::background)) ||
                              (mask.contains(x + 1, y) && mask.is(x + 1, y, Label::background)) ||
                              (mask.contains(x, y - 1) && mask.is(x, y - 1, Label::background)) ||
                              (mask.contains(x, y + 1) && mask.is(x, y + 1, Label::background));
      if (touches_bg) base.emplace_back(x, y);
    }
  }
  out[Attribute::epi_cx] = ex / static_cast<double>(epi_count);
  out[Attribute::epi_cy] = ey / static_cast<double>(epi_count);
  lx /= static_cast<double>(lv_count);
  ly /= static_cast<double>(lv_count);

  if (base.empty()) throw Error(ErrorCode::degenerate_base, "LV is fully enclosed; no valve opening");

  // base endpoints: the pair at maximal distance
  std::size_t ia = 0;
  std::size_t ib = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = i; j < base.size(); ++j) {
      const double dx = (base[i].first - base[j].first) * sx;
      const double dy = (base[i].second - base[j].second) * sy;
      const double d2 = dx * dx + dy * dy;
      if (d2 > best) {
        best = d2;
        ia = i;
        ib = j;
      }
    }
  }
  out[Attribute::lv_base_width] = std::sqrt(best);
  const double mx = 0.5 * (mask.x_mm(base[ia].first) + mask.x_mm(base[ib].first));
  const double my = 0.5 * (mask.y_mm(base[ia].second) + mask.y_mm(base[ib].second));

  // apex: LV boundary pixel farthest from the base midpoint
  double apex_d2 = -1.0;
  double apex_x = mx;
  double apex_y = my;
  for (const auto& [x, y] : imaging::boundary_pixels(lv)) {
    const double dx = mask.x_mm(x) - mx;
    const double dy = mask.y_mm(y) - my;
    const double d2 = dx * dx + dy * dy;
    if (d2 > apex_d2) {
      apex_d2 = d2;
      apex_x = mask.x_mm(x);
      apex_y = mask.y_mm(y);
    }
  }
  out[Attribute::lv_length] = std::sqrt(apex_d2);

  // principal axis of the LV second central moments
  double mxx = 0.0;
  double myy = 0.0;
  double mxy = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!lv.at(x, y)) continue;
      const double dx = mask.x_mm(x) - lx;
      const double dy = mask.y_mm(y) - ly;
      mxx += dx * dx;
      myy += dy * dy;
      mxy += dx * dy;
    }
  }
  const double phi = 0.5 * std::atan2(2.0 * mxy, mxx - myy);
  double ax = std::cos(phi);
  double ay = std::sin(phi);
  if (ax * (apex_x - mx) + ay * (apex_y - my) < 0.0) {
    ax = -ax;
    ay = -ay;
  }
  double theta = std::atan2(ax, -ay) * 180.0 / std::numbers::pi;
  if (theta > 90.0) theta -= 180.0;
  if (theta <= -90.0) theta += 180.0;
  out[Attribute::lv_orientation] = theta;

  if (landmarks) {
    landmarks->lv = lv;
    landmarks->base_pixels = base;
    landmarks->base_a = base[ia];
    landmarks->base_b = base[ib];
    landmarks->base_mid_x = mx;
    landmarks->base_mid_y = my;
    landmarks->apex_x = apex_x;
    landmarks->apex_y = apex_y;
  }
  return out;
}

std::vector<AttributeSeries> to_series(std::span<const AttributeVector> frames, Domain domain) {
  std::vector<AttributeSeries> out;
  out.reserve(kNumAttributes);
  for (auto a : kAllAttributes) {
    AttributeSeries s;
    s.attribute = a;
    s.domain = domain;
    s.values.reserve(frames.size());
    for (const auto& f : frames) s.values.push_back(f[a]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<AttributeSeries> extract_series(const SegSequence& seq) {
  std::vector<AttributeVector> frames;
  frames.reserve(seq.frames.size());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    try {
      frames.push_back(extract_attributes(seq.frames[t]));
    } catch (const Error& e) {
      rethrow_with_frame(e, t);
    }
  }
  return to_series(frames, Domain::image);
}

NormalizationStats compute_stats(std::span<const AttributeSeries> reference) {
  if (reference.empty()) throw Error(ErrorCode::empty_input, "no reference series");
  NormalizationStats stats;
  stats.domain = reference.front().domain;
  bool any = false;
  for (const auto& s : reference) {
    if (s.domain != stats.domain) throw Error(ErrorCode::mixed_domains, "reference mixes image and latent series");
    auto& slot = stats.ranges[static_cast<std::size_t>(s.attribute)];
    for (double v : s.values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "non-finite reference value");
      if (!slot) {
        slot = Range{v, v};
      } else {
        slot->min = std::min(slot->min, v);
        slot->max = std::max(slot->max, v);
      }
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::empty_input, "reference series hold no values");
  return stats;
}

namespace {

Range checked_range(Attribute a, const NormalizationStats& stats) {
  const auto& r = stats[a];
  if (!r) throw Error(ErrorCode::invalid_argument, "stats do not cover " + std::string(attribute_name(a)));
  if (!(r->max > r->min))
    throw Error(ErrorCode::degenerate_stats, std::string(attribute_name(a)) + " has max == min");
  return *r;
}

}  // namespace

std::vector<double> normalize_values(std::span<const double> values, Attribute a, const NormalizationStats& stats) {
  const Range r = checked_range(a, stats);
  std::vector<double> out(values.size());
  const double span = r.max - r.min;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - r.min) / span;
  return out;
}

std::vector<double> denormalize_values(std::span<const double> values, Attribute a, const NormalizationStats& stats) {
  const Range r = checked_range(a, stats);
  std::vector<double> out(values.size());
  const double span = r.max - r.min;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * span + r.min;
  return out;
}

AttributeSeries normalize_series(const AttributeSeries& s, const NormalizationStats& stats) {
  if (s.normalized) throw Error(ErrorCode::invalid_argument, "series is already normalized");
  AttributeSeries out = s;
  out.values = normalize_values(s.values, s.attribute, stats);
  out.normalized = true;
  return out;
}

void write_stats(const NormalizationStats& stats, const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (auto a : kAllAttributes) {
    const auto& r = stats[a];
    if (!r) continue;
    j[std::string(attribute_name(a))] = {{"min", r->min}, {"max", r->max}};
  }
  seqio::write_text_file(path, j.dump(2) + "\n");
}

NormalizationStats read_stats(const std::filesystem::path& path, Domain domain) {
  NormalizationStats stats;
  stats.domain = domain;
  try {
    const auto j = nlohmann::json::parse(seqio::read_text_file(path));
    for (const auto& [key, value] : j.items()) {
      const auto a = attribute_from_name(key);
      if (!a) throw Error(ErrorCode::parse, path.string() + ": unknown attribute " + key);
      const Range r{value.at("min").get<double>(), value.at("max").get<double>()};
      if (!(r.max >= r.min)) throw Error(ErrorCode::parse, path.string() + ": max < min for " + key);
      stats.ranges[static_cast<std::size_t>(*a)] = r;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return stats;
}

}  // namespace cardioreg::attributes
