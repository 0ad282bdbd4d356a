#include "cardioreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cardioreg/attributes.hpp"
#include "cardioreg/error.hpp"
#include "cardioreg/image_ops.hpp"

namespace cardioreg::synth {

namespace {

double lerp(const Endpoints& e, double w) { return e.ed + (e.es - e.ed) * w; }

void check_frames(const std::vector<std::size_t>& frames, std::size_t length) {
  for (auto f : frames)
    if (f >= length)
      throw Error(ErrorCode::invalid_argument,
                  "corruption frame " + std::to_string(f) + " outside [0, " + std::to_string(length) + ")");
}

LabelMap shift_frame(const LabelMap& in, int dx, int dy) {
  LabelMap out(in.width(), in.height(), in.spacing());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      const int sx = x - dx;
      const int sy = y - dy;
      if (in.contains(sx, sy)) out.set(x, y, static_cast<Label>(in.at(sx, sy)));
    }
  return out;
}

LabelMap drop_blob(const LabelMap& in, double radius_px, std::mt19937_64& rng) {
  const auto fg = imaging::foreground_mask(in);
  const auto boundary = imaging::boundary_pixels(fg);
  if (boundary.empty()) return in;
  std::uniform_int_distribution<std::size_t> pick(0, boundary.size() - 1);
  const auto [cx, cy] = boundary[pick(rng)];
  LabelMap out = in;
  const int r = static_cast<int>(std::ceil(radius_px));
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x) {
      if (!out.contains(x, y)) continue;
      const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
      if (d2 <= radius_px * radius_px) out.set(x, y, Label::background);
    }
  return out;
}

codec::CodecModel frame_model(const codec::CodecModel& model, const LabelMap& frame) {
  codec::CodecModel m = model;
  m.width = frame.width();
  m.height = frame.height();
  m.spacing = frame.spacing();
  return m;
}

}  // namespace

void CycleParams::validate() const {
  if (frames < 8) throw Error(ErrorCode::invalid_argument, "cycle needs at least 8 frames");
  if (!(lv_area_es > 0.0) || !(lv_area_ed > lv_area_es))
    throw Error(ErrorCode::invalid_argument, "need lv_area_ed > lv_area_es > 0");
  if (!(es_fraction > 0.0 && es_fraction < 1.0)) throw Error(ErrorCode::invalid_argument, "es_fraction must lie in (0, 1)");
  model.validate();
}

double cycle_waveform(double phase, double es_fraction) {
  constexpr double pi = std::numbers::pi;
  if (phase <= es_fraction) return 0.5 * (1.0 - std::cos(pi * phase / es_fraction));
  return 0.5 * (1.0 + std::cos(pi * (phase - es_fraction) / (1.0 - es_fraction)));
}

CycleParams random_cycle_params(std::uint64_t seed, int frames) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);

  CycleParams p;
  p.frames = frames;
  p.seed = seed;
  p.lv_area_ed = uni(3300.0, 3900.0);
  p.lv_area_es = p.lv_area_ed * uni(0.55, 0.68);
  p.es_fraction = uni(0.3, 0.4);
  p.base_width.ed = uni(41.0, 47.0);
  p.base_width.es = p.base_width.ed * uni(0.8, 0.9);
  p.length.ed = uni(88.0, 96.0);
  p.length.es = p.length.ed * uni(0.85, 0.92);
  p.orientation.ed = uni(-8.0, 8.0);
  p.orientation.es = p.orientation.ed + uni(-3.0, 3.0);
  p.myo_area.ed = uni(1800.0, 2200.0);
  p.myo_area.es = p.myo_area.ed * uni(1.0, 1.08);
  p.epi_cx.ed = uni(72.0, 81.0);
  p.epi_cx.es = p.epi_cx.ed + uni(-1.5, 1.5);
  p.epi_cy.ed = uni(79.0, 85.0);
  p.epi_cy.es = p.epi_cy.ed - uni(3.0, 6.0);
  for (int k = 0; k < kResidualDims; ++k) {
    p.residuals[k] = 0.04 * gauss(rng) / (k + 1.0);
    p.residual_drift[k] = 0.05 * gauss(rng) / (k + 1.0);
  }
  return p;
}

Cycle gen_cycle(const CycleParams& params) {
  params.validate();
  const auto n = static_cast<std::size_t>(params.frames);
  std::vector<LatentVector> rows(n);
  std::vector<AttributeVector> attrs(n);
  const Endpoints area{params.lv_area_ed, params.lv_area_es};
  for (std::size_t t = 0; t < n; ++t) {
    const double w = cycle_waveform(static_cast<double>(t) / static_cast<double>(n - 1), params.es_fraction);
    AttributeVector a;
    a[Attribute::lv_area] = lerp(area, w);
    a[Attribute::lv_base_width] = lerp(params.base_width, w);
    a[Attribute::lv_length] = lerp(params.length, w);
    a[Attribute::lv_orientation] = lerp(params.orientation, w);
    a[Attribute::myo_area] = lerp(params.myo_area, w);
    a[Attribute::epi_cx] = lerp(params.epi_cx, w);
    a[Attribute::epi_cy] = lerp(params.epi_cy, w);
    attrs[t] = a;
    auto& z = rows[t];
    std::copy(a.values.begin(), a.values.end(), z.begin());
    for (int k = 0; k < kResidualDims; ++k)
      z[static_cast<std::size_t>(kNumAttributes + k)] = params.residuals[k] + params.residual_drift[k] * w;
  }
  Cycle c;
  c.latents = LatentTrajectory(std::move(rows));
  c.sequence = codec::decode_sequence(c.latents, params.model, "synth_" + std::to_string(params.seed));
  c.attributes = attributes::to_series(attrs, Domain::image);
  return c;
}

std::string_view corruption_name(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::attribute_spike: return "attribute_spike";
    case CorruptionKind::frame_shift: return "frame_shift";
    case CorruptionKind::blob_dropout: return "blob_dropout";
    case CorruptionKind::contour_jitter: return "contour_jitter";
  }
  return "unknown";
}

std::optional<CorruptionKind> corruption_from_name(std::string_view name) {
  for (auto k : {CorruptionKind::attribute_spike, CorruptionKind::frame_shift, CorruptionKind::blob_dropout,
                 CorruptionKind::contour_jitter})
    if (corruption_name(k) == name) return k;
  return std::nullopt;
}

SegSequence corrupt(const SegSequence& seq, const CorruptionSpec& spec, const codec::CodecModel& model) {
  check_frames(spec.frames, seq.frames.size());
  if (!std::isfinite(spec.magnitude)) throw Error(ErrorCode::invalid_argument, "corruption magnitude must be finite");
  if (spec.kind != CorruptionKind::attribute_spike && spec.magnitude < 0.0)
    throw Error(ErrorCode::invalid_argument, "corruption magnitude must be non-negative");
  SegSequence out = seq;
  if (spec.magnitude == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto t : spec.frames) {
    const LabelMap& frame = seq.frames[t];
    try {
      switch (spec.kind) {
        case CorruptionKind::attribute_spike: {
          const auto m = frame_model(model, frame);
          auto z = codec::encode(frame, m);
          z[static_cast<std::size_t>(index_of(spec.attribute))] += spec.magnitude;
          out.frames[t] = codec::decode(z, m);
          break;
        }
        case CorruptionKind::frame_shift: {
          const int dx = static_cast<int>(std::lround(spec.magnitude * spec.shift_dx));
          const int dy = static_cast<int>(std::lround(spec.magnitude * spec.shift_dy));
          out.frames[t] = shift_frame(frame, dx, dy);
          break;
        }
        case CorruptionKind::blob_dropout:
          out.frames[t] = drop_blob(frame, spec.magnitude, rng);
          break;
        case CorruptionKind::contour_jitter: {
          const auto m = frame_model(model, frame);
          auto z = codec::encode(frame, m);
          for (int k = kNumAttributes; k < kLatentDims; ++k) z[static_cast<std::size_t>(k)] += spec.magnitude * gauss(rng);
          out.frames[t] = codec::decode(z, m);
          break;
        }
      }
    } catch (const Error& e) {
      rethrow_with_frame(e, t);
    }
  }
  return out;
}

std::vector<CorruptionSpec> random_corruptions(std::uint64_t seed, int frames,
                                               const std::array<double, kNumAttributes>& raw_tau) {
  if (frames < 8) throw Error(ErrorCode::invalid_argument, "corruption plan needs at least 8 frames");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto uni_int = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };

  std::vector<CorruptionSpec> plan;
  std::vector<bool> used(static_cast<std::size_t>(frames), false);
  auto place = [&](int len) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int start = uni_int(1, frames - 1 - len);
      bool free = true;
      for (int t = start - 1; t <= start + len; ++t) free = free && !used[static_cast<std::size_t>(t)];
      if (!free) continue;
      std::vector<std::size_t> f;
      for (int t = start; t < start + len; ++t) {
        used[static_cast<std::size_t>(t)] = true;
        f.push_back(static_cast<std::size_t>(t));
      }
      return f;
    }
    return std::vector<std::size_t>{};
  };

  {
    CorruptionSpec s;
    s.kind = CorruptionKind::contour_jitter;
    s.magnitude = 0.03;
    for (int t = 0; t < frames; ++t) s.frames.push_back(static_cast<std::size_t>(t));
    s.seed = rng();
    plan.push_back(std::move(s));
  }
  const int spikes = uni_int(1, 2);
  for (int i = 0; i < spikes; ++i) {
    CorruptionSpec s;
    s.kind = CorruptionKind::attribute_spike;
    s.attribute = kAllAttributes[static_cast<std::size_t>(uni_int(0, kNumAttributes - 1))];
    const double sign = uni(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    s.magnitude = sign * uni(3.0, 5.0) * raw_tau[static_cast<std::size_t>(index_of(s.attribute))];
    s.frames = place(uni_int(1, 4));
    s.seed = rng();
    if (!s.frames.empty()) plan.push_back(std::move(s));
  }
  {
    CorruptionSpec s;
    s.kind = CorruptionKind::frame_shift;
    s.magnitude = static_cast<double>(uni_int(4, 8));
    s.shift_dy = uni(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    s.frames = place(uni_int(1, 3));
    s.seed = rng();
    if (!s.frames.empty()) plan.push_back(std::move(s));
  }
  return plan;
}

SegSequence apply_corruptions(const SegSequence& seq, const std::vector<CorruptionSpec>& specs,
                              const codec::CodecModel& model) {
  SegSequence out = seq;
  for (const auto& s : specs) out = corrupt(out, s, model);
  return out;
}

}  // namespace cardioreg::synth
