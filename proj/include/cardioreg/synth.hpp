#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cardioreg/codec.hpp"
#include "cardioreg/types.hpp"

namespace cardioreg::synth {

/// One attribute's end-diastole and end-systole values.
struct Endpoints {
  double ed = 0.0;
  double es = 0.0;
};

struct CycleParams {
  int frames = 40;
  double lv_area_ed = 3600.0;
  double lv_area_es = 2200.0;
  double es_fraction = 0.35;
  Endpoints base_width{44.0, 36.0};
  Endpoints length{92.0, 80.0};
  Endpoints orientation{0.0, 2.0};
  Endpoints myo_area{2000.0, 2100.0};
  Endpoints epi_cx{76.8, 76.8};
  Endpoints epi_cy{82.0, 77.0};
  /// Residual coefficients at ED.
  std::array<double, kResidualDims> residuals{};
  /// Per-coefficient change from ED to ES.
  std::array<double, kResidualDims> residual_drift{};
  std::uint64_t seed = 0;
  codec::CodecModel model{};

  /// Throws invalid_argument when the invariants do not hold.
  void validate() const;
};

/// 0 at ED (first and last frame), 1 at ES, raised-cosine in between with
/// zero slope at the ends and at ES.
double cycle_waveform(double phase, double es_fraction);

/// Parameters jittered around the defaults by `seed`.
CycleParams random_cycle_params(std::uint64_t seed, int frames = 40);

struct Cycle {
  SegSequence sequence;
  std::vector<AttributeSeries> attributes;  // analytic, raw
  LatentTrajectory latents;
};

Cycle gen_cycle(const CycleParams& params);

enum class CorruptionKind { attribute_spike, frame_shift, blob_dropout, contour_jitter };

std::string_view corruption_name(CorruptionKind k);
std::optional<CorruptionKind> corruption_from_name(std::string_view name);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::attribute_spike;
  /// Spike: raw attribute units (signed, the sign is kept). Shift: pixels.
  /// Dropout: disk radius in pixels. Jitter: std of residual noise.
  double magnitude = 0.0;
  std::vector<std::size_t> frames;
  Attribute attribute = Attribute::lv_area;
  /// Shift direction in pixels per unit magnitude; vertical by default.
  double shift_dx = 0.0;
  double shift_dy = 1.0;
  std::uint64_t seed = 0;
};

/// Returns a copy of `seq` with `spec` applied to its frames.
SegSequence corrupt(const SegSequence& seq, const CorruptionSpec& spec, const codec::CodecModel& model);

/// Spikes, plateaus and shifts on a few frames plus contour jitter on all
/// frames. `raw_tau[a]` is one threshold expressed in raw units of `a`.
std::vector<CorruptionSpec> random_corruptions(std::uint64_t seed, int frames,
                                               const std::array<double, kNumAttributes>& raw_tau);

SegSequence apply_corruptions(const SegSequence& seq, const std::vector<CorruptionSpec>& specs,
                              const codec::CodecModel& model);

}  // namespace cardioreg::synth
