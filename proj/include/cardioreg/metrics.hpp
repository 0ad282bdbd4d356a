#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cardioreg/attributes.hpp"
#include "cardioreg/consistency.hpp"
#include "cardioreg/image_ops.hpp"
#include "cardioreg/types.hpp"

namespace cardioreg::metrics {

/// LV, MYO, or their union (EPI).
enum class Region { lv = 0, myo, epi };

inline constexpr std::array<Region, 3> kAllRegions = {Region::lv, Region::myo, Region::epi};

std::string_view region_name(Region r);
imaging::Mask region_mask(const LabelMap& map, Region r);

/// 2|A n B| / (|A| + |B|); 1 when both are empty. Throws dimension_mismatch.
double dice(const LabelMap& a, const LabelMap& b, Region r);

struct SurfaceDistance {
  double hausdorff_mm = 0.0;
  double assd_mm = 0.0;
};

/// Boundary pixels are region pixels 4-adjacent to a non-region pixel or the
/// image border. Throws undefined_metric when either region is empty.
SurfaceDistance surface_distance(const LabelMap& a, const LabelMap& b, Region r);
double hausdorff(const LabelMap& a, const LabelMap& b, Region r);
double assd(const LabelMap& a, const LabelMap& b, Region r);

struct RegionMetrics {
  double dice = 1.0;
  std::optional<double> hd_mm;  // empty when a region is empty
  std::optional<double> assd_mm;
};

struct FrameMetrics {
  std::array<RegionMetrics, 3> regions{};

  const RegionMetrics& operator[](Region r) const { return regions[static_cast<std::size_t>(r)]; }
  RegionMetrics& operator[](Region r) { return regions[static_cast<std::size_t>(r)]; }
};

FrameMetrics frame_metrics(const LabelMap& pred, const LabelMap& gt);

/// 100 (A_ED - A_ES) / A_ED with ED and ES at the area maximum and minimum.
double ef_from_areas(std::span<const double> lv_area);

enum class Violation { lv_disconnected, myo_disconnected, lv_holes, myo_holes, lv_myo_detached, myo_open_beyond_base };

inline constexpr std::array<Violation, 6> kAllViolations = {
    Violation::lv_disconnected, Violation::myo_disconnected, Violation::lv_holes,
    Violation::myo_holes,       Violation::lv_myo_detached,  Violation::myo_open_beyond_base,
};

std::string_view violation_name(Violation v);

/// Subset of long-axis plausibility criteria; see README for definitions.
struct AnatomicalReport {
  std::vector<Violation> violations;

  bool plausible() const { return violations.empty(); }
  bool has(Violation v) const;
};

AnatomicalReport anatomical_check(const LabelMap& mask);

/// Per-pixel temporal Gaussian on one-hot labels followed by argmax. Default
/// sigma is T / 20; sigma 0 returns the input.
SegSequence gaussian_baseline(const SegSequence& seq, std::optional<double> sigma = std::nullopt);

struct RegionSummary {
  double mean_dice = 0.0;
  std::optional<double> mean_hd_mm;  // over frames where defined
  std::optional<double> mean_assd_mm;
};

struct Evaluation {
  std::vector<FrameMetrics> frames;
  std::array<RegionSummary, 3> summary{};
  double ef_pred = 0.0;
  double ef_gt = 0.0;
  double ef_abs_error = 0.0;
  std::vector<AnatomicalReport> anatomy;
  std::size_t anatomical_error_frames = 0;
  std::optional<consistency::ConsistencyReport> consistency;

  const RegionSummary& operator[](Region r) const { return summary[static_cast<std::size_t>(r)]; }
};

/// Throws length_mismatch or dimension_mismatch. The consistency report is
/// filled when both `tau` and `stats` are given.
Evaluation evaluate_pair(const SegSequence& pred, const SegSequence& gt,
                         const consistency::Thresholds* tau = nullptr,
                         const attributes::NormalizationStats* stats = nullptr);

std::string evaluation_json(const Evaluation& e, int indent = 2);
/// One row per frame; `t` is the frame index normalized to [0, 1].
void write_frame_csv(const Evaluation& e, const std::filesystem::path& path);

}  // namespace cardioreg::metrics
