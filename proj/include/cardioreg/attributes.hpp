#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cardioreg/image_ops.hpp"
#include "cardioreg/types.hpp"

namespace cardioreg::attributes {

/// Intermediate geometry behind an AttributeVector, kept for callers that
/// need the base/apex landmarks (codec, anatomical checks, plots).
struct ShapeLandmarks {
  imaging::Mask lv;  // largest 8-connected LV component
  std::vector<std::pair<int, int>> base_pixels;
  std::pair<int, int> base_a{};
  std::pair<int, int> base_b{};
  double base_mid_x = 0.0;  // mm
  double base_mid_y = 0.0;
  double apex_x = 0.0;
  double apex_y = 0.0;
};

/// Requires at least one LV and one MYO pixel, and an LV that touches the
/// background somewhere (the valve opening).
AttributeVector extract_attributes(const LabelMap& mask, ShapeLandmarks* landmarks = nullptr);

/// Seven image-domain series, in Attribute order. Errors carry the frame index.
std::vector<AttributeSeries> extract_series(const SegSequence& seq);

/// Splits per-frame vectors into the seven series.
std::vector<AttributeSeries> to_series(std::span<const AttributeVector> frames, Domain domain);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

/// Per-attribute (min, max) over a reference set in one domain.
struct NormalizationStats {
  Domain domain = Domain::image;
  std::array<std::optional<Range>, kNumAttributes> ranges{};

  const std::optional<Range>& operator[](Attribute a) const { return ranges[static_cast<std::size_t>(a)]; }
};

NormalizationStats compute_stats(std::span<const AttributeSeries> reference);

/// Min-max map onto [0, 1] for in-range values; no clamping.
AttributeSeries normalize_series(const AttributeSeries& s, const NormalizationStats& stats);
std::vector<double> normalize_values(std::span<const double> values, Attribute a, const NormalizationStats& stats);
std::vector<double> denormalize_values(std::span<const double> values, Attribute a, const NormalizationStats& stats);

void write_stats(const NormalizationStats& stats, const std::filesystem::path& path);
NormalizationStats read_stats(const std::filesystem::path& path, Domain domain);

}  // namespace cardioreg::attributes
