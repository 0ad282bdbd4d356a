#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cardioreg/types.hpp"

namespace cardioreg::imaging {

/// Binary raster with the same row-major layout as LabelMap.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  /// Out-of-image reads are false.
  bool get(int x, int y) const { return inside(x, y) && at(x, y); }
  std::size_t count() const;
};

enum class Connectivity { four, eight };

Mask class_mask(const LabelMap& map, Label label);
/// LV or MYO: the epicardial region.
Mask foreground_mask(const LabelMap& map);

struct Components {
  std::vector<int> labels;  // -1 for pixels outside the mask
  std::vector<std::size_t> sizes;

  int count() const { return static_cast<int>(sizes.size()); }
};

Components connected_components(const Mask& mask, Connectivity conn);

/// Largest component; ties go to the one met first in row-major order.
Mask largest_component(const Mask& mask, Connectivity conn);

/// Number of 4-connected regions of the complement that do not reach the image border.
int count_holes(const Mask& mask);

/// Region pixels 4-adjacent to a non-region pixel; the image border counts as outside.
std::vector<std::pair<int, int>> boundary_pixels(const Mask& mask);

/// Squared Euclidean distance (mm^2) from every pixel centre to the nearest
/// feature pixel centre. Pixels get +inf when there are no features.
std::vector<double> squared_distance_transform(const Mask& features, double sx, double sy);

}  // namespace cardioreg::imaging
