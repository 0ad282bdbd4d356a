#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cardioreg {

/// Class codes stored in a label map.
enum class Label : std::uint8_t { background = 0, lv = 1, myo = 2 };

inline constexpr std::uint8_t kMaxLabel = 2;

/// Physical pixel size in millimetres.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;

  bool operator==(const Spacing&) const = default;
};

/// One 2D frame of class labels, row-major, origin at the top-left pixel.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, Spacing spacing, Label fill = Label::background);
  LabelMap(int width, int height, Spacing spacing, std::vector<std::uint8_t> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Spacing spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::uint8_t at(int x, int y) const { return labels_[index(x, y)]; }
  void set(int x, int y, Label v) { labels_[index(x, y)] = static_cast<std::uint8_t>(v); }
  bool is(int x, int y, Label v) const { return at(x, y) == static_cast<std::uint8_t>(v); }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::span<std::uint8_t> labels() noexcept { return labels_; }

  /// Pixel-centre coordinates in millimetres.
  double x_mm(int x) const noexcept { return (x + 0.5) * spacing_.sx; }
  double y_mm(int y) const noexcept { return (y + 0.5) * spacing_.sy; }

  bool same_geometry(const LabelMap& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && spacing_ == other.spacing_;
  }

  std::size_t count(Label v) const;

  bool operator==(const LabelMap&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  Spacing spacing_{};
  std::vector<std::uint8_t> labels_;
};

/// Frames of one cardiac cycle sharing a single geometry.
struct SegSequence {
  std::string patient_id;
  std::vector<LabelMap> frames;
  std::optional<double> frame_period_s;

  std::size_t length() const noexcept { return frames.size(); }
};

/// Throws dimension_mismatch unless every frame shares the first frame's geometry.
void validate_uniform_geometry(const SegSequence& seq);

enum class Attribute : int {
  lv_area = 0,
  lv_base_width,
  lv_length,
  lv_orientation,
  myo_area,
  epi_cx,
  epi_cy,
};

inline constexpr int kNumAttributes = 7;

inline constexpr std::array<Attribute, kNumAttributes> kAllAttributes = {
    Attribute::lv_area,  Attribute::lv_base_width, Attribute::lv_length, Attribute::lv_orientation,
    Attribute::myo_area, Attribute::epi_cx,        Attribute::epi_cy,
};

std::string_view attribute_name(Attribute a);
std::optional<Attribute> attribute_from_name(std::string_view name);
constexpr int index_of(Attribute a) { return static_cast<int>(a); }

/// Seven shape attributes of one frame: mm^2 for areas, mm for lengths and
/// centroids, degrees for the orientation.
struct AttributeVector {
  std::array<double, kNumAttributes> values{};

  double& operator[](Attribute a) { return values[static_cast<std::size_t>(a)]; }
  double operator[](Attribute a) const { return values[static_cast<std::size_t>(a)]; }
};

enum class Domain { image, latent };

std::string_view domain_name(Domain d);

/// Per-frame values of one attribute over a sequence.
struct AttributeSeries {
  Attribute attribute = Attribute::lv_area;
  std::vector<double> values;
  Domain domain = Domain::image;
  bool normalized = false;
};

inline constexpr int kLatentDims = 16;
inline constexpr int kResidualDims = kLatentDims - kNumAttributes;

using LatentVector = std::array<double, kLatentDims>;

/// T x 16 codec coordinates. Columns 0-6 follow the Attribute order,
/// columns 7-15 hold residual shape coefficients.
class LatentTrajectory {
 public:
  LatentTrajectory() = default;
  explicit LatentTrajectory(std::vector<LatentVector> rows) : rows_(std::move(rows)) {}

  std::size_t length() const noexcept { return rows_.size(); }
  const std::vector<LatentVector>& rows() const noexcept { return rows_; }
  std::vector<LatentVector>& rows() noexcept { return rows_; }
  const LatentVector& operator[](std::size_t t) const { return rows_[t]; }
  LatentVector& operator[](std::size_t t) { return rows_[t]; }

  std::vector<double> column(int j) const;
  void set_column(int j, std::span<const double> values);

  bool operator==(const LatentTrajectory&) const = default;

 private:
  std::vector<LatentVector> rows_;
};

}  // namespace cardioreg
