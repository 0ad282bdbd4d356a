#include "cardioreg/types.hpp"

#include <algorithm>

#include "cardioreg/error.hpp"

namespace cardioreg {

LabelMap::LabelMap(int width, int height, Spacing spacing, Label fill)
    : width_(width), height_(height), spacing_(spacing) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::invalid_argument, "label map must have positive size");
  labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 static_cast<std::uint8_t>(fill));
}

LabelMap::LabelMap(int width, int height, Spacing spacing, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), spacing_(spacing), labels_(std::move(labels)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::invalid_argument, "label map must have positive size");
  if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::dimension_mismatch, "label buffer does not match width*height");
  for (auto v : labels_)
    if (v > kMaxLabel) throw Error(ErrorCode::invalid_label, "label " + std::to_string(v) + " outside {0,1,2}");
}

std::size_t LabelMap::count(Label v) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), static_cast<std::uint8_t>(v)));
}

void validate_uniform_geometry(const SegSequence& seq) {
  if (seq.frames.empty()) return;
  const auto& first = seq.frames.front();
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    if (!seq.frames[t].same_geometry(first))
      throw Error(ErrorCode::dimension_mismatch, "frame " + std::to_string(t) + " geometry differs from frame 0");
  }
}

namespace {
constexpr std::array<std::string_view, kNumAttributes> kNames = {
    "lv_area", "lv_base_width", "lv_length", "lv_orientation", "myo_area", "epi_cx", "epi_cy",
};
}

std::string_view attribute_name(Attribute a) { return kNames[static_cast<std::size_t>(a)]; }

std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Attribute>(i);
  return std::nullopt;
}

std::string_view domain_name(Domain d) { return d == Domain::image ? "image" : "latent"; }

std::vector<double> LatentTrajectory::column(int j) const {
  std::vector<double> out(rows_.size());
  for (std::size_t t = 0; t < rows_.size(); ++t) out[t] = rows_[t][static_cast<std::size_t>(j)];
  return out;
}

void LatentTrajectory::set_column(int j, std::span<const double> values) {
  if (values.size() != rows_.size()) throw Error(ErrorCode::length_mismatch, "column length differs from trajectory");
  for (std::size_t t = 0; t < rows_.size(); ++t) rows_[t][static_cast<std::size_t>(j)] = values[t];
}

}  // namespace cardioreg
