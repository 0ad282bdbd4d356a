#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cardioreg/attributes.hpp"
#include "cardioreg/types.hpp"

namespace cardioreg::consistency {

inline constexpr double kDefaultSafety = 1.25;
inline constexpr double kDefaultFloor = 1e-3;

/// Per-attribute upper bound on |second difference| of a normalized series.
struct Thresholds {
  std::array<std::optional<double>, kNumAttributes> tau{};
  double floor = kDefaultFloor;

  bool has(Attribute a) const { return tau[static_cast<std::size_t>(a)].has_value(); }
  /// Throws missing_threshold when `a` has no tau.
  double at(Attribute a) const;
  void set(Attribute a, double value);
};

/// s[t+1] + s[t-1] - 2 s[t] with the ends replicated (s[-1] = s[0], s[T] = s[T-1]).
std::vector<double> laplacian(std::span<const double> s);
std::vector<double> laplacian(const AttributeSeries& s);

std::vector<bool> indicator(std::span<const double> s, double tau);
std::vector<bool> indicator(const AttributeSeries& s, const Thresholds& tau);
bool any_flag(std::span<const double> s, double tau);

/// tau_a = max(safety * max_reference |laplacian|, floor), per attribute present
/// in the reference.
Thresholds calibrate_thresholds(std::span<const AttributeSeries> reference, double safety = kDefaultSafety,
                                double floor = kDefaultFloor);

struct AttributeReport {
  Attribute attribute = Attribute::lv_area;
  double tau = 0.0;
  std::vector<double> laplacian;
  std::vector<bool> flags;
  std::size_t flagged_frames = 0;
};

struct ConsistencyReport {
  std::vector<AttributeReport> attributes;
  std::size_t frames = 0;
  bool any_inconsistent = false;
  /// Mean over attributes and frames of |laplacian| / tau.
  double ratio_stat = 0.0;

  std::size_t flagged_frame_count() const;  // frames with a flag on any attribute
};

ConsistencyReport report(std::span<const AttributeSeries> normalized, const Thresholds& tau);

/// Normalizes raw series with `stats`, then reports.
ConsistencyReport check(std::span<const AttributeSeries> raw, const attributes::NormalizationStats& stats,
                        const Thresholds& tau);

void write_thresholds(const Thresholds& tau, const std::filesystem::path& path);
Thresholds read_thresholds(const std::filesystem::path& path);

std::string report_json(const ConsistencyReport& r, int indent = 2);
/// `frame,<attr>_lap,<attr>_flag,...` one row per frame.
void write_flags_csv(const ConsistencyReport& r, const std::filesystem::path& path);

}  // namespace cardioreg::consistency
