#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cardioreg/synth.hpp"
#include "cardioreg/types.hpp"

namespace testing {

using cardioreg::Label;
using cardioreg::LabelMap;
using cardioreg::Spacing;

/// Fills the axis-aligned rectangle [x0, x1) x [y0, y1).
inline void fill_rect(LabelMap& m, int x0, int y0, int x1, int y1, Label v) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.set(x, y, v);
}

inline void fill_disk(LabelMap& m, double cx, double cy, double r, Label v) {
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy <= r * r) m.set(x, y, v);
    }
}

/// LV rectangle [x0, x1) x [y0, y1) opened at the top, wrapped in a MYO
/// band of `t` pixels on the other three sides.
inline LabelMap u_shape(int w, int h, int x0, int y0, int x1, int y1, int t, Spacing sp = {1.0, 1.0}) {
  LabelMap m(w, h, sp);
  fill_rect(m, x0 - t, y0, x1 + t, y1 + t, Label::myo);
  fill_rect(m, x0, y0, x1, y1, Label::lv);
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cardioreg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> s(n);
  for (auto& v : s) v = u(rng);
  return s;
}

/// A valid latent: attributes somewhere along a random synthetic cycle and
/// small Gaussian residuals.
inline cardioreg::LatentVector random_latent(std::uint64_t seed, double residual_sd = 0.03) {
  using cardioreg::Attribute;
  const auto p = cardioreg::synth::random_cycle_params(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double w = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  auto lerp = [w](cardioreg::synth::Endpoints e) { return e.ed + (e.es - e.ed) * w; };
  cardioreg::LatentVector z{};
  z[0] = lerp({p.lv_area_ed, p.lv_area_es});
  z[1] = lerp(p.base_width);
  z[2] = lerp(p.length);
  z[3] = lerp(p.orientation);
  z[4] = lerp(p.myo_area);
  z[5] = lerp(p.epi_cx);
  z[6] = lerp(p.epi_cy);
  std::normal_distribution<double> g(0.0, residual_sd);
  for (int k = cardioreg::kNumAttributes; k < cardioreg::kLatentDims; ++k) z[static_cast<std::size_t>(k)] = g(rng);
  return z;
}

}  // namespace testing
