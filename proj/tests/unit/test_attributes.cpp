#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "cardioreg/attributes.hpp"
#include "cardioreg/error.hpp"
#include "helpers.hpp"

using namespace cardioreg;
using attributes::extract_attributes;

namespace {

/// Rasterized LV rectangle of width w and length l (mm) whose apex direction
/// is (-sin theta, cos theta), wrapped by MYO of thickness t except at the base.
LabelMap rotated_u(double theta_deg, double w, double l, double t, Spacing sp) {
  const double th = theta_deg * std::numbers::pi / 180.0;
  const double ax = -std::sin(th);
  const double ay = std::cos(th);
  LabelMap m(160, 160, sp);
  const double bx = 80.0 * sp.sx;
  const double by = 40.0 * sp.sy;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const double px = m.x_mm(x) - bx;
      const double py = m.y_mm(y) - by;
      const double v = px * ax + py * ay;   // along the axis
      const double u = -px * ay + py * ax;  // lateral
      if (v >= 0.0 && v <= l && std::abs(u) <= w / 2.0)
        m.set(x, y, Label::lv);
      else if (v >= 0.0 && v <= l + t && std::abs(u) <= w / 2.0 + t)
        m.set(x, y, Label::myo);
    }
  return m;
}

LabelMap shifted(const LabelMap& m, int dx, int dy) {
  LabelMap out(m.width(), m.height(), m.spacing());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.contains(x + dx, y + dy)) out.set(x + dx, y + dy, static_cast<Label>(m.at(x, y)));
  return out;
}

}  // namespace

TEST_CASE("disk LV area matches the pixel-count oracle") {
  LabelMap m(64, 64, {1.0, 1.0});
  testing::fill_disk(m, 32.0, 32.0, 24.0, Label::myo);
  testing::fill_rect(m, 0, 0, 64, 32, Label::background);
  testing::fill_disk(m, 32.0, 32.0, 20.0, Label::lv);
  const auto a = extract_attributes(m);
  CHECK(a[Attribute::lv_area] == doctest::Approx(std::numbers::pi * 400.0).epsilon(0.02));
  CHECK(a[Attribute::myo_area] == doctest::Approx(static_cast<double>(m.count(Label::myo))));
}

TEST_CASE("axis-aligned rectangle opened at the top") {
  const auto m = testing::u_shape(40, 50, 15, 5, 25, 35, 3);
  const auto a = extract_attributes(m);
  CHECK(std::abs(a[Attribute::lv_base_width] - 10.0) <= 1.5);
  CHECK(a[Attribute::lv_orientation] == doctest::Approx(0.0));
  CHECK(a[Attribute::lv_area] == doctest::Approx(300.0));
  // base midpoint is on the top row; farthest boundary pixel is a bottom corner
  CHECK(a[Attribute::lv_length] == doctest::Approx(std::hypot(4.5, 29.0)));
}

TEST_CASE("anisotropic spacing scales areas and centroids") {
  const auto m = testing::u_shape(40, 50, 15, 5, 25, 35, 3, {0.5, 2.0});
  const auto a = extract_attributes(m);
  CHECK(a[Attribute::lv_area] == doctest::Approx(300.0));
  double cx = 0.0;
  double cy = 0.0;
  int n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y) != 0) {
        cx += (x + 0.5) * 0.5;
        cy += (y + 0.5) * 2.0;
        ++n;
      }
  CHECK(a[Attribute::epi_cx] == doctest::Approx(cx / n));
  CHECK(a[Attribute::epi_cy] == doctest::Approx(cy / n));
}

TEST_CASE("extraction errors") {
  LabelMap empty(10, 10, {1.0, 1.0});
  try {
    (void)extract_attributes(empty);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::attribute_extraction);
  }

  LabelMap no_myo(10, 10, {1.0, 1.0});
  testing::fill_rect(no_myo, 2, 2, 6, 6, Label::lv);
  CHECK_THROWS_AS(extract_attributes(no_myo), Error);

  LabelMap enclosed(20, 20, {1.0, 1.0});
  testing::fill_rect(enclosed, 3, 3, 17, 17, Label::myo);
  testing::fill_rect(enclosed, 6, 6, 14, 14, Label::lv);
  try {
    (void)extract_attributes(enclosed);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_base);
  }
}

TEST_CASE("orientation of rotated shapes") {
  for (double theta : {-30.0, 0.0, 30.0}) {
    const auto a = extract_attributes(rotated_u(theta, 20.0, 50.0, 5.0, {1.0, 1.0}));
    CHECK(std::abs(a[Attribute::lv_orientation] - theta) <= 3.0);
  }
}

TEST_CASE("property: integral translation covariance") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(-12, 12);
  const Spacing sp{0.7, 0.4};
  const auto base = rotated_u(12.0, 18.0, 30.0, 4.0, sp);
  const auto a0 = extract_attributes(base);
  for (int i = 0; i < 20; ++i) {
    const int dx = d(rng);
    const int dy = d(rng);
    const auto a1 = extract_attributes(shifted(base, dx, dy));
    CHECK(a1[Attribute::epi_cx] == doctest::Approx(a0[Attribute::epi_cx] + dx * sp.sx));
    CHECK(a1[Attribute::epi_cy] == doctest::Approx(a0[Attribute::epi_cy] + dy * sp.sy));
    for (auto a : {Attribute::lv_area, Attribute::myo_area, Attribute::lv_base_width, Attribute::lv_length,
                   Attribute::lv_orientation})
      CHECK(a1[a] == doctest::Approx(a0[a]));
  }
}

TEST_CASE("property: area additivity") {
  for (double theta : {-20.0, 5.0, 25.0}) {
    const Spacing sp{0.6, 0.8};
    const auto m = rotated_u(theta, 16.0, 40.0, 6.0, sp);
    const auto a = extract_attributes(m);
    const double epi = static_cast<double>(m.count(Label::lv) + m.count(Label::myo)) * sp.sx * sp.sy;
    CHECK(a[Attribute::lv_area] + a[Attribute::myo_area] == doctest::Approx(epi));
  }
}

TEST_CASE("extract_series") {
  SegSequence seq;
  for (int t = 0; t < 3; ++t) seq.frames.push_back(testing::u_shape(30, 30, 10, 4, 20, 20, 3));
  const auto series = attributes::extract_series(seq);
  REQUIRE(series.size() == 7);
  for (const auto& s : series) {
    CHECK(s.domain == Domain::image);
    CHECK_FALSE(s.normalized);
    REQUIRE(s.values.size() == 3);
    CHECK(s.values[0] == s.values[1]);
    CHECK(s.values[1] == s.values[2]);
  }

  for (int t = 3; t < 7; ++t) seq.frames.push_back(testing::u_shape(30, 30, 10, 4, 20, 20, 3));
  seq.frames[5] = LabelMap(30, 30, {1.0, 1.0});
  try {
    (void)attributes::extract_series(seq);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("frame 5") != std::string::npos);
    CHECK(e.code() == ErrorCode::attribute_extraction);
  }
}

TEST_CASE("compute_stats") {
  const std::vector<AttributeSeries> one{{Attribute::lv_area, {1.0, 3.0, 2.0}, Domain::image, false}};
  auto st = attributes::compute_stats(one);
  REQUIRE(st[Attribute::lv_area].has_value());
  CHECK(st[Attribute::lv_area]->min == 1.0);
  CHECK(st[Attribute::lv_area]->max == 3.0);
  CHECK_FALSE(st[Attribute::myo_area].has_value());

  const std::vector<AttributeSeries> two{{Attribute::epi_cx, {0.0, 1.0}, Domain::image, false},
                                         {Attribute::epi_cx, {-1.0, 0.5}, Domain::image, false}};
  st = attributes::compute_stats(two);
  CHECK(st[Attribute::epi_cx]->min == -1.0);
  CHECK(st[Attribute::epi_cx]->max == 1.0);

  CHECK_THROWS_AS(attributes::compute_stats(std::vector<AttributeSeries>{}), Error);
  const std::vector<AttributeSeries> mixed{{Attribute::epi_cx, {0.0}, Domain::image, false},
                                           {Attribute::epi_cy, {0.0}, Domain::latent, false}};
  try {
    (void)attributes::compute_stats(mixed);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::mixed_domains);
  }
}

TEST_CASE("normalize_series") {
  const std::vector<AttributeSeries> ref{{Attribute::lv_area, {0.0, 2.0}, Domain::image, false}};
  const auto st = attributes::compute_stats(ref);
  auto out = attributes::normalize_series({Attribute::lv_area, {0.0, 1.0, 2.0}, Domain::image, false}, st);
  CHECK(out.normalized);
  CHECK(out.values == std::vector<double>{0.0, 0.5, 1.0});
  out = attributes::normalize_series({Attribute::lv_area, {-1.0, 3.0}, Domain::image, false}, st);
  CHECK(out.values == std::vector<double>{-0.5, 1.5});

  const std::vector<AttributeSeries> flat{{Attribute::lv_area, {5.0, 5.0, 5.0}, Domain::image, false}};
  try {
    (void)attributes::normalize_series(flat[0], attributes::compute_stats(flat));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_stats);
  }
}

TEST_CASE("property: normalization is affine and order preserving") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto values = testing::random_series(rng, 25, -300.0, 800.0);
    const std::vector<AttributeSeries> ref{{Attribute::myo_area, testing::random_series(rng, 10, -100.0, 100.0),
                                            Domain::latent, false}};
    const auto st = attributes::compute_stats(ref);
    const auto out = attributes::normalize_values(values, Attribute::myo_area, st);
    std::vector<std::size_t> i_in(values.size());
    std::vector<std::size_t> i_out(values.size());
    std::iota(i_in.begin(), i_in.end(), 0);
    std::iota(i_out.begin(), i_out.end(), 0);
    std::stable_sort(i_in.begin(), i_in.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::stable_sort(i_out.begin(), i_out.end(), [&](auto a, auto b) { return out[a] < out[b]; });
    CHECK(i_in == i_out);
    // affine: second differences scale by 1 / (max - min)
    const double range = st[Attribute::myo_area]->max - st[Attribute::myo_area]->min;
    for (std::size_t t = 1; t + 1 < values.size(); ++t)
      CHECK(out[t + 1] + out[t - 1] - 2 * out[t] ==
            doctest::Approx((values[t + 1] + values[t - 1] - 2 * values[t]) / range));
    const auto back = attributes::denormalize_values(out, Attribute::myo_area, st);
    for (std::size_t t = 0; t < values.size(); ++t) CHECK(back[t] == doctest::Approx(values[t]));
  }
}

TEST_CASE("stats JSON round trip") {
  const auto dir = testing::temp_dir("stats");
  const std::vector<AttributeSeries> ref{{Attribute::lv_area, {1.5, 7.25}, Domain::latent, false},
                                         {Attribute::epi_cy, {-3.0, 4.0}, Domain::latent, false}};
  const auto st = attributes::compute_stats(ref);
  attributes::write_stats(st, dir / "stats.json");
  const auto back = attributes::read_stats(dir / "stats.json", Domain::latent);
  CHECK(back.domain == Domain::latent);
  CHECK(back[Attribute::lv_area]->min == 1.5);
  CHECK(back[Attribute::lv_area]->max == 7.25);
  CHECK(back[Attribute::epi_cy]->min == -3.0);
  CHECK_FALSE(back[Attribute::myo_area].has_value());
}
