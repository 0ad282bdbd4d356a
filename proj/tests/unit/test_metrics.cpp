#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cardioreg/attributes.hpp"
#include "cardioreg/error.hpp"
#include "cardioreg/metrics.hpp"
#include "cardioreg/synth.hpp"
#include "helpers.hpp"

using namespace cardioreg;
using metrics::Region;
using metrics::Violation;

namespace {

LabelMap square(int x0, int y0, int side, Label l = Label::lv, Spacing sp = {1.0, 1.0}) {
  LabelMap m(40, 40, sp);
  testing::fill_rect(m, x0, y0, x0 + side, y0 + side, l);
  return m;
}

bool on_boundary(const LabelMap& m, int x, int y, Label l) {
  if (!m.is(x, y, l)) return false;
  if (x == 0 || y == 0 || x == m.width() - 1 || y == m.height() - 1) return true;
  return !m.is(x + 1, y, l) || !m.is(x - 1, y, l) || !m.is(x, y + 1, l) || !m.is(x, y - 1, l);
}

/// Hausdorff distance over boundary pixels by exhaustive pairing.
double hausdorff_oracle(const LabelMap& a, const LabelMap& b, Label l) {
  std::vector<std::pair<double, double>> pa;
  std::vector<std::pair<double, double>> pb;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (on_boundary(a, x, y, l)) pa.emplace_back(a.x_mm(x), a.y_mm(y));
      if (on_boundary(b, x, y, l)) pb.emplace_back(b.x_mm(x), b.y_mm(y));
    }
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, std::hypot(p.first - q.first, p.second - q.second));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

LabelMap random_blob(std::mt19937_64& rng, Spacing sp) {
  std::uniform_real_distribution<double> c(12.0, 28.0);
  std::uniform_real_distribution<double> r(3.0, 9.0);
  LabelMap m(40, 40, sp);
  testing::fill_disk(m, c(rng), c(rng), r(rng), Label::lv);
  testing::fill_disk(m, c(rng), c(rng), r(rng), Label::lv);
  return m;
}

SegSequence repeat(const LabelMap& m, std::size_t n) {
  SegSequence s;
  s.frames.assign(n, m);
  return s;
}

}  // namespace

TEST_CASE("dice examples") {
  const auto a = square(5, 5, 10);
  CHECK(metrics::dice(a, a, Region::lv) == 1.0);
  CHECK(metrics::dice(a, square(25, 25, 10), Region::lv) == 0.0);
  CHECK(metrics::dice(a, square(10, 5, 10), Region::lv) == doctest::Approx(0.5));
  const LabelMap empty(40, 40, {1.0, 1.0});
  CHECK(metrics::dice(empty, empty, Region::myo) == 1.0);
}

TEST_CASE("dice and surface distances reject mismatched geometry") {
  const auto a = square(5, 5, 10);
  try {
    (void)metrics::dice(a, square(5, 5, 10, Label::lv, {1.0, 2.0}), Region::lv);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension_mismatch);
  }
  try {
    (void)metrics::hausdorff(a, LabelMap(40, 40, {1.0, 1.0}), Region::lv);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_metric);
  }
}

TEST_CASE("surface distance examples") {
  const auto a = square(5, 5, 10);
  CHECK(metrics::hausdorff(a, a, Region::lv) == 0.0);
  CHECK(metrics::assd(a, a, Region::lv) == 0.0);

  LabelMap p(40, 40, {1.0, 1.0});
  LabelMap q(40, 40, {1.0, 1.0});
  p.set(10, 10, Label::lv);
  q.set(13, 10, Label::lv);
  CHECK(metrics::hausdorff(p, q, Region::lv) == doctest::Approx(3.0));
  CHECK(metrics::assd(p, q, Region::lv) == doctest::Approx(3.0));

  // concentric squares, sides 20 and 10: every outer boundary pixel is 5 from the inner one
  const auto outer = square(10, 10, 20);
  const auto inner = square(15, 15, 10);
  CHECK(metrics::hausdorff(outer, inner, Region::lv) == doctest::Approx(hausdorff_oracle(outer, inner, Label::lv)));
  CHECK(metrics::hausdorff(outer, inner, Region::lv) == doctest::Approx(5.0 * std::sqrt(2.0)));
}

TEST_CASE("property: surface distances against exhaustive search") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const Spacing sp{trial % 2 ? 0.7 : 1.0, trial % 3 ? 1.3 : 1.0};
    const auto a = random_blob(rng, sp);
    const auto b = random_blob(rng, sp);
    const auto ab = metrics::surface_distance(a, b, Region::lv);
    const auto ba = metrics::surface_distance(b, a, Region::lv);
    CHECK(ab.hausdorff_mm == doctest::Approx(hausdorff_oracle(a, b, Label::lv)));
    CHECK(ab.hausdorff_mm == doctest::Approx(ba.hausdorff_mm));
    CHECK(ab.assd_mm == doctest::Approx(ba.assd_mm));
    CHECK(ab.assd_mm <= ab.hausdorff_mm + 1e-12);
    CHECK(metrics::dice(a, b, Region::lv) == doctest::Approx(metrics::dice(b, a, Region::lv)));
  }
}

TEST_CASE("frame metrics leave distances undefined for empty regions") {
  const auto a = square(5, 5, 10);
  const auto fm = metrics::frame_metrics(a, a);
  CHECK(fm[Region::lv].dice == 1.0);
  CHECK(fm[Region::lv].hd_mm == 0.0);
  CHECK(fm[Region::myo].dice == 1.0);
  CHECK_FALSE(fm[Region::myo].hd_mm.has_value());
  CHECK(fm[Region::epi].hd_mm == 0.0);
}

TEST_CASE("ejection fraction") {
  CHECK(metrics::ef_from_areas(std::vector<double>{100, 60, 100}) == doctest::Approx(40.0));
  CHECK(metrics::ef_from_areas(std::vector<double>(10, 55.0)) == 0.0);
  CHECK_THROWS_AS(metrics::ef_from_areas(std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(metrics::ef_from_areas(std::vector<double>{0.0, 0.0}), Error);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testing::random_series(rng, 12, 10.0, 100.0);
    auto scaled = s;
    for (auto& v : scaled) v *= 3.7;
    CHECK(metrics::ef_from_areas(scaled) == doctest::Approx(metrics::ef_from_areas(s)));
    const double ef = metrics::ef_from_areas(s);
    CHECK(ef >= 0.0);
    CHECK(ef < 100.0);
  }
}

TEST_CASE("ejection fraction of a synthetic cycle") {
  synth::CycleParams p;
  const double k = 1.58;
  p.model.spacing = {0.8, 0.8};
  p.lv_area_ed = 9000.0;
  p.lv_area_es = 5400.0;
  p.base_width = {44.0 * k, 36.0 * k};
  p.length = {92.0 * k, 80.0 * k};
  p.myo_area = {2000.0 * k * k, 2100.0 * k * k};
  p.epi_cx = {102.4, 102.4};
  p.epi_cy = {104.0, 98.0};
  const auto c = synth::gen_cycle(p);
  const auto series = attributes::extract_series(c.sequence);
  CHECK(metrics::ef_from_areas(series[0].values) == doctest::Approx(40.0).epsilon(0.025));
}

TEST_CASE("anatomical check") {
  const auto ok = testing::u_shape(60, 60, 20, 10, 40, 40, 4);
  CHECK(metrics::anatomical_check(ok).plausible());

  auto holed = ok;
  holed.set(30, 25, Label::background);
  CHECK(metrics::anatomical_check(holed).has(Violation::lv_holes));

  auto island = ok;
  island.set(30, 25, Label::myo);
  CHECK(metrics::anatomical_check(island).has(Violation::lv_holes));

  auto split = ok;
  testing::fill_rect(split, 5, 50, 8, 53, Label::lv);
  CHECK(metrics::anatomical_check(split).has(Violation::lv_disconnected));

  auto two_myo = ok;
  testing::fill_rect(two_myo, 50, 5, 53, 8, Label::myo);
  CHECK(metrics::anatomical_check(two_myo).has(Violation::myo_disconnected));

  auto myo_hole = ok;
  myo_hole.set(17, 30, Label::background);
  const auto r = metrics::anatomical_check(myo_hole);
  CHECK(r.has(Violation::myo_holes));
  CHECK_FALSE(r.has(Violation::lv_holes));

  // LV running into the image border has no wall there
  LabelMap cut(60, 40, {1.0, 1.0});
  testing::fill_rect(cut, 16, 10, 44, 40, Label::myo);
  testing::fill_rect(cut, 20, 10, 40, 40, Label::lv);
  CHECK(metrics::anatomical_check(cut).has(Violation::lv_myo_detached));

  // MYO closed over the base
  auto closed = ok;
  testing::fill_rect(closed, 16, 6, 44, 10, Label::myo);
  CHECK(metrics::anatomical_check(closed).has(Violation::myo_open_beyond_base));

  for (auto v : metrics::kAllViolations) CHECK_FALSE(metrics::violation_name(v).empty());
}

TEST_CASE("gaussian baseline") {
  const auto frame = testing::u_shape(40, 40, 10, 5, 30, 30, 3);
  const auto constant = repeat(frame, 10);
  CHECK(metrics::gaussian_baseline(constant).frames == constant.frames);

  auto flicker = repeat(frame, 20);
  flicker.frames[9] = LabelMap(40, 40, {1.0, 1.0});
  const auto fixed = metrics::gaussian_baseline(flicker, 1.0);
  CHECK(fixed.frames[9] == frame);

  CHECK(metrics::gaussian_baseline(flicker, 0.0).frames == flicker.frames);

  // a 20-pixel blob on one frame of 40 loses the vote at the default sigma of 2
  auto blob = repeat(frame, 40);
  testing::fill_rect(blob.frames[20], 34, 30, 39, 34, Label::lv);
  const auto smoothed = metrics::gaussian_baseline(blob);
  for (const auto& f : smoothed.frames) CHECK(f == frame);
  CHECK_THROWS_AS(metrics::gaussian_baseline(flicker, -1.0), Error);
  try {
    (void)metrics::gaussian_baseline(repeat(frame, 2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::sequence_too_short);
  }
}

TEST_CASE("property: gaussian baseline keeps geometry and labels") {
  std::mt19937_64 rng(5);
  SegSequence s;
  for (int t = 0; t < 12; ++t) s.frames.push_back(random_blob(rng, {0.9, 0.9}));
  const auto out = metrics::gaussian_baseline(s);
  REQUIRE(out.length() == s.length());
  for (const auto& f : out.frames) {
    CHECK(f.same_geometry(s.frames[0]));
    for (auto v : f.labels()) CHECK(v <= kMaxLabel);
  }
}

TEST_CASE("evaluate_pair") {
  const auto frame = testing::u_shape(40, 40, 10, 5, 30, 30, 3);
  auto pred = repeat(frame, 5);
  const auto gt = repeat(frame, 5);
  const auto e = metrics::evaluate_pair(pred, gt);
  CHECK(e[Region::lv].mean_dice == 1.0);
  CHECK(e.ef_abs_error == 0.0);
  CHECK(e.anatomical_error_frames == 0);
  CHECK_FALSE(e.consistency.has_value());
  CHECK_FALSE(metrics::evaluation_json(e).empty());

  try {
    (void)metrics::evaluate_pair(repeat(frame, 4), gt);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::length_mismatch);
  }
  pred.frames[3] = LabelMap(40, 41, {1.0, 1.0});
  try {
    (void)metrics::evaluate_pair(pred, gt);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::dimension_mismatch);
  }
}
