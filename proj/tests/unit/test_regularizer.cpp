#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cardioreg/consistency.hpp"
#include "cardioreg/error.hpp"
#include "cardioreg/regularizer.hpp"
#include "helpers.hpp"

using namespace cardioreg;
using regularizer::RegularizerConfig;

namespace {

using Matrix = std::vector<std::vector<double>>;

/// Edge-padded second-difference operator as a dense matrix.
Matrix padded_laplacian(std::size_t n) {
  Matrix l(n, std::vector<double>(n, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    l[t][t == 0 ? 0 : t - 1] += 1.0;
    l[t][t + 1 == n ? n - 1 : t + 1] += 1.0;
    l[t][t] -= 2.0;
  }
  return l;
}

/// Solves (I + lambda L^T L) x = s by Gaussian elimination with partial pivoting.
std::vector<double> dense_solve(const std::vector<double>& s, double lambda) {
  const std::size_t n = s.size();
  const auto l = padded_laplacian(n);
  Matrix a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double ltl = 0.0;
      for (std::size_t k = 0; k < n; ++k) ltl += l[k][i] * l[k][j];
      a[i][j] = (i == j ? 1.0 : 0.0) + lambda * ltl;
    }
    a[i][n] = s[i];
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double v = a[i][n];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[i][k] * x[k];
    x[i] = v / a[i][i];
  }
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2(const std::vector<double>& a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double max_abs_lap(std::span<const double> s) {
  double m = 0.0;
  for (double v : consistency::laplacian(s)) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> sinusoid(std::size_t n, double amplitude, double period) {
  std::vector<double> s(n);
  for (std::size_t t = 0; t < n; ++t) s[t] = 0.5 + amplitude * std::cos(2.0 * std::numbers::pi * t / period);
  return s;
}

}  // namespace

TEST_CASE("objective terms") {
  const std::vector<double> s{0, 0, 1, 0, 0};
  const std::vector<double> z(5, 0.0);
  const auto terms = regularizer::objective_terms(s, z);
  CHECK(terms.data_fit == doctest::Approx(1.0));
  CHECK(terms.penalty == doctest::Approx(0.0));
  CHECK(regularizer::objective_terms(s, s).penalty == doctest::Approx(6.0));
}

TEST_CASE("smooth_penalized trivial cases") {
  RegularizerConfig cfg;
  std::mt19937_64 rng(1);
  const auto s = testing::random_series(rng, 17);
  CHECK(regularizer::smooth_penalized(s, 0.0, cfg) == s);
  const std::vector<double> c(12, 0.7);
  const auto out = regularizer::smooth_penalized(c, 50.0, cfg);
  CHECK(max_abs_diff(out, c) < 1e-12);
}

TEST_CASE("smooth_penalized matches the closed form on a bump") {
  RegularizerConfig cfg;
  const std::vector<double> s{0, 0, 1, 0, 0};
  const auto gd = regularizer::smooth_penalized(s, 1.0, cfg);
  CHECK(max_abs_diff(gd, dense_solve(s, 1.0)) <= 1e-4);
  CHECK(max_abs_diff(regularizer::closed_form_oracle(s, 1.0), dense_solve(s, 1.0)) <= 1e-10);
}

TEST_CASE("property: inner solver agrees with the exact minimizer") {
  RegularizerConfig cfg;
  std::mt19937_64 rng(2024);
  for (double lambda : {0.1, 1.0, 10.0, 50.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = testing::random_series(rng, 50);
      const auto exact = dense_solve(s, lambda);
      CHECK(max_abs_diff(regularizer::closed_form_oracle(s, lambda), exact) <= 1e-9);
      CHECK(max_abs_diff(regularizer::smooth_penalized(s, lambda, cfg), exact) <= 1e-4);
    }
  }
}

TEST_CASE("closed form: residual and limits") {
  std::mt19937_64 rng(77);
  const auto s = testing::random_series(rng, 30);
  const auto x = regularizer::closed_form_oracle(s, 7.0);
  const auto l = padded_laplacian(s.size());
  // r = (I + 7 L^T L) x - s
  std::vector<double> lx(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) lx[i] += l[i][j] * x[j];
  double r2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double ltlx = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) ltlx += l[k][i] * lx[k];
    const double r = x[i] + 7.0 * ltlx - s[i];
    r2 += r * r;
  }
  CHECK(std::sqrt(r2) <= 1e-10);
  CHECK(regularizer::closed_form_oracle(s, 0.0) == s);

  const std::vector<double> bump{0, 0, 1, 0, 0};
  const double e_small = regularizer::objective_terms(bump, regularizer::closed_form_oracle(bump, 1.0)).penalty;
  const double e_big = regularizer::objective_terms(bump, regularizer::closed_form_oracle(bump, 1e6)).penalty;
  CHECK(e_big < 1e-8);
  CHECK(e_big < e_small);
}

TEST_CASE("property: data fit grows and penalty shrinks with lambda") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testing::random_series(rng, 25);
    double prev_fit = -1.0;
    double prev_pen = 1e300;
    for (double lambda = 0.0; lambda <= 64.0; lambda += 0.5) {
      const auto terms = regularizer::objective_terms(s, regularizer::closed_form_oracle(s, lambda));
      CHECK(terms.data_fit >= prev_fit - 1e-12);
      CHECK(terms.penalty <= prev_pen + 1e-12);
      prev_fit = terms.data_fit;
      prev_pen = terms.penalty;
    }
  }
}

TEST_CASE("smooth_penalized errors") {
  RegularizerConfig cfg;
  std::vector<double> s{0, 1, std::nan(""), 0};
  try {
    (void)regularizer::smooth_penalized(s, 1.0, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite);
  }
  cfg.inner_step = 2.5;
  std::mt19937_64 rng(3);
  try {
    (void)regularizer::smooth_penalized(testing::random_series(rng, 20), 10.0, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::step_size);
  }
}

TEST_CASE("smooth_constrained skip rule") {
  RegularizerConfig cfg;
  const auto s = sinusoid(41, 0.4, 40.0);
  const auto r = regularizer::smooth_constrained(s, 0.05, cfg);
  CHECK(r.skipped);
  CHECK(r.feasible);
  CHECK(r.values == s);
  CHECK(r.solves == 0);
}

TEST_CASE("smooth_constrained on a bump stays near the smallest feasible lambda") {
  RegularizerConfig cfg;
  const std::vector<double> s{0, 0, 1, 0, 0};
  const double tau = 0.1;
  const auto r = regularizer::smooth_constrained(s, tau, cfg);
  CHECK(r.feasible);
  CHECK_FALSE(r.skipped);
  CHECK(max_abs_lap(r.values) <= tau);
  CHECK(r.solves == cfg.search_updates);
  double sweep_min = -1.0;
  for (double lambda = 0.0; lambda <= 64.0; lambda += 0.01) {
    const auto x = dense_solve(s, lambda);
    if (max_abs_lap(x) <= tau) {
      sweep_min = l2(x, s);
      break;
    }
  }
  REQUIRE(sweep_min > 0.0);
  CHECK(l2(r.values, s) <= sweep_min * 1.05);
}

TEST_CASE("spike on a sinusoid is removed") {
  RegularizerConfig cfg;
  auto s = sinusoid(41, 0.4, 40.0);
  const double tau = 0.0125;
  REQUIRE_FALSE(consistency::any_flag(s, tau));
  s[20] += 10.0 * tau;
  const auto r = regularizer::smooth_constrained(s, tau, cfg);
  CHECK(r.feasible);
  CHECK_FALSE(consistency::any_flag(r.values, tau));
}

TEST_CASE("infeasible at the top of the bracket is reported") {
  RegularizerConfig cfg;
  cfg.lambda_hi = 0.01;
  const std::vector<double> s{0, 0, 1, 0, 0};
  const auto r = regularizer::smooth_constrained(s, 0.01, cfg);
  CHECK_FALSE(r.feasible);
  CHECK(r.lambda == doctest::Approx(0.01));
  CHECK(max_abs_diff(r.values, dense_solve(s, 0.01)) <= 1e-4);
}

TEST_CASE("target fraction tightens flagged series only") {
  RegularizerConfig cfg;
  cfg.target_fraction = 0.9;
  auto s = sinusoid(41, 0.4, 40.0);
  const double tau = 0.0125;
  const auto skipped = regularizer::smooth_constrained(s, tau, cfg);
  CHECK(skipped.skipped);
  s[11] -= 6.0 * tau;
  const auto r = regularizer::smooth_constrained(s, tau, cfg);
  CHECK(r.feasible);
  CHECK(max_abs_lap(r.values) <= 0.9 * tau);
  cfg.target_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("property: feasibility and idempotence") {
  RegularizerConfig cfg;
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> spike(-0.5, 0.5);
  for (int trial = 0; trial < 40; ++trial) {
    auto s = sinusoid(40, 0.3, 30.0 + trial);
    s[rng() % 40] += spike(rng);
    s[rng() % 40] += spike(rng);
    const double tau = 0.02;
    const auto r = regularizer::smooth_constrained(s, tau, cfg);
    if (r.feasible) {
      CHECK_FALSE(consistency::any_flag(r.values, tau));
      const auto again = regularizer::smooth_constrained(r.values, tau, cfg);
      CHECK(again.skipped);
      CHECK(again.values == r.values);
    }
  }
}

namespace {

LatentTrajectory smooth_trajectory(std::size_t n) {
  std::vector<LatentVector> rows(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double ph = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
    for (int j = 0; j < kNumAttributes; ++j) rows[t][static_cast<std::size_t>(j)] = 10.0 * j + 4.0 * std::cos(ph + j);
    for (int j = kNumAttributes; j < kLatentDims; ++j) rows[t][static_cast<std::size_t>(j)] = 0.1 * j;
  }
  return LatentTrajectory(rows);
}

struct Setup {
  consistency::Thresholds tau;
  attributes::NormalizationStats stats{Domain::latent, {}};
};

Setup setup_for(const LatentTrajectory& traj) {
  Setup s;
  std::vector<AttributeSeries> series;
  for (auto a : kAllAttributes) series.push_back({a, traj.column(index_of(a)), Domain::latent, false});
  s.stats = attributes::compute_stats(series);
  std::vector<AttributeSeries> norm;
  for (const auto& x : series) norm.push_back(attributes::normalize_series(x, s.stats));
  s.tau = consistency::calibrate_thresholds(norm);
  return s;
}

}  // namespace

TEST_CASE("regularize_trajectory leaves consistent input untouched") {
  const auto traj = smooth_trajectory(40);
  const auto s = setup_for(traj);
  regularizer::TrajectoryDiagnostics diag;
  const auto out = regularizer::regularize_trajectory(traj, s.tau, s.stats, RegularizerConfig{}, &diag);
  CHECK(diag.all_feasible);
  for (const auto& a : diag.attributes) CHECK(a.skipped);
  for (std::size_t t = 0; t < traj.length(); ++t)
    for (int j = 0; j < kLatentDims; ++j)
      CHECK(out[t][static_cast<std::size_t>(j)] == doctest::Approx(traj[t][static_cast<std::size_t>(j)]).epsilon(1e-9));
  for (int j = 0; j < kNumAttributes; ++j) CHECK(out.column(j) == traj.column(j));
}

TEST_CASE("a spike in one column only changes that column") {
  const auto clean = smooth_trajectory(40);
  const auto s = setup_for(clean);
  auto traj = clean;
  std::mt19937_64 rng(6);
  for (int j = kNumAttributes; j < kLatentDims; ++j) {
    auto col = testing::random_series(rng, 40);
    traj.set_column(j, col);
  }
  traj[17][2] += 3.0;
  RegularizerConfig cfg;
  const auto out = regularizer::regularize_trajectory(traj, s.tau, s.stats, cfg);
  for (int j = 0; j < kNumAttributes; ++j) {
    if (j == 2)
      CHECK(out.column(j) != traj.column(j));
    else
      CHECK(out.column(j) == traj.column(j));
  }
  for (int j = kNumAttributes; j < kLatentDims; ++j)
    CHECK(max_abs_diff(out.column(j), regularizer::smooth_penalized(traj.column(j), 50.0, cfg)) == 0.0);

  std::vector<AttributeSeries> series;
  for (auto a : kAllAttributes) series.push_back({a, out.column(index_of(a)), Domain::latent, false});
  CHECK_FALSE(consistency::check(series, s.stats, s.tau).any_inconsistent);
}

TEST_CASE("property: columns are processed in isolation") {
  const auto clean = smooth_trajectory(30);
  const auto s = setup_for(clean);
  std::mt19937_64 rng(14);
  RegularizerConfig cfg;
  for (int trial = 0; trial < 8; ++trial) {
    auto traj = clean;
    for (int j = 0; j < kLatentDims; ++j) traj[rng() % 30][static_cast<std::size_t>(j)] += 2.0;
    const auto base = regularizer::regularize_trajectory(traj, s.tau, s.stats, cfg);
    const int zeroed = static_cast<int>(rng() % kLatentDims);
    auto modified = traj;
    modified.set_column(zeroed, std::vector<double>(30, 0.0));
    const auto out = regularizer::regularize_trajectory(modified, s.tau, s.stats, cfg);
    for (int j = 0; j < kLatentDims; ++j)
      if (j != zeroed) CHECK(out.column(j) == base.column(j));
  }
}

TEST_CASE("regularize_trajectory is deterministic") {
  auto traj = smooth_trajectory(40);
  const auto s = setup_for(traj);
  traj[5][0] += 9.0;
  traj[22][6] -= 4.0;
  const auto a = regularizer::regularize_trajectory(traj, s.tau, s.stats, RegularizerConfig{});
  const auto b = regularizer::regularize_trajectory(traj, s.tau, s.stats, RegularizerConfig{});
  CHECK(a == b);
}

TEST_CASE("config validation and JSON") {
  RegularizerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.search_updates = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.lambda_hi = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  const auto dir = testing::temp_dir("regcfg");
  cfg = {};
  cfg.lambda_residual = 12.5;
  cfg.search_updates = 7;
  cfg.target_fraction = 0.75;
  regularizer::write_config(cfg, dir / "cfg.json");
  const auto back = regularizer::read_config(dir / "cfg.json");
  CHECK(back.lambda_residual == 12.5);
  CHECK(back.search_updates == 7);
  CHECK(back.target_fraction == 0.75);
  CHECK(back.lambda_hi == 64.0);
}
