#include "cardioreg/regularizer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <json.hpp>

#include "cardioreg/error.hpp"
#include "cardioreg/seqio.hpp"

namespace cardioreg::regularizer {

namespace {

// Squared spectral norm bound of the edge-padded second difference.
constexpr double kLaplacianNormSq = 16.0;
constexpr int kMaxConsecutiveIncreases = 10;

void check_finite(std::span<const double> s) {
  for (double v : s)
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "series contains a non-finite value");
}

void apply_laplacian(std::span<const double> x, std::vector<double>& out) {
  const std::size_t n = x.size();
  out.resize(n);
  out[0] = x[1] - x[0];
  for (std::size_t t = 1; t + 1 < n; ++t) out[t] = x[t + 1] + x[t - 1] - 2.0 * x[t];
  out[n - 1] = x[n - 2] - x[n - 1];
}

// Adjoint of apply_laplacian.
void apply_laplacian_t(std::span<const double> v, std::vector<double>& out) {
  const std::size_t n = v.size();
  out.assign(n, 0.0);
  out[0] -= v[0];
  out[1] += v[0];
  for (std::size_t t = 1; t + 1 < n; ++t) {
    out[t - 1] += v[t];
    out[t] -= 2.0 * v[t];
    out[t + 1] += v[t];
  }
  out[n - 2] += v[n - 1];
  out[n - 1] -= v[n - 1];
}

struct PenalizedProblem {
  std::span<const double> s;
  double lambda;
  std::vector<double> lx;
  std::vector<double> ltlx;

  double value(std::span<const double> x) {
    apply_laplacian(x, lx);
    double f = 0.0;
    double g = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double d = x[t] - s[t];
      f += d * d;
      g += lx[t] * lx[t];
    }
    return f + lambda * g;
  }

  void gradient(std::span<const double> x, std::vector<double>& grad) {
    apply_laplacian(x, lx);
    apply_laplacian_t(lx, ltlx);
    grad.resize(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) grad[t] = 2.0 * (x[t] - s[t]) + 2.0 * lambda * ltlx[t];
  }
};

double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

void RegularizerConfig::validate() const {
  if (!(lambda_residual > 0.0)) throw Error(ErrorCode::config, "lambda_residual must be positive");
  if (search_updates < 1) throw Error(ErrorCode::config, "search_updates must be >= 1");
  if (!(lambda_lo >= 0.0) || !(lambda_hi > lambda_lo)) throw Error(ErrorCode::config, "need 0 <= lambda_lo < lambda_hi");
  if (!(inner_step > 0.0)) throw Error(ErrorCode::config, "inner_step must be positive");
  if (inner_max_iters < 1) throw Error(ErrorCode::config, "inner_max_iters must be >= 1");
  if (!(inner_grad_tol > 0.0)) throw Error(ErrorCode::config, "inner_grad_tol must be positive");
  if (!(target_fraction > 0.0 && target_fraction <= 1.0))
    throw Error(ErrorCode::config, "target_fraction must be in (0, 1]");
}

void write_config(const RegularizerConfig& cfg, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["lambda_residual"] = cfg.lambda_residual;
  j["search_updates"] = cfg.search_updates;
  j["lambda_lo"] = cfg.lambda_lo;
  j["lambda_hi"] = cfg.lambda_hi;
  j["inner_step"] = cfg.inner_step;
  j["inner_max_iters"] = cfg.inner_max_iters;
  j["inner_grad_tol"] = cfg.inner_grad_tol;
  j["target_fraction"] = cfg.target_fraction;
  seqio::write_text_file(path, j.dump(2) + "\n");
}

RegularizerConfig read_config(const std::filesystem::path& path) {
  RegularizerConfig cfg;
  try {
    const auto j = nlohmann::json::parse(seqio::read_text_file(path));
    cfg.lambda_residual = j.value("lambda_residual", cfg.lambda_residual);
    cfg.search_updates = j.value("search_updates", cfg.search_updates);
    cfg.lambda_lo = j.value("lambda_lo", cfg.lambda_lo);
    cfg.lambda_hi = j.value("lambda_hi", cfg.lambda_hi);
    cfg.inner_step = j.value("inner_step", cfg.inner_step);
    cfg.inner_max_iters = j.value("inner_max_iters", cfg.inner_max_iters);
    cfg.inner_grad_tol = j.value("inner_grad_tol", cfg.inner_grad_tol);
    cfg.target_fraction = j.value("target_fraction", cfg.target_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

ObjectiveTerms objective_terms(std::span<const double> s, std::span<const double> s_prime) {
  if (s.size() != s_prime.size()) throw Error(ErrorCode::length_mismatch, "series lengths differ");
  if (s.size() < 3) throw Error(ErrorCode::sequence_too_short, "need at least 3 frames");
  std::vector<double> lx;
  apply_laplacian(s_prime, lx);
  ObjectiveTerms out;
  for (std::size_t t = 0; t < s.size(); ++t) {
    const double d = s[t] - s_prime[t];
    out.data_fit += d * d;
    out.penalty += lx[t] * lx[t];
  }
  return out;
}

std::vector<double> smooth_penalized(std::span<const double> s, double lambda, const RegularizerConfig& cfg) {
  if (s.size() < 3) throw Error(ErrorCode::sequence_too_short, "need at least 3 frames");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  check_finite(s);

  PenalizedProblem problem{s, lambda, {}, {}};
  // Hessian is 2(I + lambda L^T L): eigenvalues in [2, 2(1 + 16 lambda)].
  const double lipschitz = 2.0 * (1.0 + kLaplacianNormSq * lambda);
  const double condition = lipschitz / 2.0;
  const double step = cfg.inner_step / lipschitz;
  const double momentum = (std::sqrt(condition) - 1.0) / (std::sqrt(condition) + 1.0);

  std::vector<double> x(s.begin(), s.end());
  std::vector<double> y = x;
  std::vector<double> x_new(x.size());
  std::vector<double> grad;
  double fx = problem.value(x);
  int increases = 0;

  for (int it = 0; it < cfg.inner_max_iters; ++it) {
    problem.gradient(x, grad);
    if (norm2(grad) <= cfg.inner_grad_tol) break;
    problem.gradient(y, grad);
    for (std::size_t t = 0; t < x.size(); ++t) x_new[t] = y[t] - step * grad[t];
    const double f_new = problem.value(x_new);
    if (!std::isfinite(f_new)) throw Error(ErrorCode::step_size, "inner solve diverged (non-finite objective)");
    if (f_new > fx) {
      if (++increases >= kMaxConsecutiveIncreases)
        throw Error(ErrorCode::step_size, "objective increased on " + std::to_string(increases) +
                                              " consecutive steps; reduce inner_step");
      y = x_new;  // drop momentum
    } else {
      increases = 0;
      for (std::size_t t = 0; t < x.size(); ++t) y[t] = x_new[t] + momentum * (x_new[t] - x[t]);
    }
    x.swap(x_new);
    fx = f_new;
  }
  return x;
}

std::vector<double> closed_form_oracle(std::span<const double> s, double lambda) {
  const auto n = static_cast<Eigen::Index>(s.size());
  if (n < 3) throw Error(ErrorCode::sequence_too_short, "need at least 3 frames");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  check_finite(s);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  lap(0, 0) = -1.0;
  lap(0, 1) = 1.0;
  for (Eigen::Index t = 1; t + 1 < n; ++t) {
    lap(t, t - 1) = 1.0;
    lap(t, t) = -2.0;
    lap(t, t + 1) = 1.0;
  }
  lap(n - 1, n - 2) = 1.0;
  lap(n - 1, n - 1) = -1.0;
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) + lambda * lap.transpose() * lap;
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(s.data(), n);
  const Eigen::VectorXd sol = system.llt().solve(rhs);
  return std::vector<double>(sol.data(), sol.data() + n);
}

ConstrainedResult smooth_constrained(std::span<const double> s, double tau, const RegularizerConfig& cfg) {
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_argument, "tau must be positive");
  ConstrainedResult out;
  if (!consistency::any_flag(s, tau)) {
    out.values.assign(s.begin(), s.end());
    out.skipped = true;
    return out;
  }
  const double target = cfg.target_fraction * tau;
  double lo = cfg.lambda_lo;
  double hi = cfg.lambda_hi;
  bool found = false;
  for (int i = 0; i < cfg.search_updates; ++i) {
    const double mid = 0.5 * (lo + hi);
    auto candidate = smooth_penalized(s, mid, cfg);
    ++out.solves;
    if (!consistency::any_flag(candidate, target)) {
      out.values = std::move(candidate);
      out.lambda = mid;
      found = true;
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (found) return out;
  out.values = smooth_penalized(s, cfg.lambda_hi, cfg);
  ++out.solves;
  out.lambda = cfg.lambda_hi;
  out.feasible = !consistency::any_flag(out.values, target);
  return out;
}

LatentTrajectory regularize_trajectory(const LatentTrajectory& traj, const consistency::Thresholds& tau,
                                       const attributes::NormalizationStats& stats, const RegularizerConfig& cfg,
                                       TrajectoryDiagnostics* diagnostics) {
  cfg.validate();
  if (traj.length() < 3) throw Error(ErrorCode::sequence_too_short, "regularization needs at least 3 frames");
  LatentTrajectory out = traj;
  TrajectoryDiagnostics diag;
  for (auto a : kAllAttributes) {
    const int j = index_of(a);
    const auto raw = traj.column(j);
    const auto normalized = attributes::normalize_values(raw, a, stats);
    auto result = smooth_constrained(normalized, tau.at(a), cfg);
    if (!result.skipped) out.set_column(j, attributes::denormalize_values(result.values, a, stats));
    diag.all_feasible = diag.all_feasible && result.feasible;
    diag.attributes[static_cast<std::size_t>(j)] = std::move(result);
  }
  for (int j = kNumAttributes; j < kLatentDims; ++j)
    out.set_column(j, smooth_penalized(traj.column(j), cfg.lambda_residual, cfg));
  if (diagnostics) *diagnostics = std::move(diag);
  return out;
}

}  // namespace cardioreg::regularizer
