#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "cardioreg/attributes.hpp"
#include "cardioreg/consistency.hpp"
#include "cardioreg/types.hpp"

namespace cardioreg::regularizer {

struct RegularizerConfig {
  /// Fixed penalty weight for the residual (non-attribute) dimensions.
  double lambda_residual = 50.0;
  /// Bisection budget for the attribute dimensions.
  int search_updates = 5;
  double lambda_lo = 0.0;
  double lambda_hi = 64.0;
  /// Step as a fraction of 1/Lipschitz of the inner objective; above 2 diverges.
  double inner_step = 1.0;
  int inner_max_iters = 1000;
  double inner_grad_tol = 1e-6;
  /// Flagged series are smoothed until |laplacian| <= target_fraction * tau.
  /// The skip test always uses tau itself.
  double target_fraction = 1.0;

  /// Throws config on out-of-range fields.
  void validate() const;
};

void write_config(const RegularizerConfig& cfg, const std::filesystem::path& path);
RegularizerConfig read_config(const std::filesystem::path& path);

/// f = ||s - s'||^2 and g' = ||L s'||^2 with L the edge-padded second difference.
struct ObjectiveTerms {
  double data_fit = 0.0;
  double penalty = 0.0;
};

ObjectiveTerms objective_terms(std::span<const double> s, std::span<const double> s_prime);

/// Accelerated gradient descent on f + lambda g', started at s' = s.
/// Throws step_size when the objective rises on 10 consecutive steps.
std::vector<double> smooth_penalized(std::span<const double> s, double lambda, const RegularizerConfig& cfg);

/// Exact minimizer of f + lambda g': solves (I + lambda L^T L) s' = s.
std::vector<double> closed_form_oracle(std::span<const double> s, double lambda);

struct ConstrainedResult {
  std::vector<double> values;
  double lambda = 0.0;
  bool skipped = false;   // input already satisfied the indicator
  bool feasible = true;   // false: even lambda_hi left flagged frames
  int solves = 0;
};

/// Smallest-lambda feasible smoothing of a normalized series under threshold tau
/// (tightened by cfg.target_fraction once the series is flagged).
ConstrainedResult smooth_constrained(std::span<const double> s, double tau, const RegularizerConfig& cfg);

struct TrajectoryDiagnostics {
  std::array<ConstrainedResult, kNumAttributes> attributes;
  bool all_feasible = true;
};

/// Attribute columns: normalize, constrained smoothing, de-normalize.
/// Residual columns: penalized smoothing with cfg.lambda_residual.
LatentTrajectory regularize_trajectory(const LatentTrajectory& traj, const consistency::Thresholds& tau,
                                       const attributes::NormalizationStats& stats, const RegularizerConfig& cfg,
                                       TrajectoryDiagnostics* diagnostics = nullptr);

}  // namespace cardioreg::regularizer
