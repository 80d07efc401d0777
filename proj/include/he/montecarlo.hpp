// SPDX-License-Identifier: MIT
/**
 * @file montecarlo.hpp
 * @brief Coupled Monte Carlo estimators.
 *
 * Every path draws one Brownian lattice; the reference solution and the
 * Euler trajectories at all studied levels are driven by it. The strong
 * error at level l is the supremum over the level's nodes of the mean
 * absolute difference (sup of expectations, not expectation of sup).
 */
#pragma once

#include "he/criteria.hpp"
#include "he/sde_core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace he {

struct ExperimentConfig {
  SdeModel model;
  double horizon = 1.0;
  int level_min = 4;
  int level_max = 9;
  int ref_level = 13;
  std::int64_t paths = 10000;
  std::uint64_t seed = 42;
  bool allow_explosions = false;  ///< discard exploded paths instead of aborting
  int workers = 0;
};

inline constexpr int kReferenceGap = 4;
inline constexpr std::int64_t kMinPaths = 100;
inline constexpr double kFitStderrCutoff = 0.25;

/// Throws ConfigError naming the violated rule.
void validate(const ExperimentConfig& config);

struct LevelError {
  int level = 0;
  std::int64_t steps = 0;
  double dt = 0.0;
  double error = 0.0;      ///< max_k of the node mean |ref - x_k|
  double std_error = 0.0;  ///< standard error of that node mean
  std::int64_t argmax_k = 0;
};

struct OrderFit {
  double lambda_hat = 0.0;  ///< e ~ C N^{-lambda_hat}
  double intercept = 0.0;   ///< of log2 e against level
  double r2 = 0.0;
  double slope_stderr = 0.0;
  std::vector<int> excluded_levels;
};

struct ConvergenceReport {
  std::vector<LevelError> levels;
  std::optional<OrderFit> fit;
  std::int64_t paths_used = 0;
  std::int64_t exploded_paths = 0;
};

/// Least-squares fit of log2 e_l against l over levels with stderr <= 25% of e_l.
std::optional<OrderFit> fit_order(const std::vector<LevelError>& levels);

ConvergenceReport estimate_strong_error(const ExperimentConfig& config);

struct MomentCondition {
  double gamma = 0.5;
  double s_exponent = 0.0;
  double epsilon = 0.01;
  std::optional<double> q_override;

  /// 2 (gamma + s - 1), or the override.
  double q() const;
  /// beta = 1 - (s + eps/2) / (1 - gamma); documentation only.
  double beta() const;
  /// 2 (gamma - 1) beta - eps; documentation only.
  double proof_exponent() const;
  void validate() const;
};

struct MomentOptions {
  double horizon = 1.0;
  int ref_level = 12;
  std::int64_t paths = 10000;
  std::uint64_t seed = 42;
  double cap = 1e12;  ///< upper bound for a node value; sigma below the floor dt counts as a hit
  double growth_factor = 1.1;
  int workers = 0;
};

struct MomentLevel {
  int ref_level = 0;
  double estimate = 0.0;     ///< int_0^T E[max(sigma, dt)^q] dt, each node capped at `cap`
  double std_error = 0.0;
  double finite_part = 0.0;  ///< contribution of nodes with sigma > dt
  std::int64_t cap_hits = 0; ///< nodes with sigma <= dt
};

struct MomentEstimate {
  double q = 0.0;
  std::vector<MomentLevel> levels;  ///< ref_level - 2, ref_level - 1, ref_level
  bool divergence_flag = false;
  double relative_spread = 0.0;     ///< (max - min) / mean of the estimates

  const MomentLevel& finest() const { return levels.back(); }
};

MomentEstimate estimate_inverse_moment(const SdeModel& model, const MomentCondition& cond,
                                       const MomentOptions& options);

struct ComparisonLevel {
  int level = 0;
  std::int64_t violations = 0;
  double fraction = 0.0;
  double worst = 0.0;  ///< largest max_k (x_lo - x_hi) over violating paths
};

struct ComparisonReport {
  std::vector<ComparisonLevel> levels;
  bool nonincreasing = true;
};

struct ComparisonOptions {
  double horizon = 1.0;
  std::vector<int> levels{8, 10};
  std::int64_t paths = 1000;
  std::uint64_t seed = 42;
  double tolerance = 1e-3;
  int workers = 0;
  std::int64_t precondition_samples = 2000;
};

ComparisonReport comparison_check(const SdeModel& model_lo, const SdeModel& model_hi,
                                  const ComparisonOptions& options);

struct TimeChangeOptions {
  double horizon = 1.0;
  int level = 12;
  std::int64_t paths = 100000;
  std::uint64_t seed = 42;
  double significance = 1e-3;
  int workers = 0;
};

struct TimeChangeReport {
  double horizon_image = 0.0;  ///< Theta(T)
  double mean_original = 0.0;
  double mean_changed = 0.0;
  double var_original = 0.0;
  double var_changed = 0.0;
  double z_mean = 0.0;
  double z_var = 0.0;
  double z_critical = 0.0;
  bool pass = false;
};

/// Same-clock dynamics after the substitution t = A(s): drift a(A(s), x) / theta(A(s))^2, profile h_i.
SdeModel time_changed_model(const PrototypeParams& params, const TimeChange& clock, int level);

TimeChangeReport timechange_check(const PrototypeParams& params, const TimeChangeOptions& options);

}  // namespace he
