// SPDX-License-Identifier: MIT
/**
 * @file criteria.hpp
 * @brief Predicted convergence orders and the analytic checks behind them.
 *
 * - predict_rate / theorem_rate: orders guaranteed for the prototypes and
 *   for a given compensation exponent s.
 * - ito_criterion: lower boundedness of the drift/diffusion combination g(x)
 *   that gives order 1/2 for autonomous equations on a domain.
 * - feller_test: boundary classification from the scale function.
 * - build_timechange: the clock Theta(t) = int_0^t theta^2 and its inverse.
 */
#pragma once

#include "he/sde_core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace he {

struct RatePrediction {
  std::optional<double> mu0;
  std::optional<double> mu1;
  double s_exponent = 0.0;
  double lambda_sup = 0.5;  ///< every order below this is guaranteed
  std::string provenance;
};

/// Boundary-drift ratios minimized over [0, horizon] by grid refinement.
RatePrediction predict_rate(const PrototypeParams& params, double horizon);

/// Guaranteed order supremum 1/2 - s for gamma in [1/2,1), s in [0, 1-gamma].
double theorem_rate(double gamma, double s_exponent);

/// True when the order supremum carries no information (<= 0).
inline bool is_vacuous_rate(double lambda_sup) noexcept { return !(lambda_sup > 0.0); }

using ScalarFn = std::function<double(double)>;

/// Autonomous dX = a(X) dt + sigma(X)^gamma dW on I = (l, r) with explicit derivatives.
struct AutonomousModel {
  ScalarFn a;
  ScalarFn da;
  ScalarFn sigma;
  ScalarFn dsigma;
  ScalarFn d2sigma;
  double gamma = 0.5;
  Domain domain;
  double x0 = 0.0;
};

/// Validates gamma, x0 in I and sigma > 0 on a dense interior grid.
void check_autonomous(const AutonomousModel& model);

/// Constant-parameter prototype as an autonomous model.
AutonomousModel autonomous_prototype(const PrototypeParams& params);

/// Interior points approaching both ends of I geometrically from `origin`.
std::pair<std::vector<double>, std::vector<double>> approach_sequences(const Domain& domain, double origin,
                                                                       int refinements);

struct DerivativeCheck {
  bool ok = true;
  double worst_mismatch = 0.0;  ///< |user - central difference| / max(1, |user|)
  double worst_x = 0.0;
  std::string which;
};

/// Central-difference cross-check of a', sigma', sigma'' (step 1e-6 * scale).
DerivativeCheck check_derivatives(const AutonomousModel& model, double rel_tol = 1e-4);

enum class Trend { bounded_below, diverging_to_minus_infinity, inconclusive };

std::string to_string(Trend trend);

struct ItoGridSpec {
  std::optional<double> origin;  ///< defaults to x0
  int refinements = 40;
  int tail = 5;
};

struct CriterionReport {
  double inf_estimate = 0.0;
  double argmin_x = 0.0;
  Trend left = Trend::inconclusive;
  Trend right = Trend::inconclusive;
  Trend classification = Trend::inconclusive;
  std::optional<double> s_exponent;  ///< 0 when bounded below
  std::optional<double> lambda_sup;  ///< 1/2 when bounded below
  DerivativeCheck derivatives;
  std::vector<std::pair<double, double>> left_sequence;   ///< (x, g(x))
  std::vector<std::pair<double, double>> right_sequence;
};

/// g(x) = s'a/s + s'' s^{2g-1}/2 + (g - 3/2) s'^2 s^{2g-2}.
double ito_function(const AutonomousModel& model, double x);

CriterionReport ito_criterion(const AutonomousModel& model, const ItoGridSpec& grid = {});

enum class EndpointClass { divergent, finite, inconclusive };
enum class Conclusion { no_exit, exit_possible, inconclusive };

std::string to_string(EndpointClass c);
std::string to_string(Conclusion c);

struct FellerOptions {
  double threshold = 1e8;
  int refinements = 60;
  int tail = 5;
  int sub_nodes = 32;
  double ratio_margin = 0.01;
};

struct EndpointResult {
  EndpointClass classification = EndpointClass::inconclusive;
  std::optional<double> estimate;  ///< v(end) when classified finite
  std::vector<std::pair<double, double>> sequence;  ///< (x_j, v(x_j))
  bool overflowed = false;
};

struct FellerResult {
  EndpointResult left;
  EndpointResult right;
  Conclusion conclusion = Conclusion::inconclusive;
  bool local_integrability_ok = false;
};

/// Scale-function test: no exit iff v diverges at both ends of I.
FellerResult feller_test(const AutonomousModel& model, double origin, const FellerOptions& options = {});

inline constexpr double kTimeChangeInverseTol = 1e-10;

/// Theta(t) = int_0^t theta(s)^2 ds tabulated on [0, T], with inverse A.
class TimeChange {
 public:
  TimeChange(ParamFn theta, double horizon, int cells = 1024);

  const ParamFn& theta() const noexcept { return theta_; }
  double horizon() const noexcept { return horizon_; }
  double horizon_image() const noexcept { return table_.back(); }

  double Theta(double t) const;
  double A(double tau) const;

 private:
  ParamFn theta_;
  double horizon_;
  double cell_;
  double cell_tol_;
  std::vector<double> table_;
};

TimeChange build_timechange(const ParamFn& theta, double horizon);

}  // namespace he
