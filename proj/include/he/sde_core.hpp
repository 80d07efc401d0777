// SPDX-License-Identifier: MIT
/**
 * @file sde_core.hpp
 * @brief Scalar SDEs dX = a(t,X) dt + sigma(t,X)^gamma dW with gamma in [1/2, 1).
 *
 * Holds the equidistant time grid, the restricted family of time-dependent
 * parameters, coefficient functions with their declared regularity
 * constants, the model record consumed by schemes and criteria, and the
 * prototype constructors (CIR, CKLS, Wright-Fisher).
 */
#pragma once

#include "he/errors.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace he {

/// Nodes t_k = k * T / 2^level, k = 0..N.
class TimeGrid {
 public:
  TimeGrid(double horizon, int level);

  double horizon() const noexcept { return horizon_; }
  int level() const noexcept { return level_; }
  std::int64_t steps() const noexcept { return std::int64_t{1} << level_; }
  double dt() const noexcept { return dt_; }
  double node(std::int64_t k) const noexcept { return static_cast<double>(k) * dt_; }

  /// Index of eta(t) = max{t_k <= t}; t must lie in [0, T].
  std::int64_t floor_index(double t) const;
  double eta(double t) const { return node(floor_index(t)); }

 private:
  double horizon_;
  int level_;
  double dt_;
};

/// Time-dependent parameter from a closed family with computable bounds.
class ParamFn {
 public:
  enum class Kind { constant, affine, sinusoidal };

  static ParamFn constant(double p) { return ParamFn(Kind::constant, p, 0.0, 0.0); }
  /// t -> p + q t
  static ParamFn affine(double p, double q) { return ParamFn(Kind::affine, p, q, 0.0); }
  /// t -> p + q sin(omega t)
  static ParamFn sinusoidal(double p, double q, double omega) {
    return ParamFn(Kind::sinusoidal, p, q, omega);
  }

  double operator()(double t) const noexcept {
    switch (kind_) {
      case Kind::constant:
        return p_;
      case Kind::affine:
        return p_ + q_ * t;
      case Kind::sinusoidal:
        return p_ + q_ * std::sin(omega_ * t);
    }
    return p_;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::constant || q_ == 0.0; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  double omega() const noexcept { return omega_; }

  /// Upper bound of sup_{[0,T]} |f|.
  double sup_bound(double horizon) const noexcept;
  /// Upper bound of the Hoelder-1/2 seminorm on [0,T].
  double holder_half_bound(double horizon) const noexcept;
  /// Minimum over a uniform grid of n+1 points on [0,T].
  double grid_min(double horizon, int n = 4096) const noexcept;

  std::string to_string() const;

 private:
  ParamFn(Kind kind, double p, double q, double omega) : kind_(kind), p_(p), q_(q), omega_(omega) {}

  Kind kind_;
  double p_;
  double q_;
  double omega_;
};

struct CoefficientMeta {
  std::optional<double> lipschitz_K;
  std::optional<double> holder_half_K;
  bool nonnegative = false;
};

/// f(t, x) plus the constants it claims to satisfy.
struct CoefficientFn {
  std::function<double(double, double)> fn;
  CoefficientMeta meta;

  double operator()(double t, double x) const { return fn(t, x); }
};

/// Open interval (left, right); either end may be infinite.
struct Domain {
  double left = -std::numeric_limits<double>::infinity();
  double right = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return left < x && x < right; }
};

struct SdeModel {
  CoefficientFn drift;
  CoefficientFn base_sigma;
  double gamma = 0.5;
  double x0 = 0.0;
  std::optional<Domain> domain;
  std::string name;
};

/// Checks gamma in [1/2,1) and x0 in the domain; returns the model unchanged.
SdeModel make_model(CoefficientFn drift, CoefficientFn base_sigma, double gamma, double x0,
                    std::optional<Domain> domain = std::nullopt, std::string name = "custom");

/// max(sigma, 0)^gamma with 0^gamma = 0.
inline double clamped_power(double sigma, double gamma) noexcept {
  if (!(sigma > 0.0)) return 0.0;
  return gamma == 0.5 ? std::sqrt(sigma) : std::pow(sigma, gamma);
}

/// Effective diffusion c(t,x) = sigma(t,x)^gamma, clamped at sigma <= 0.
inline double eval_diffusion(const SdeModel& model, double t, double x) {
  const double s = model.base_sigma(t, x);
  if (!std::isfinite(s)) {
    throw InvalidCoefficient("diffusion coefficient is not finite", t, x);
  }
  return clamped_power(s, model.gamma);
}

enum class PrototypeKind { cir, ckls, wf };

std::string to_string(PrototypeKind kind);

struct PrototypeParams {
  PrototypeKind kind = PrototypeKind::cir;
  ParamFn kappa = ParamFn::constant(1.0);
  ParamFn lambda = ParamFn::constant(1.0);
  ParamFn theta = ParamFn::constant(1.0);
  double gamma = 0.5;  ///< used by CKLS only
  double x0 = 1.0;
};

/// Validates the prototype parameters on [0, horizon].
void check_prototype(const PrototypeParams& params, double horizon);

/// drift kappa(t)(lambda(t) - x) with the CIR, WF or CKLS base sigma.
SdeModel make_prototype(const PrototypeParams& params, double horizon);

/// The prototype's boundary profile h_i as a base sigma (theta factored out).
CoefficientFn unit_profile_sigma(PrototypeKind kind, double gamma);

/// C with |a(t,x)| + c(t,x) <= C (1 + |x|) for a prototype on [0, horizon].
double linear_growth_constant(const PrototypeParams& params, double horizon);

struct SamplingBox {
  double t_lo = 0.0;
  double t_hi = 1.0;
  double x_lo = -1.0;
  double x_hi = 1.0;
};

/// Sampled evidence for the regularity assumptions. Sampling can falsify a
/// declared constant but never prove it, so every report is heuristic.
struct ValidationReport {
  std::int64_t samples = 0;
  double max_holder_ratio = 0.0;     ///< |f(t,x)-f(s,x)| / ((1+|x|) |t-s|^{1/2})
  double max_lipschitz_ratio = 0.0;  ///< |f(t,x)-f(t,y)| / |x-y|
  double min_value = std::numeric_limits<double>::infinity();
  std::optional<bool> holder_ok;
  std::optional<bool> lipschitz_ok;
  bool nonnegative_ok = false;
  bool heuristic = true;
};

inline constexpr double kValidatorRelTol = 1e-9;

ValidationReport validate_assumptions(const CoefficientFn& f, const SamplingBox& box,
                                      std::int64_t n_samples, std::uint64_t seed);

template <typename Scalar>
struct PowerGap {
  Scalar lhs;
  Scalar rhs;
};

/// Both sides of |x^g - y^g| <= 2 x^{-(1-g) b} |x-y|^{b + g(1-b)} for x > 0, y >= 0.
template <typename Scalar>
PowerGap<Scalar> power_gap_bound(Scalar x, Scalar y, Scalar gamma, Scalar beta) {
  using std::abs;
  using std::pow;
  if (!(x > 0) || !(y >= 0)) throw InvalidArgument("power_gap_bound: need x > 0 and y >= 0");
  if (!(gamma >= Scalar(0.5) && gamma < Scalar(1))) {
    throw InvalidArgument("power_gap_bound: gamma must lie in [1/2, 1)");
  }
  if (!(beta > 0 && beta <= Scalar(1))) throw InvalidArgument("power_gap_bound: beta must lie in (0, 1]");
  const Scalar diff = abs(x - y);
  const Scalar lhs = abs(pow(x, gamma) - pow(y, gamma));
  const Scalar rhs = Scalar(2) * pow(x, -(Scalar(1) - gamma) * beta) *
                     pow(diff, beta + gamma * (Scalar(1) - beta));
  return {lhs, rhs};
}

/// Both sides of |x^g - y^g| <= |x - y|^g for x, y >= 0.
template <typename Scalar>
PowerGap<Scalar> concavity_gap(Scalar x, Scalar y, Scalar gamma) {
  using std::abs;
  using std::pow;
  if (!(x >= 0) || !(y >= 0)) throw InvalidArgument("concavity_gap: need x, y >= 0");
  return {abs(pow(x, gamma) - pow(y, gamma)), pow(abs(x - y), gamma)};
}

}  // namespace he
