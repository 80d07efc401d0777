// SPDX-License-Identifier: MIT
#include "he/sde_core.hpp"

#include "he/random.hpp"

#include <algorithm>
#include <cstdio>

namespace he {

TimeGrid::TimeGrid(double horizon, int level) : horizon_(horizon), level_(level) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("time grid: horizon must be positive");
  if (level < 0 || level > 40) throw InvalidArgument("time grid: level must lie in [0, 40]");
  dt_ = std::ldexp(horizon, -level);
}

std::int64_t TimeGrid::floor_index(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) throw InvalidArgument("time grid: t outside [0, T]");
  auto k = static_cast<std::int64_t>(std::floor(t / dt_));
  k = std::clamp<std::int64_t>(k, 0, steps());
  while (k > 0 && node(k) > t) --k;
  while (k < steps() && node(k + 1) <= t) ++k;
  return k;
}

double ParamFn::sup_bound(double horizon) const noexcept {
  switch (kind_) {
    case Kind::constant:
      return std::abs(p_);
    case Kind::affine:
      return std::max(std::abs(p_), std::abs(p_ + q_ * horizon));
    case Kind::sinusoidal:
      return std::abs(p_) + std::abs(q_);
  }
  return std::abs(p_);
}

double ParamFn::holder_half_bound(double horizon) const noexcept {
  switch (kind_) {
    case Kind::constant:
      return 0.0;
    case Kind::affine:
      return std::abs(q_) * std::sqrt(horizon);
    case Kind::sinusoidal: {
      // |sin(wt) - sin(ws)| <= min(w h, 2); the ratio to sqrt(h) peaks at h = 2/w.
      const double w = std::abs(omega_);
      if (w == 0.0) return 0.0;
      return std::abs(q_) * w * std::sqrt(std::min(horizon, 2.0 / w));
    }
  }
  return 0.0;
}

double ParamFn::grid_min(double horizon, int n) const noexcept {
  double m = (*this)(0.0);
  for (int i = 1; i <= n; ++i) m = std::min(m, (*this)(horizon * i / n));
  return m;
}

std::string ParamFn::to_string() const {
  char buf[128];
  switch (kind_) {
    case Kind::constant:
      std::snprintf(buf, sizeof buf, "const:%.17g", p_);
      break;
    case Kind::affine:
      std::snprintf(buf, sizeof buf, "affine:%.17g,%.17g", p_, q_);
      break;
    case Kind::sinusoidal:
      std::snprintf(buf, sizeof buf, "sin:%.17g,%.17g,%.17g", p_, q_, omega_);
      break;
  }
  return buf;
}

SdeModel make_model(CoefficientFn drift, CoefficientFn base_sigma, double gamma, double x0,
                    std::optional<Domain> domain, std::string name) {
  if (!(gamma >= 0.5 && gamma < 1.0)) throw InvalidArgument("model: gamma must lie in [1/2, 1)");
  if (!std::isfinite(x0)) throw InvalidArgument("model: x0 must be finite");
  if (domain) {
    if (!(domain->left < domain->right)) throw InvalidArgument("model: domain needs left < right");
    if (!domain->contains(x0)) throw InvalidArgument("model: x0 outside the declared domain");
  }
  if (!drift.fn || !base_sigma.fn) throw InvalidArgument("model: coefficient function missing");
  return SdeModel{std::move(drift), std::move(base_sigma), gamma, x0, domain, std::move(name)};
}

std::string to_string(PrototypeKind kind) {
  switch (kind) {
    case PrototypeKind::cir:
      return "cir";
    case PrototypeKind::ckls:
      return "ckls";
    case PrototypeKind::wf:
      return "wf";
  }
  return "?";
}

void check_prototype(const PrototypeParams& params, double horizon) {
  if (!(horizon > 0.0)) throw InvalidArgument("prototype: horizon must be positive");
  if (!(params.theta.grid_min(horizon) > 0.0)) {
    throw InvalidArgument("prototype: theta must be positive on [0, T]");
  }
  switch (params.kind) {
    case PrototypeKind::cir:
      if (!(params.x0 > 0.0)) throw InvalidArgument("prototype: CIR needs x0 > 0");
      break;
    case PrototypeKind::ckls:
      if (!(params.x0 > 0.0)) throw InvalidArgument("prototype: CKLS needs x0 > 0");
      if (!(params.gamma > 0.5 && params.gamma < 1.0)) {
        throw InvalidArgument("prototype: CKLS gamma must lie in (1/2, 1)");
      }
      break;
    case PrototypeKind::wf:
      if (!(params.x0 > 0.0 && params.x0 < 1.0)) throw InvalidArgument("prototype: WF needs x0 in (0, 1)");
      break;
  }
}

CoefficientFn unit_profile_sigma(PrototypeKind kind, double gamma) {
  CoefficientFn f;
  f.meta.lipschitz_K = 1.0;
  f.meta.holder_half_K = 0.0;
  f.meta.nonnegative = true;
  if (kind == PrototypeKind::wf) {
    f.fn = [](double, double x) { return std::max(x * (1.0 - x), 0.0); };
  } else {
    f.fn = [](double, double x) { return std::max(x, 0.0); };
  }
  (void)gamma;
  return f;
}

SdeModel make_prototype(const PrototypeParams& params, double horizon) {
  check_prototype(params, horizon);
  const ParamFn kappa = params.kappa;
  const ParamFn lambda = params.lambda;
  const ParamFn theta = params.theta;

  const double k_sup = kappa.sup_bound(horizon);
  const double l_sup = lambda.sup_bound(horizon);
  const double th_sup = theta.sup_bound(horizon);
  const double th_hold = theta.holder_half_bound(horizon);

  CoefficientFn drift;
  drift.fn = [kappa, lambda](double t, double x) { return kappa(t) * (lambda(t) - x); };
  drift.meta.lipschitz_K = k_sup;
  drift.meta.holder_half_K = std::max(k_sup * lambda.holder_half_bound(horizon) +
                                          l_sup * kappa.holder_half_bound(horizon),
                                      kappa.holder_half_bound(horizon));

  CoefficientFn sigma;
  sigma.meta.nonnegative = true;
  double gamma = 0.5;
  Domain domain{0.0, std::numeric_limits<double>::infinity()};
  switch (params.kind) {
    case PrototypeKind::cir:
      sigma.fn = [theta](double t, double x) {
        const double th = theta(t);
        return th * th * std::max(x, 0.0);
      };
      sigma.meta.lipschitz_K = th_sup * th_sup;
      sigma.meta.holder_half_K = 2.0 * th_sup * th_hold;
      break;
    case PrototypeKind::wf:
      sigma.fn = [theta](double t, double x) {
        const double th = theta(t);
        return th * th * std::max(x * (1.0 - x), 0.0);
      };
      sigma.meta.lipschitz_K = th_sup * th_sup;
      sigma.meta.holder_half_K = 2.0 * th_sup * th_hold;
      domain.right = 1.0;
      break;
    case PrototypeKind::ckls: {
      gamma = params.gamma;
      const double inv = 1.0 / gamma;
      sigma.fn = [theta, inv](double t, double x) { return std::pow(theta(t), inv) * std::max(x, 0.0); };
      sigma.meta.lipschitz_K = std::pow(th_sup, inv);
      sigma.meta.holder_half_K = inv * std::pow(th_sup, inv - 1.0) * th_hold;
      break;
    }
  }
  return make_model(std::move(drift), std::move(sigma), gamma, params.x0, domain, to_string(params.kind));
}

double linear_growth_constant(const PrototypeParams& params, double horizon) {
  // |kappa (lambda - x)| <= |kappa| (|lambda| + |x|); every profile h_i(x) <= 1 + |x|.
  const double k = params.kappa.sup_bound(horizon);
  const double l = params.lambda.sup_bound(horizon);
  return k * std::max(l, 1.0) + params.theta.sup_bound(horizon);
}

ValidationReport validate_assumptions(const CoefficientFn& f, const SamplingBox& box,
                                      std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("validate_assumptions: n_samples must be >= 1");
  if (!(box.t_lo <= box.t_hi && box.x_lo <= box.x_hi) || !std::isfinite(box.x_lo) ||
      !std::isfinite(box.x_hi) || !std::isfinite(box.t_lo) || !std::isfinite(box.t_hi)) {
    throw InvalidArgument("validate_assumptions: box must be bounded and ordered");
  }
  auto eval = [&f](double t, double x) {
    const double v = f(t, x);
    if (!std::isfinite(v)) throw InvalidCoefficient("coefficient is not finite", t, x);
    return v;
  };

  ValidationReport rep;
  rep.samples = n_samples;
  CounterStream rng(seed, 0x76616c6964617465ull);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const double s = rng.uniform(box.t_lo, box.t_hi);
    const double t = rng.uniform(box.t_lo, box.t_hi);
    const double x = rng.uniform(box.x_lo, box.x_hi);
    const double y = rng.uniform(box.x_lo, box.x_hi);
    const double ftx = eval(t, x);
    const double fsx = eval(s, x);
    const double fty = eval(t, y);
    rep.min_value = std::min({rep.min_value, ftx, fsx, fty});
    if (t != s) {
      rep.max_holder_ratio = std::max(
          rep.max_holder_ratio, std::abs(ftx - fsx) / ((1.0 + std::abs(x)) * std::sqrt(std::abs(t - s))));
    }
    if (x != y) {
      rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, std::abs(ftx - fty) / std::abs(x - y));
    }
  }
  if (f.meta.holder_half_K) {
    rep.holder_ok = rep.max_holder_ratio <= *f.meta.holder_half_K * (1.0 + kValidatorRelTol);
  }
  if (f.meta.lipschitz_K) {
    rep.lipschitz_ok = rep.max_lipschitz_ratio <= *f.meta.lipschitz_K * (1.0 + kValidatorRelTol);
  }
  rep.nonnegative_ok = rep.min_value >= 0.0;
  return rep;
}

}  // namespace he
