// SPDX-License-Identifier: MIT
#include "he/criteria.hpp"

#include "he/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace he {

namespace {

constexpr double kRefineAgreement = 1e-6;

/// Minimum of f over [0, T] on uniform grids, doubled until two agree.
double refined_min(const std::function<double(double)>& f, double horizon) {
  auto grid_min = [&](long n) {
    double m = f(0.0);
    for (long i = 1; i <= n; ++i) m = std::min(m, f(horizon * static_cast<double>(i) / n));
    return m;
  };
  long n = 64;
  double prev = grid_min(n);
  while (n < (1L << 22)) {
    n *= 2;
    const double cur = grid_min(n);
    if (std::abs(cur - prev) <= kRefineAgreement) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace

RatePrediction predict_rate(const PrototypeParams& params, double horizon) {
  check_prototype(params, horizon);
  const ParamFn kappa = params.kappa;
  const ParamFn lambda = params.lambda;
  const ParamFn theta = params.theta;

  RatePrediction pred;
  // a(t, 0) = kappa(t) lambda(t); a(t, 1) = kappa(t) (lambda(t) - 1).
  pred.mu0 = refined_min(
      [&](double t) {
        const double th = theta(t);
        return kappa(t) * lambda(t) / (th * th);
      },
      horizon);
  if (!(*pred.mu0 > 0.0)) throw HypothesisFailure("mu0 <= 0: drift at the lower boundary must push inward");

  switch (params.kind) {
    case PrototypeKind::cir:
      pred.lambda_sup = std::min(0.5, *pred.mu0);
      pred.provenance = "Prop2.2i";
      break;
    case PrototypeKind::wf:
      pred.mu1 = refined_min(
          [&](double t) {
            const double th = theta(t);
            return kappa(t) * (1.0 - lambda(t)) / (th * th);
          },
          horizon);
      if (!(*pred.mu1 > 0.0)) throw HypothesisFailure("mu1 <= 0: drift at the upper boundary must push inward");
      pred.lambda_sup = std::min({0.5, *pred.mu0, *pred.mu1});
      pred.provenance = "Prop2.2ii";
      break;
    case PrototypeKind::ckls:
      pred.lambda_sup = 0.5;
      pred.provenance = "Prop2.3";
      break;
  }
  pred.s_exponent = 0.5 - pred.lambda_sup;
  return pred;
}

double theorem_rate(double gamma, double s_exponent) {
  if (!(gamma >= 0.5 && gamma < 1.0)) throw InvalidArgument("theorem_rate: gamma must lie in [1/2, 1)");
  if (!(s_exponent >= 0.0 && s_exponent <= 1.0 - gamma)) {
    throw InvalidArgument("theorem_rate: s must lie in [0, 1 - gamma]");
  }
  return 0.5 - s_exponent;
}

void check_autonomous(const AutonomousModel& model) {
  if (!model.a || !model.da || !model.sigma || !model.dsigma || !model.d2sigma) {
    throw InvalidArgument("autonomous model: a, a', sigma, sigma', sigma'' are all required");
  }
  if (!(model.gamma >= 0.5 && model.gamma < 1.0)) throw InvalidArgument("autonomous model: gamma must lie in [1/2, 1)");
  if (!(model.domain.left < model.domain.right)) throw InvalidArgument("autonomous model: domain needs l < r");
  if (!model.domain.contains(model.x0)) throw InvalidArgument("autonomous model: x0 outside the domain");
  auto [left, right] = approach_sequences(model.domain, model.x0, 40);
  left.push_back(model.x0);
  left.insert(left.end(), right.begin(), right.end());
  for (const double x : left) {
    const double s = model.sigma(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("autonomous model: sigma must be positive inside the domain (fails at x = " +
                            std::to_string(x) + ")");
    }
  }
}

AutonomousModel autonomous_prototype(const PrototypeParams& params) {
  if (!params.kappa.is_constant() || !params.lambda.is_constant() || !params.theta.is_constant()) {
    throw InvalidArgument("autonomous prototype: kappa, lambda and theta must be constant");
  }
  const double k = params.kappa(0.0);
  const double l = params.lambda(0.0);
  const double th = params.theta(0.0);
  if (!(th > 0.0)) throw InvalidArgument("autonomous prototype: theta must be positive");

  AutonomousModel m;
  m.a = [k, l](double x) { return k * (l - x); };
  m.da = [k](double) { return -k; };
  m.x0 = params.x0;
  m.domain = Domain{0.0, std::numeric_limits<double>::infinity()};
  switch (params.kind) {
    case PrototypeKind::cir: {
      const double s = th * th;
      m.sigma = [s](double x) { return s * x; };
      m.dsigma = [s](double) { return s; };
      m.d2sigma = [](double) { return 0.0; };
      m.gamma = 0.5;
      break;
    }
    case PrototypeKind::wf: {
      const double s = th * th;
      m.sigma = [s](double x) { return s * x * (1.0 - x); };
      m.dsigma = [s](double x) { return s * (1.0 - 2.0 * x); };
      m.d2sigma = [s](double) { return -2.0 * s; };
      m.gamma = 0.5;
      m.domain.right = 1.0;
      break;
    }
    case PrototypeKind::ckls: {
      const double s = std::pow(th, 1.0 / params.gamma);
      m.sigma = [s](double x) { return s * x; };
      m.dsigma = [s](double) { return s; };
      m.d2sigma = [](double) { return 0.0; };
      m.gamma = params.gamma;
      break;
    }
  }
  return m;
}

std::pair<std::vector<double>, std::vector<double>> approach_sequences(const Domain& domain, double origin,
                                                                       int refinements) {
  if (!domain.contains(origin)) throw InvalidArgument("approach_sequences: origin outside the domain");
  const double scale = std::max(1.0, std::abs(origin));
  std::vector<double> left, right;
  left.reserve(refinements);
  right.reserve(refinements);
  for (int j = 1; j <= refinements; ++j) {
    left.push_back(std::isfinite(domain.left) ? domain.left + std::ldexp(origin - domain.left, -j)
                                              : origin - std::ldexp(scale, j - 1));
    right.push_back(std::isfinite(domain.right) ? domain.right - std::ldexp(domain.right - origin, -j)
                                                : origin + std::ldexp(scale, j - 1));
  }
  return {left, right};
}

DerivativeCheck check_derivatives(const AutonomousModel& model, double rel_tol) {
  auto [left, right] = approach_sequences(model.domain, model.x0, 12);
  std::vector<double> points{model.x0};
  points.insert(points.end(), left.begin(), left.end());
  points.insert(points.end(), right.begin(), right.end());

  DerivativeCheck out;
  auto compare = [&](const char* name, double user, double fd, double x) {
    const double mismatch = std::abs(user - fd) / std::max(1.0, std::abs(user));
    if (mismatch > out.worst_mismatch) {
      out.worst_mismatch = mismatch;
      out.worst_x = x;
      out.which = name;
    }
  };
  for (const double x : points) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    const double room = std::min(x - model.domain.left, model.domain.right - x);
    if (!(room >= 1e4 * h)) continue;
    compare("a'", model.da(x), (model.a(x + h) - model.a(x - h)) / (2.0 * h), x);
    compare("sigma'", model.dsigma(x), (model.sigma(x + h) - model.sigma(x - h)) / (2.0 * h), x);
    compare("sigma''", model.d2sigma(x), (model.dsigma(x + h) - model.dsigma(x - h)) / (2.0 * h), x);
  }
  out.ok = out.worst_mismatch <= rel_tol;
  return out;
}

std::string to_string(Trend trend) {
  switch (trend) {
    case Trend::bounded_below:
      return "bounded-below";
    case Trend::diverging_to_minus_infinity:
      return "diverging-to-minus-infinity";
    case Trend::inconclusive:
      return "inconclusive";
  }
  return "?";
}

double ito_function(const AutonomousModel& model, double x) {
  const double s = model.sigma(x);
  const double ds = model.dsigma(x);
  const double g = model.gamma;
  return ds * model.a(x) / s + 0.5 * model.d2sigma(x) * std::pow(s, 2.0 * g - 1.0) +
         (g - 1.5) * ds * ds * std::pow(s, 2.0 * g - 2.0);
}

namespace {

Trend classify_ito_tail(const std::vector<std::pair<double, double>>& seq, int tail, double margin) {
  const int n = static_cast<int>(seq.size());
  if (n < tail + 2) return Trend::inconclusive;
  std::vector<double> d;
  for (int j = n - tail; j < n; ++j) {
    if (!std::isfinite(seq[j].second) || !std::isfinite(seq[j - 1].second)) return Trend::inconclusive;
    d.push_back(seq[j].second - seq[j - 1].second);
  }
  const bool all_down = std::all_of(d.begin(), d.end(), [](double v) { return v < 0.0; });
  if (all_down) {
    bool nonshrinking = true;
    for (std::size_t i = 1; i < d.size(); ++i) nonshrinking &= std::abs(d[i]) >= (1.0 - margin) * std::abs(d[i - 1]);
    return nonshrinking ? Trend::diverging_to_minus_infinity : Trend::bounded_below;
  }
  if (std::all_of(d.begin(), d.end(), [](double v) { return v >= 0.0; })) return Trend::bounded_below;
  bool shrinking = true;
  for (std::size_t i = 1; i < d.size(); ++i) shrinking &= std::abs(d[i]) <= (1.0 - margin) * std::abs(d[i - 1]);
  if (shrinking) return Trend::bounded_below;
  // Oscillating tail: bounded if it stays within one range width of the values seen before it.
  double lo = seq[0].second, hi = lo;
  for (int j = 1; j < n - tail; ++j) {
    lo = std::min(lo, seq[j].second);
    hi = std::max(hi, seq[j].second);
  }
  double tail_min = seq[n - tail].second;
  for (int j = n - tail; j < n; ++j) tail_min = std::min(tail_min, seq[j].second);
  return tail_min >= lo - (hi - lo) - margin ? Trend::bounded_below : Trend::inconclusive;
}

}  // namespace

CriterionReport ito_criterion(const AutonomousModel& model, const ItoGridSpec& grid) {
  check_autonomous(model);
  const double origin = grid.origin.value_or(model.x0);
  auto [left, right] = approach_sequences(model.domain, origin, grid.refinements);

  CriterionReport rep;
  rep.derivatives = check_derivatives(model);
  if (!rep.derivatives.ok) {
    throw InvalidArgument("ito_criterion: supplied " + rep.derivatives.which +
                          " disagrees with central differences at x = " + std::to_string(rep.derivatives.worst_x));
  }

  auto eval = [&](double x) {
    const double s = model.sigma(x);
    if (!(s > 0.0)) throw InvalidArgument("ito_criterion: sigma <= 0 at interior point x = " + std::to_string(x));
    return ito_function(model, x);
  };
  rep.inf_estimate = eval(origin);
  rep.argmin_x = origin;
  auto walk = [&](const std::vector<double>& xs, std::vector<std::pair<double, double>>& seq) {
    seq.emplace_back(origin, rep.inf_estimate);
    for (const double x : xs) {
      const double g = eval(x);
      seq.emplace_back(x, g);
      if (g < rep.inf_estimate) {
        rep.inf_estimate = g;
        rep.argmin_x = x;
      }
    }
  };
  walk(left, rep.left_sequence);
  walk(right, rep.right_sequence);
  const double margin = 0.01;
  rep.left = classify_ito_tail(rep.left_sequence, grid.tail, margin);
  rep.right = classify_ito_tail(rep.right_sequence, grid.tail, margin);

  if (rep.left == Trend::diverging_to_minus_infinity || rep.right == Trend::diverging_to_minus_infinity) {
    rep.classification = Trend::diverging_to_minus_infinity;
  } else if (rep.left == Trend::bounded_below && rep.right == Trend::bounded_below) {
    rep.classification = Trend::bounded_below;
    rep.s_exponent = 0.0;
    rep.lambda_sup = 0.5;
  } else {
    rep.classification = Trend::inconclusive;
  }
  return rep;
}

std::string to_string(EndpointClass c) {
  switch (c) {
    case EndpointClass::divergent:
      return "divergent";
    case EndpointClass::finite:
      return "finite";
    case EndpointClass::inconclusive:
      return "inconclusive";
  }
  return "?";
}

std::string to_string(Conclusion c) {
  switch (c) {
    case Conclusion::no_exit:
      return "no-exit";
    case Conclusion::exit_possible:
      return "exit-possible";
    case Conclusion::inconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

/// Running values of log p'(y), I(y) = int_o^y 2 / (p' c^2) and v(y).
struct ScaleState {
  double log_dp = 0.0;
  double inner = 0.0;
  double v = 0.0;
};

class FellerIntegrator {
 public:
  explicit FellerIntegrator(const AutonomousModel& model) : model_(model) {}

  double c2(double x) const { return std::pow(model_.sigma(x), 2.0 * model_.gamma); }

  /// Advances the state from u to w with nested adaptive Simpson.
  bool advance(ScaleState& st, double u, double w) const {
    bool ok = true;
    const SimpsonOptions tight{1e-300, 1e-10, 30, 200000};
    auto log_dp = [&](double y) {
      auto r = adaptive_simpson([&](double z) { return -2.0 * model_.a(z) / c2(z); }, u, y, tight);
      ok &= r.converged;
      return st.log_dp + r.value;
    };
    auto inner = [&](double y) {
      auto r = adaptive_simpson([&](double z) { return 2.0 * std::exp(-log_dp(z)) / c2(z); }, u, y, tight);
      ok &= r.converged;
      return st.inner + r.value;
    };
    auto dv = adaptive_simpson([&](double y) { return std::exp(log_dp(y)) * inner(y); }, u, w, tight);
    ok &= dv.converged;
    const double next_log = log_dp(w);
    const double next_inner = inner(w);
    st.v += dv.value;
    st.log_dp = next_log;
    st.inner = next_inner;
    return ok && std::isfinite(st.v);
  }

 private:
  const AutonomousModel& model_;
};

EndpointResult run_endpoint(const FellerIntegrator& integ, double origin, const std::vector<double>& xs,
                            const FellerOptions& opt) {
  EndpointResult res;
  ScaleState st;
  double prev_x = origin;
  std::vector<double> increments;
  bool quadrature_ok = true;
  for (const double x : xs) {
    const double before = st.v;
    bool ok = true;
    for (int i = 0; i < opt.sub_nodes && ok; ++i) {
      const double u = prev_x + (x - prev_x) * i / opt.sub_nodes;
      const double w = (i + 1 == opt.sub_nodes) ? x : prev_x + (x - prev_x) * (i + 1) / opt.sub_nodes;
      ok = integ.advance(st, u, w);
    }
    if (!std::isfinite(st.v) || !std::isfinite(st.log_dp) || !std::isfinite(st.inner)) {
      res.overflowed = true;
      break;
    }
    quadrature_ok &= ok;
    increments.push_back(st.v - before);
    res.sequence.emplace_back(x, st.v);
    prev_x = x;
    const auto n = static_cast<int>(increments.size());
    if (st.v > opt.threshold && n >= opt.tail &&
        std::all_of(increments.end() - opt.tail, increments.end(), [](double d) { return d > 0.0; })) {
      res.classification = EndpointClass::divergent;
      return res;
    }
  }

  const auto n = static_cast<int>(increments.size());
  if (n < opt.tail + 1) return res;
  const bool tail_positive =
      std::all_of(increments.end() - opt.tail, increments.end(), [](double d) { return d > 0.0; });
  if (res.overflowed && tail_positive) {
    res.classification = EndpointClass::divergent;
    return res;
  }
  if (!quadrature_ok || !tail_positive) return res;

  std::vector<double> ratios;
  for (int j = n - opt.tail; j < n; ++j) ratios.push_back(increments[j] / increments[j - 1]);
  if (std::all_of(ratios.begin(), ratios.end(), [](double r) { return r >= 1.0; })) {
    res.classification = EndpointClass::divergent;
  } else if (std::all_of(ratios.begin(), ratios.end(), [&](double r) { return r <= 1.0 - opt.ratio_margin; })) {
    const double r = *std::max_element(ratios.begin(), ratios.end());
    res.classification = EndpointClass::finite;
    res.estimate = st.v + increments.back() * r / (1.0 - r);
  }
  return res;
}

}  // namespace

FellerResult feller_test(const AutonomousModel& model, double origin, const FellerOptions& options) {
  check_autonomous(model);
  if (!model.domain.contains(origin)) throw InvalidArgument("feller_test: origin outside the domain");
  FellerIntegrator integ(model);

  FellerResult out;
  const double eps = 0.5 * std::min({origin - model.domain.left, model.domain.right - origin, 1.0});
  auto local = adaptive_simpson([&](double y) { return (1.0 + std::abs(model.a(y))) / integ.c2(y); },
                                origin - eps, origin + eps, SimpsonOptions{1e-300, 1e-10, 40, 2000000});
  out.local_integrability_ok = local.converged && std::isfinite(local.value);
  if (!out.local_integrability_ok) return out;

  auto [left, right] = approach_sequences(model.domain, origin, options.refinements);
  out.left = run_endpoint(integ, origin, left, options);
  out.right = run_endpoint(integ, origin, right, options);
  if (out.left.classification == EndpointClass::divergent && out.right.classification == EndpointClass::divergent) {
    out.conclusion = Conclusion::no_exit;
  } else if (out.left.classification == EndpointClass::finite || out.right.classification == EndpointClass::finite) {
    out.conclusion = Conclusion::exit_possible;
  }
  return out;
}

TimeChange::TimeChange(ParamFn theta, double horizon, int cells)
    : theta_(theta), horizon_(horizon), cell_(horizon / cells) {
  if (!(horizon > 0.0) || cells < 1) throw InvalidArgument("time change: horizon and cell count must be positive");
  if (!(theta_.grid_min(horizon) > 0.0)) throw InvalidArgument("time change: theta must be positive on [0, T]");
  auto sq = [this](double t) {
    const double v = theta_(t);
    return v * v;
  };
  const double rough = adaptive_simpson(sq, 0.0, horizon, SimpsonOptions{0.0, 1e-8, 40}).value;
  cell_tol_ = 1e-12 * rough / cells;
  table_.resize(cells + 1);
  table_[0] = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double a = i * cell_;
    const double b = (i + 1 == cells) ? horizon : (i + 1) * cell_;
    table_[i + 1] = table_[i] + adaptive_simpson(sq, a, b, SimpsonOptions{cell_tol_, 0.0, 40}).value;
  }
}

double TimeChange::Theta(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) throw InvalidArgument("time change: t outside [0, T]");
  const int cells = static_cast<int>(table_.size()) - 1;
  const int i = std::min(static_cast<int>(t / cell_), cells - 1);
  const double a = i * cell_;
  if (t == a) return table_[i];
  auto sq = [this](double s) {
    const double v = theta_(s);
    return v * v;
  };
  return table_[i] + adaptive_simpson(sq, a, t, SimpsonOptions{cell_tol_, 0.0, 40}).value;
}

double TimeChange::A(double tau) const {
  const double top = table_.back();
  if (!(tau >= 0.0 && tau <= top * (1.0 + 1e-14))) throw InvalidArgument("time change: tau outside [0, Theta(T)]");
  tau = std::min(tau, top);
  const auto it = std::upper_bound(table_.begin(), table_.end(), tau);
  const int cells = static_cast<int>(table_.size()) - 1;
  const int i = std::clamp(static_cast<int>(it - table_.begin()) - 1, 0, cells - 1);
  double lo = i * cell_;
  double hi = (i + 1 == cells) ? horizon_ : (i + 1) * cell_;
  const double span = table_[i + 1] - table_[i];
  double t = span > 0.0 ? lo + (hi - lo) * (tau - table_[i]) / span : lo;
  const double tol = 1e-3 * kTimeChangeInverseTol * horizon_;
  for (int iter = 0; iter < 100; ++iter) {
    const double f = Theta(t) - tau;
    if (f > 0.0) hi = t; else lo = t;
    const double th = theta_(t);
    double next = t - f / (th * th);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= tol || hi - lo <= tol) return next;
    t = next;
  }
  return t;
}

TimeChange build_timechange(const ParamFn& theta, double horizon) { return TimeChange(theta, horizon); }

}  // namespace he
