// SPDX-License-Identifier: MIT
#include "he/montecarlo.hpp"

#include "he/brownian.hpp"
#include "he/parallel.hpp"
#include "he/random.hpp"
#include "he/schemes.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

namespace he {

namespace {

constexpr std::uint64_t kNoPath = std::numeric_limits<std::uint64_t>::max();

struct Explosions {
  std::int64_t count = 0;
  std::uint64_t first_path = kNoPath;
  std::int64_t first_step = 0;

  void record(std::uint64_t path, std::int64_t step) {
    ++count;
    if (path < first_path) {
      first_path = path;
      first_step = step;
    }
  }
  void merge(const Explosions& o) {
    count += o.count;
    if (o.first_path < first_path) {
      first_path = o.first_path;
      first_step = o.first_step;
    }
  }
  [[noreturn]] void raise() const {
    throw SimulationAbort("path " + std::to_string(first_path) + " produced a non-finite state at step " +
                              std::to_string(first_step),
                          first_path, first_step);
  }
};

/// Halves `buf` (holding 2^from increments) down to 2^to increments in place.
void halve_to(Eigen::VectorXd& buf, int from, int to) {
  for (int l = from; l > to; --l) halve_increments(buf.data(), buf.data(), std::int64_t{1} << (l - 1));
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (!(c.horizon > 0.0)) throw ConfigError("experiment: horizon must be positive");
  if (c.level_min < 0 || c.level_min > c.level_max) throw ConfigError("experiment: levels need 0 <= min <= max");
  if (c.ref_level < c.level_max + kReferenceGap) {
    throw ConfigError("experiment: reference gap rule violated: ref_level (" + std::to_string(c.ref_level) +
                      ") must be >= level_max + " + std::to_string(kReferenceGap) + " (" +
                      std::to_string(c.level_max + kReferenceGap) + ")");
  }
  if (c.ref_level > kMaxLatticeLevel) {
    throw ConfigError("experiment: ref_level exceeds the lattice memory guard (" + std::to_string(kMaxLatticeLevel) +
                      ")");
  }
  if (c.paths < kMinPaths) throw ConfigError("experiment: paths must be >= " + std::to_string(kMinPaths));
}

std::optional<OrderFit> fit_order(const std::vector<LevelError>& levels) {
  OrderFit fit;
  std::vector<double> xs, ys;
  for (const auto& l : levels) {
    const bool usable = l.error > 0.0 && std::isfinite(l.error) && l.std_error <= kFitStderrCutoff * l.error;
    if (usable) {
      xs.push_back(l.level);
      ys.push_back(std::log2(l.error));
    } else {
      fit.excluded_levels.push_back(l.level);
    }
  }
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < 3) return std::nullopt;

  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = xs[i];
    y[i] = ys[i];
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - design * beta;
  const double ssr = resid.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  const double x_mean = design.col(1).mean();
  const double sxx = (design.col(1).array() - x_mean).square().sum();

  fit.intercept = beta[0];
  fit.lambda_hat = -beta[1];
  fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

ConvergenceReport estimate_strong_error(const ExperimentConfig& config) {
  validate(config);
  const SdeModel& model = config.model;
  const int lmin = config.level_min;
  const int lmax = config.level_max;
  const int lref = config.ref_level;
  const double T = config.horizon;

  struct Acc {
    std::vector<Eigen::ArrayXd> sum, sumsq;
    std::int64_t used = 0;
    Explosions boom;
  };
  struct Scratch {
    Eigen::VectorXd fine, buf, ref;
    std::vector<Eigen::VectorXd> vals;
  };

  auto make_acc = [&] {
    Acc a;
    for (int l = lmin; l <= lmax; ++l) {
      a.sum.push_back(Eigen::ArrayXd::Zero((Eigen::Index{1} << l) + 1));
      a.sumsq.push_back(Eigen::ArrayXd::Zero((Eigen::Index{1} << l) + 1));
    }
    return a;
  };
  auto make_scratch = [&] {
    Scratch s;
    s.ref.resize((Eigen::Index{1} << lmax) + 1);
    for (int l = lmin; l <= lmax; ++l) s.vals.emplace_back((Eigen::Index{1} << l) + 1);
    return s;
  };
  auto path = [&](std::int64_t m, Acc& acc, Scratch& s) {
    sample_increments(config.seed, static_cast<std::uint64_t>(m), lref, T, s.fine);
    auto boom = euler_run(model, std::ldexp(T, -lref), s.fine, std::int64_t{1} << (lref - lmax), s.ref);
    if (boom) {
      acc.boom.record(m, *boom);
      return;
    }
    s.buf = s.fine;
    halve_to(s.buf, lref, lmax);
    for (int l = lmax; l >= lmin; --l) {
      const auto n = std::int64_t{1} << l;
      auto& vals = s.vals[l - lmin];
      boom = euler_run(model, std::ldexp(T, -l), s.buf.head(n), 1, vals);
      if (boom) {
        acc.boom.record(m, *boom);
        return;
      }
      if (l > lmin) halve_to(s.buf, l, l - 1);
    }
    for (int l = lmin; l <= lmax; ++l) {
      const auto stride = Eigen::Index{1} << (lmax - l);
      const auto& vals = s.vals[l - lmin];
      auto& sum = acc.sum[l - lmin];
      auto& sumsq = acc.sumsq[l - lmin];
      for (Eigen::Index k = 0; k < vals.size(); ++k) {
        const double d = std::abs(s.ref[k * stride] - vals[k]);
        sum[k] += d;
        sumsq[k] += d * d;
      }
    }
    ++acc.used;
  };
  auto merge = [](Acc& into, const Acc& from) {
    for (std::size_t i = 0; i < into.sum.size(); ++i) {
      into.sum[i] += from.sum[i];
      into.sumsq[i] += from.sumsq[i];
    }
    into.used += from.used;
    into.boom.merge(from.boom);
  };

  Acc acc = reduce_paths(config.paths, config.workers, make_acc, make_scratch, path, merge);
  if (acc.boom.count > 0 && !config.allow_explosions) acc.boom.raise();
  if (acc.used < 2) throw SimulationAbort("fewer than two usable paths", acc.boom.first_path, acc.boom.first_step);

  ConvergenceReport rep;
  rep.paths_used = acc.used;
  rep.exploded_paths = acc.boom.count;
  const double m = static_cast<double>(acc.used);
  for (int l = lmin; l <= lmax; ++l) {
    const Eigen::ArrayXd mean = acc.sum[l - lmin] / m;
    Eigen::Index kmax = 0;
    const double err = mean.maxCoeff(&kmax);
    const double var = std::max(0.0, (acc.sumsq[l - lmin][kmax] - m * mean[kmax] * mean[kmax]) / (m - 1.0));
    LevelError le;
    le.level = l;
    le.steps = std::int64_t{1} << l;
    le.dt = std::ldexp(T, -l);
    le.error = err;
    le.std_error = std::sqrt(var / m);
    le.argmax_k = kmax;
    rep.levels.push_back(le);
  }
  rep.fit = fit_order(rep.levels);
  return rep;
}

double MomentCondition::q() const { return q_override.value_or(2.0 * (gamma + s_exponent - 1.0)); }

double MomentCondition::beta() const { return 1.0 - (s_exponent + 0.5 * epsilon) / (1.0 - gamma); }

double MomentCondition::proof_exponent() const { return 2.0 * (gamma - 1.0) * beta() - epsilon; }

void MomentCondition::validate() const {
  if (!(gamma >= 0.5 && gamma < 1.0)) throw InvalidArgument("moment condition: gamma must lie in [1/2, 1)");
  if (!(s_exponent >= 0.0 && s_exponent + gamma <= 1.0)) {
    throw InvalidArgument("moment condition: s must lie in [0, 1 - gamma]");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("moment condition: epsilon must be positive");
  if (!(q() <= 0.0)) throw InvalidArgument("moment condition: exponent q must be <= 0");
}

MomentEstimate estimate_inverse_moment(const SdeModel& model, const MomentCondition& cond,
                                       const MomentOptions& opt) {
  cond.validate();
  const int lref = opt.ref_level;
  if (lref < 2 || lref > kMaxLatticeLevel) throw InvalidArgument("inverse moment: ref_level must lie in [2, 26]");
  if (opt.paths < 2) throw InvalidArgument("inverse moment: need at least two paths");
  if (!(opt.cap > 0.0)) throw InvalidArgument("inverse moment: cap must be positive");

  MomentEstimate est;
  est.q = cond.q();
  const double T = opt.horizon;
  if (est.q == 0.0) {
    for (int l = lref - 2; l <= lref; ++l) est.levels.push_back(MomentLevel{l, T, 0.0, T, 0});
    return est;
  }

  constexpr int kLevels = 3;
  struct Acc {
    std::array<double, kLevels> sum{}, sumsq{}, finite{};
    std::array<std::int64_t, kLevels> caps{};
    Explosions boom;
  };
  struct Scratch {
    Eigen::VectorXd fine, buf, vals;
  };
  const double q = est.q;
  auto path = [&](std::int64_t m, Acc& acc, Scratch& s) {
    sample_increments(opt.seed, static_cast<std::uint64_t>(m), lref, T, s.fine);
    s.buf = s.fine;
    std::array<double, kLevels> total{}, finite{};
    std::array<std::int64_t, kLevels> caps{};
    for (int i = kLevels - 1; i >= 0; --i) {
      const int l = lref - (kLevels - 1 - i);
      const auto n = std::int64_t{1} << l;
      const double dt = std::ldexp(T, -l);
      const double floor = dt;  // sigma below one step is not resolved by the grid
      s.vals.resize(n + 1);
      const auto boom = euler_run(model, dt, s.buf.head(n), 1, s.vals);
      if (boom) {
        acc.boom.record(m, *boom);
        return;
      }
      for (std::int64_t j = 0; j < n; ++j) {
        const double t = static_cast<double>(j) * dt;
        const double sig = model.base_sigma(t, s.vals[j]);
        if (!std::isfinite(sig)) throw InvalidCoefficient("diffusion coefficient is not finite", t, s.vals[j]);
        if (!(sig > floor)) {
          total[i] += std::min(opt.cap, std::pow(floor, q)) * dt;
          ++caps[i];
        } else {
          const double v = std::pow(sig, q);
          total[i] += v * dt;
          finite[i] += v * dt;
        }
      }
      if (i > 0) halve_to(s.buf, l, l - 1);
    }
    for (int i = 0; i < kLevels; ++i) {
      acc.sum[i] += total[i];
      acc.sumsq[i] += total[i] * total[i];
      acc.finite[i] += finite[i];
      acc.caps[i] += caps[i];
    }
  };
  auto merge = [](Acc& into, const Acc& from) {
    for (int i = 0; i < kLevels; ++i) {
      into.sum[i] += from.sum[i];
      into.sumsq[i] += from.sumsq[i];
      into.finite[i] += from.finite[i];
      into.caps[i] += from.caps[i];
    }
    into.boom.merge(from.boom);
  };
  Acc acc = reduce_paths(
      opt.paths, opt.workers, [] { return Acc{}; }, [] { return Scratch{}; }, path, merge);
  if (acc.boom.count > 0) acc.boom.raise();

  const double m = static_cast<double>(opt.paths);
  for (int i = 0; i < kLevels; ++i) {
    MomentLevel ml;
    ml.ref_level = lref - (kLevels - 1 - i);
    ml.estimate = acc.sum[i] / m;
    ml.std_error = std::sqrt(std::max(0.0, (acc.sumsq[i] - m * ml.estimate * ml.estimate) / (m - 1.0)) / m);
    ml.finite_part = acc.finite[i] / m;
    ml.cap_hits = acc.caps[i];
    est.levels.push_back(ml);
  }
  const double g = opt.growth_factor;
  est.divergence_flag = est.levels[1].estimate > g * est.levels[0].estimate &&
                        est.levels[2].estimate > g * est.levels[1].estimate;
  double lo = est.levels[0].estimate, hi = lo, mean = 0.0;
  for (const auto& l : est.levels) {
    lo = std::min(lo, l.estimate);
    hi = std::max(hi, l.estimate);
    mean += l.estimate / kLevels;
  }
  est.relative_spread = mean > 0.0 ? (hi - lo) / mean : 0.0;
  return est;
}

namespace {

void check_comparison_preconditions(const SdeModel& lo, const SdeModel& hi, const ComparisonOptions& opt) {
  if (lo.gamma != hi.gamma) throw InvalidArgument("comparison: models must share gamma");
  if (!(lo.x0 <= hi.x0)) throw InvalidArgument("comparison: need x0_lo <= x0_hi");
  CounterStream rng(opt.seed, 0x636f6d70617265ull);
  const double x_lo = std::min(lo.x0, hi.x0) - 10.0;
  const double x_hi = std::max(lo.x0, hi.x0) + 10.0;
  for (std::int64_t i = 0; i < opt.precondition_samples; ++i) {
    const double t = rng.uniform(0.0, opt.horizon);
    const double x = rng.uniform(x_lo, x_hi);
    if (lo.base_sigma(t, x) != hi.base_sigma(t, x)) {
      throw InvalidArgument("comparison: diffusion coefficients differ at t = " + std::to_string(t) +
                            ", x = " + std::to_string(x));
    }
    const double alo = lo.drift(t, x);
    const double ahi = hi.drift(t, x);
    if (alo > ahi + 1e-12 * (1.0 + std::abs(ahi))) {
      throw InvalidArgument("comparison: drift ordering a_lo <= a_hi fails at t = " + std::to_string(t) +
                            ", x = " + std::to_string(x));
    }
  }
}

}  // namespace

ComparisonReport comparison_check(const SdeModel& model_lo, const SdeModel& model_hi,
                                  const ComparisonOptions& opt) {
  if (opt.levels.empty()) throw InvalidArgument("comparison: at least one level is required");
  if (opt.paths < 1) throw InvalidArgument("comparison: paths must be positive");
  check_comparison_preconditions(model_lo, model_hi, opt);
  std::vector<int> levels = opt.levels;
  std::sort(levels.begin(), levels.end());
  const int top = levels.back();
  if (levels.front() < 0 || top > kMaxLatticeLevel) throw InvalidArgument("comparison: level out of range");
  const double T = opt.horizon;
  const auto nl = levels.size();

  struct Acc {
    std::vector<std::int64_t> violations;
    std::vector<double> worst;
    Explosions boom;
  };
  struct Scratch {
    Eigen::VectorXd fine, buf, lo, hi;
  };
  auto make_acc = [&] { return Acc{std::vector<std::int64_t>(nl, 0), std::vector<double>(nl, 0.0), {}}; };
  auto path = [&](std::int64_t m, Acc& acc, Scratch& s) {
    sample_increments(opt.seed, static_cast<std::uint64_t>(m), top, T, s.fine);
    s.buf = s.fine;
    int current = top;
    for (std::size_t i = nl; i-- > 0;) {
      const int l = levels[i];
      halve_to(s.buf, current, l);
      current = l;
      const auto n = std::int64_t{1} << l;
      s.lo.resize(n + 1);
      s.hi.resize(n + 1);
      const double dt = std::ldexp(T, -l);
      auto b1 = euler_run(model_lo, dt, s.buf.head(n), 1, s.lo);
      auto b2 = euler_run(model_hi, dt, s.buf.head(n), 1, s.hi);
      if (b1 || b2) {
        acc.boom.record(m, b1 ? *b1 : *b2);
        return;
      }
      const double gap = (s.hi - s.lo).minCoeff();
      if (gap < -opt.tolerance) {
        ++acc.violations[i];
        acc.worst[i] = std::max(acc.worst[i], -gap);
      }
    }
  };
  auto merge = [&](Acc& into, const Acc& from) {
    for (std::size_t i = 0; i < nl; ++i) {
      into.violations[i] += from.violations[i];
      into.worst[i] = std::max(into.worst[i], from.worst[i]);
    }
    into.boom.merge(from.boom);
  };
  Acc acc = reduce_paths(
      opt.paths, opt.workers, make_acc, [] { return Scratch{}; }, path, merge);
  if (acc.boom.count > 0) acc.boom.raise();

  ComparisonReport rep;
  for (std::size_t i = 0; i < nl; ++i) {
    rep.levels.push_back(ComparisonLevel{levels[i], acc.violations[i],
                                         static_cast<double>(acc.violations[i]) / static_cast<double>(opt.paths),
                                         acc.worst[i]});
    if (i > 0 && rep.levels[i].fraction > rep.levels[i - 1].fraction) rep.nonincreasing = false;
  }
  return rep;
}

SdeModel time_changed_model(const PrototypeParams& params, const TimeChange& clock, int level) {
  TimeGrid grid(clock.horizon_image(), level);
  const auto n = grid.steps();
  auto speed = std::make_shared<std::vector<double>>(n + 1);
  auto target = std::make_shared<std::vector<double>>(n + 1);
  const ParamFn kappa = params.kappa;
  const ParamFn lambda = params.lambda;
  const ParamFn theta = params.theta;
  auto exact = [kappa, lambda, theta, &clock](double s, double& k, double& l) {
    const double t = clock.A(s);
    const double th = theta(t);
    k = kappa(t) / (th * th);
    l = lambda(t);
  };
  for (std::int64_t i = 0; i <= n; ++i) exact(grid.node(i), (*speed)[i], (*target)[i]);

  // Euler only queries grid nodes; anything else falls back to inverting the clock.
  const double ds = grid.dt();
  TimeChange clock_copy = clock;
  CoefficientFn drift;
  drift.fn = [speed, target, ds, n, kappa, lambda, theta, clock_copy](double s, double x) {
    const double pos = s / ds;
    const auto i = static_cast<std::int64_t>(pos);
    if (i >= 0 && i <= n && static_cast<double>(i) * ds == s) return (*speed)[i] * ((*target)[i] - x);
    const double t = clock_copy.A(s);
    const double th = theta(t);
    return kappa(t) / (th * th) * (lambda(t) - x);
  };
  const double gamma = params.kind == PrototypeKind::ckls ? params.gamma : 0.5;
  Domain domain{0.0, params.kind == PrototypeKind::wf ? 1.0 : std::numeric_limits<double>::infinity()};
  return make_model(std::move(drift), unit_profile_sigma(params.kind, gamma), gamma, params.x0, domain,
                    to_string(params.kind) + "-time-changed");
}

TimeChangeReport timechange_check(const PrototypeParams& params, const TimeChangeOptions& opt) {
  check_prototype(params, opt.horizon);
  if (opt.paths < 2) throw InvalidArgument("time change check: need at least two paths");
  const TimeChange clock = build_timechange(params.theta, opt.horizon);
  const SdeModel original = make_prototype(params, opt.horizon);
  const SdeModel changed = time_changed_model(params, clock, opt.level);

  struct Moments {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    Explosions boom;
  };
  struct Scratch {
    Eigen::VectorXd inc, vals;
  };
  auto terminal_moments = [&](const SdeModel& model, double horizon, std::uint64_t seed) {
    auto path = [&](std::int64_t m, Moments& acc, Scratch& s) {
      sample_increments(seed, static_cast<std::uint64_t>(m), opt.level, horizon, s.inc);
      s.vals.resize(2);
      const auto boom = euler_run(model, std::ldexp(horizon, -opt.level), s.inc, s.inc.size(), s.vals);
      if (boom) {
        acc.boom.record(m, *boom);
        return;
      }
      const double x = s.vals[1];
      const double x2 = x * x;
      acc.s1 += x;
      acc.s2 += x2;
      acc.s3 += x2 * x;
      acc.s4 += x2 * x2;
    };
    auto merge = [](Moments& into, const Moments& from) {
      into.s1 += from.s1;
      into.s2 += from.s2;
      into.s3 += from.s3;
      into.s4 += from.s4;
      into.boom.merge(from.boom);
    };
    Moments mom = reduce_paths(
        opt.paths, opt.workers, [] { return Moments{}; }, [] { return Scratch{}; }, path, merge);
    if (mom.boom.count > 0) mom.boom.raise();
    return mom;
  };

  const Moments a = terminal_moments(original, opt.horizon, derive_seed(opt.seed, "timechange/original"));
  const Moments b = terminal_moments(changed, clock.horizon_image(), derive_seed(opt.seed, "timechange/changed"));

  const double m = static_cast<double>(opt.paths);
  struct Summary {
    double mean, var, var_of_var;
  };
  auto summarize = [m](const Moments& r) {
    const double mu = r.s1 / m;
    const double e2 = r.s2 / m, e3 = r.s3 / m, e4 = r.s4 / m;
    const double c2 = std::max(0.0, e2 - mu * mu);
    const double c4 = std::max(0.0, e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu * mu * mu * mu);
    return Summary{mu, c2 * m / (m - 1.0), std::max(0.0, c4 - c2 * c2) / m};
  };
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);

  TimeChangeReport rep;
  rep.horizon_image = clock.horizon_image();
  rep.mean_original = sa.mean;
  rep.mean_changed = sb.mean;
  rep.var_original = sa.var;
  rep.var_changed = sb.var;
  const double se_mean = std::sqrt(sa.var / m + sb.var / m);
  const double se_var = std::sqrt(sa.var_of_var + sb.var_of_var);
  rep.z_mean = se_mean > 0.0 ? (sa.mean - sb.mean) / se_mean : (sa.mean == sb.mean ? 0.0 : HUGE_VAL);
  rep.z_var = se_var > 0.0 ? (sa.var - sb.var) / se_var : (sa.var == sb.var ? 0.0 : HUGE_VAL);
  rep.z_critical = boost::math::quantile(boost::math::normal(), 1.0 - 0.5 * opt.significance);
  rep.pass = std::abs(rep.z_mean) <= rep.z_critical && std::abs(rep.z_var) <= rep.z_critical;
  return rep;
}

}  // namespace he
