// SPDX-License-Identifier: MIT
#include <doctest.h>

#include "he/random.hpp"
#include "he/sde_core.hpp"

#include <cmath>
#include <limits>

using namespace he;

namespace {

CoefficientFn coeff(std::function<double(double, double)> f) { return CoefficientFn{std::move(f), {}}; }

PrototypeParams proto(PrototypeKind kind, double kappa, double lambda, double theta, double x0 = 1.0) {
  PrototypeParams p;
  p.kind = kind;
  p.kappa = ParamFn::constant(kappa);
  p.lambda = ParamFn::constant(lambda);
  p.theta = ParamFn::constant(theta);
  p.x0 = x0;
  return p;
}

}  // namespace

TEST_CASE("time grid nodes and eta") {
  const TimeGrid g(2.0, 3);
  CHECK(g.steps() == 8);
  CHECK(g.dt() == 0.25);
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(8) == 2.0);
  for (std::int64_t k = 0; k <= 8; ++k) CHECK(g.eta(g.node(k)) == g.node(k));
  CHECK(g.eta(0.3) == 0.25);
  CHECK(g.eta(1.99) == 1.75);
  CHECK_THROWS_AS(TimeGrid(0.0, 3), InvalidArgument);
}

TEST_CASE("param families and closed-form bounds") {
  const auto a = ParamFn::affine(1.0, 2.0);
  CHECK(a(0.5) == 2.0);
  CHECK(a.sup_bound(1.0) == 3.0);
  CHECK(a.holder_half_bound(1.0) == 2.0);
  const auto s = ParamFn::sinusoidal(1.0, 0.5, 2.0 * M_PI);
  CHECK(s(0.25) == doctest::Approx(1.5));
  CHECK(s.grid_min(1.0) == doctest::Approx(0.5));
  // The declared seminorm bound dominates sampled quotients.
  CounterStream rng(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double t = rng.uniform(), u = rng.uniform();
    if (t == u) continue;
    CHECK(std::abs(s(t) - s(u)) <= s.holder_half_bound(1.0) * std::sqrt(std::abs(t - u)) * (1 + 1e-12));
  }
}

TEST_CASE("make_model rejects gamma outside [1/2, 1) and x0 outside the domain") {
  auto zero = coeff([](double, double) { return 0.0; });
  CHECK_THROWS_AS(make_model(zero, zero, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_model(zero, zero, 0.4, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_model(zero, zero, 0.5, -1.0, Domain{0.0, 1.0}), InvalidArgument);
  CHECK_NOTHROW(make_model(zero, zero, 0.5, 0.5, Domain{0.0, 1.0}));
}

TEST_CASE("prototype diffusion values") {
  const auto cir = make_prototype(proto(PrototypeKind::cir, 1, 1, 1), 1.0);
  CHECK(eval_diffusion(cir, 0.0, 4.0) == 2.0);
  CHECK(eval_diffusion(cir, 0.3, 0.0) == 0.0);

  const auto wf = make_prototype(proto(PrototypeKind::wf, 2, 0.5, 1.3, 0.5), 1.0);
  CHECK(eval_diffusion(wf, 0.7, -0.5) == 0.0);
  CHECK(eval_diffusion(wf, 0.7, 0.0) == 0.0);
  CHECK(eval_diffusion(wf, 0.7, 1.0) == 0.0);
  CHECK(eval_diffusion(wf, 0.7, 1.5) == 0.0);

  auto p = proto(PrototypeKind::ckls, 1, 1, 1);
  p.gamma = 0.75;
  const auto ckls = make_prototype(p, 1.0);
  CHECK(eval_diffusion(ckls, 0.0, 16.0) == doctest::Approx(8.0).epsilon(1e-15));

  p.theta = ParamFn::constant(2.0);
  const auto ckls2 = make_prototype(p, 1.0);
  CHECK(eval_diffusion(ckls2, 0.0, 16.0) == doctest::Approx(16.0).epsilon(1e-14));
}

TEST_CASE("prototype parameter checks") {
  CHECK_THROWS_AS(check_prototype(proto(PrototypeKind::cir, 1, 1, 1, 0.0), 1.0), InvalidArgument);
  CHECK_THROWS_AS(check_prototype(proto(PrototypeKind::wf, 1, 0.5, 1, 1.0), 1.0), InvalidArgument);
  auto p = proto(PrototypeKind::cir, 1, 1, 1);
  p.theta = ParamFn::affine(1.0, -2.0);
  CHECK_THROWS_AS(check_prototype(p, 1.0), InvalidArgument);
}

TEST_CASE("eval_diffusion clamps and powers") {
  const auto m = make_model(coeff([](double, double) { return 0.0; }),
                            coeff([](double, double x) { return std::max(x, 0.0); }), 0.5, 1.0);
  CHECK(eval_diffusion(m, 0, 0.0) == 0.0);
  CHECK(eval_diffusion(m, 0, 9.0) == 3.0);
  CHECK(eval_diffusion(m, 0, -1.0) == 0.0);
  CHECK(clamped_power(-1e-17, 0.75) == 0.0);

  const auto bad = make_model(coeff([](double, double) { return 0.0; }),
                              coeff([](double, double) { return std::numeric_limits<double>::quiet_NaN(); }),
                              0.5, 1.0);
  CHECK_THROWS_AS(eval_diffusion(bad, 0, 1.0), InvalidCoefficient);
}

TEST_CASE("eval_diffusion is monotone in sigma") {
  CounterStream rng(5, 5);
  for (int i = 0; i < 10000; ++i) {
    const double g = rng.uniform(0.5, 0.999);
    const double a = rng.uniform(-1.0, 10.0), b = rng.uniform(-1.0, 10.0);
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(clamped_power(lo, g) <= clamped_power(hi, g));
  }
}

TEST_CASE("validators on the linear and positive-part functions") {
  const SamplingBox box{0.0, 1.0, -10.0, 10.0};
  const auto lin = validate_assumptions(coeff([](double, double x) { return x; }), box, 20000, 3);
  CHECK(lin.max_lipschitz_ratio <= 1.0 + kValidatorRelTol);
  CHECK_FALSE(lin.nonnegative_ok);
  CHECK(lin.heuristic);

  CoefficientFn pos = coeff([](double, double x) { return std::max(x, 0.0); });
  pos.meta.lipschitz_K = 1.0;
  const auto rp = validate_assumptions(pos, box, 20000, 3);
  CHECK(rp.max_lipschitz_ratio <= 1.0 + kValidatorRelTol);
  CHECK(rp.nonnegative_ok);
  REQUIRE(rp.lipschitz_ok.has_value());
  CHECK(*rp.lipschitz_ok);

  CoefficientFn liar = coeff([](double, double x) { return 3.0 * x; });
  liar.meta.lipschitz_K = 1.0;
  const auto rl = validate_assumptions(liar, box, 1000, 3);
  REQUIRE(rl.lipschitz_ok.has_value());
  CHECK_FALSE(*rl.lipschitz_ok);
}

TEST_CASE("declared Hoelder constant of a time-dependent CIR sigma is respected") {
  auto p = proto(PrototypeKind::cir, 1, 1, 1);
  p.theta = ParamFn::affine(1.0, 1.0);
  const auto m = make_prototype(p, 1.0);
  REQUIRE(m.base_sigma.meta.holder_half_K.has_value());
  const double K = *m.base_sigma.meta.holder_half_K;
  CHECK(K == doctest::Approx(2.0 * 2.0 * 1.0));
  const auto r = validate_assumptions(m.base_sigma, SamplingBox{0.0, 1.0, -5.0, 5.0}, 50000, 9);
  REQUIRE(r.holder_ok.has_value());
  CHECK(*r.holder_ok);
  // Dense-grid oracle: |theta(t)^2 - theta(s)^2| x+ / ((1+|x|) sqrt|t-s|) on the same box.
  double oracle = 0.0;
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j < i; ++j) {
      const double t = i / 200.0, s = j / 200.0;
      const double d = (1 + t) * (1 + t) - (1 + s) * (1 + s);
      oracle = std::max(oracle, d * 5.0 / (6.0 * std::sqrt(t - s)));
    }
  }
  CHECK(r.max_holder_ratio <= oracle * (1 + 1e-9));
  CHECK(oracle <= K);
}

TEST_CASE("power gap examples") {
  const auto a = power_gap_bound(1.0, 1.0, 0.6, 0.3);
  CHECK(a.lhs == 0.0);
  CHECK(a.rhs == 0.0);
  const auto b = power_gap_bound(4.0, 0.0, 0.5, 1.0);
  CHECK(b.lhs == 2.0);
  CHECK(b.rhs == 4.0);
  const auto c = power_gap_bound(1.0, 4.0, 0.5, 0.5);
  CHECK(c.lhs == 1.0);
  CHECK(c.rhs == doctest::Approx(2.0 * std::pow(3.0, 0.75)));
  CHECK_THROWS_AS(power_gap_bound(0.0, 1.0, 0.5, 0.5), InvalidArgument);
  CHECK_THROWS_AS(power_gap_bound(1.0, 1.0, 1.0, 0.5), InvalidArgument);
  CHECK_THROWS_AS(power_gap_bound(1.0, 1.0, 0.5, 0.0), InvalidArgument);
}

TEST_CASE("power gap and concavity hold on random log-spaced samples") {
  CounterStream rng(2024, 1);
  int violations = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = std::pow(10.0, rng.uniform(-8, 8));
    const double y = rng.uniform() < 0.05 ? 0.0 : std::pow(10.0, rng.uniform(-8, 8));
    const double g = rng.uniform(0.5, 1.0);
    const double b = rng.uniform(0.0, 1.0);
    const auto p = power_gap_bound(x, y, g, b);
    const auto c = concavity_gap(x, y, g);
    const double ulp4 = 4.0 * std::numeric_limits<double>::epsilon();
    if (p.lhs > p.rhs * (1.0 + ulp4)) ++violations;
    if (c.lhs > c.rhs * (1.0 + ulp4)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("prototype diffusion vanishes on the domain boundary and grows linearly") {
  auto p = proto(PrototypeKind::cir, 1.5, 0.7, 1.2);
  p.theta = ParamFn::sinusoidal(1.0, 0.5, 2.0 * M_PI);
  const auto cir = make_prototype(p, 1.0);
  const double C = linear_growth_constant(p, 1.0);
  CounterStream rng(8, 8);
  for (int i = 0; i < 5000; ++i) {
    const double t = rng.uniform();
    const double x = rng.uniform(-50.0, 50.0);
    CHECK(eval_diffusion(cir, t, 0.0) == 0.0);
    CHECK(std::abs(cir.drift(t, x)) + eval_diffusion(cir, t, x) <= C * (1.0 + std::abs(x)) * (1 + 1e-12));
  }
  p.kind = PrototypeKind::wf;
  p.x0 = 0.5;
  const auto wf = make_prototype(p, 1.0);
  CHECK(eval_diffusion(wf, 0.3, 0.0) == 0.0);
  CHECK(eval_diffusion(wf, 0.3, 1.0) == 0.0);
}
