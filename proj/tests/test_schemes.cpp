// SPDX-License-Identifier: MIT
#include <doctest.h>

#include "he/brownian.hpp"
#include "he/schemes.hpp"

#include <cmath>
#include <limits>

using namespace he;

namespace {

CoefficientFn coeff(std::function<double(double, double)> f) { return CoefficientFn{std::move(f), {}}; }

SdeModel model(std::function<double(double, double)> a, std::function<double(double, double)> s, double x0,
               double gamma = 0.5) {
  return make_model(coeff(std::move(a)), coeff(std::move(s)), gamma, x0);
}

SdeModel cir(double kappa, double lambda, double theta, double x0) {
  PrototypeParams p;
  p.kappa = ParamFn::constant(kappa);
  p.lambda = ParamFn::constant(lambda);
  p.theta = ParamFn::constant(theta);
  p.x0 = x0;
  return make_prototype(p, 1.0);
}

}  // namespace

TEST_CASE("zero dynamics stay at x0") {
  const auto m = model([](double, double) { return 0.0; }, [](double, double) { return 0.0; }, 2.5);
  const auto lat = sample_lattice(1, 0, 8, 1.0);
  const auto tr = euler_path(m, lat, 6);
  CHECK(tr.values.size() == 65);
  CHECK((tr.values.array() == 2.5).all());
  CHECK_FALSE(tr.exploded());
}

TEST_CASE("unit drift without noise") {
  const auto m = model([](double, double) { return 1.0; }, [](double, double) { return 0.0; }, 0.25);
  const auto lat = sample_lattice(1, 0, 3, 1.0);
  const auto tr = euler_path(m, lat, 1);
  REQUIRE(tr.values.size() == 3);
  CHECK(tr.values[0] == 0.25);
  CHECK(tr.values[1] == 0.75);
  CHECK(tr.values[2] == 1.25);
  // Midway between level-1 nodes the interpolation adds dt / 2 of drift.
  CHECK(euler_interpolate(m, tr, lat, 0.25) == 0.5);
}

TEST_CASE("one CIR step by hand") {
  const auto m = cir(1, 1, 1, 1.0);
  Eigen::VectorXd dw(1);
  dw << 0.1;
  Eigen::VectorXd out(2);
  CHECK_FALSE(euler_run(m, 0.25, dw, 1, out).has_value());
  CHECK(out[1] == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("interpolation reproduces node values and pure noise") {
  const auto noise = model([](double, double) { return 0.0; }, [](double, double) { return 1.0; }, 0.0);
  const auto lat = sample_lattice(3, 2, 10, 1.0);
  const auto tr = euler_path(noise, lat, 4);
  const Eigen::VectorXd w = brownian_values(lat.increments);
  for (std::int64_t k = 0; k <= 16; ++k) CHECK(euler_interpolate(noise, tr, lat, tr.grid.node(k)) == tr.values[k]);
  for (std::int64_t j = 0; j <= 1024; j += 7) {
    const double t = std::ldexp(static_cast<double>(j), -10);
    const std::int64_t k = j >> 6;
    CHECK(euler_interpolate(noise, tr, lat, t) - tr.values[k] == doctest::Approx(w[j] - w[k << 6]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(euler_interpolate(noise, tr, lat, 0.1), InvalidArgument);
}

TEST_CASE("reference of a linear ODE matches the exponential") {
  const auto m = model([](double, double x) { return -x; }, [](double, double) { return 0.0; }, 1.0);
  const auto lat = sample_lattice(1, 0, 14, 1.0);
  const auto ref = reference_path(m, lat);
  double worst = 0.0;
  for (std::int64_t k = 0; k <= ref.grid.steps(); ++k) {
    worst = std::max(worst, std::abs(ref.values[k] - std::exp(-ref.grid.node(k))));
  }
  CHECK(worst <= ref.grid.dt());
  CHECK(worst > 0.0);
}

TEST_CASE("additive noise reference is exact") {
  const auto m = model([](double, double) { return 0.0; }, [](double, double) { return 4.0; }, 1.0);
  const auto lat = sample_lattice(5, 5, 12, 1.0);
  const auto ref = reference_path(m, lat);
  const Eigen::VectorXd w = brownian_values(lat.increments);
  for (std::int64_t k = 0; k <= 4096; k += 13) CHECK(ref.values[k] == 1.0 + 2.0 * w[k]);
}

TEST_CASE("CIR reference mean matches the closed form") {
  const double kappa = 1.0, lambda = 0.5, x0 = 1.0;
  const auto m = cir(kappa, lambda, 1.0, x0);
  const int M = 4000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < M; ++i) {
    const auto ref = reference_path(m, sample_lattice(77, i, 10, 1.0));
    const double x = ref.values[1024];
    s += x;
    s2 += x * x;
  }
  const double mean = s / M;
  const double se = std::sqrt((s2 / M - mean * mean) / (M - 1));
  CHECK(std::abs(mean - (lambda + (x0 - lambda) * std::exp(-kappa))) < 4.0 * se);
}

TEST_CASE("coarse and fine Euler differ only through the scheme") {
  const auto m = cir(1, 1, 1, 1.0);
  const auto lat = sample_lattice(2, 9, 10, 1.0);
  const auto fine = euler_path(m, lat, 8);
  const auto coarse = euler_path(m, lat, 7);
  // Both runs see the same Brownian values at the shared nodes.
  const Eigen::VectorXd wf = brownian_values(coarsen(lat, 8));
  const Eigen::VectorXd wc = brownian_values(coarsen(lat, 7));
  for (Eigen::Index k = 0; k < wc.size(); ++k) CHECK(wc[k] == wf[2 * k]);
  double gap = 0.0;
  for (Eigen::Index k = 0; k < coarse.values.size(); ++k) gap = std::max(gap, std::abs(coarse.values[k] - fine.values[2 * k]));
  CHECK(gap < 0.2);
}

TEST_CASE("moments of the running maximum are stable in the path count") {
  const auto m = cir(1, 1, 1, 1.0);
  auto estimate = [&](int M, double p) {
    double s = 0.0;
    for (int i = 0; i < M; ++i) s += std::pow(euler_path(m, sample_lattice(4, i, 8, 1.0), 8).values.cwiseAbs().maxCoeff(), p);
    return s / M;
  };
  for (double p : {1.0, 2.0, 4.0}) {
    const double a = estimate(1000, p), b = estimate(2000, p);
    CHECK(std::isfinite(a));
    CHECK(std::abs(a - b) / b < 0.1);
  }
}

TEST_CASE("Wright-Fisher paths stay near [0, 1]") {
  PrototypeParams p;
  p.kind = PrototypeKind::wf;
  p.kappa = ParamFn::constant(2.0);
  p.lambda = ParamFn::constant(0.5);
  p.x0 = 0.5;
  const auto m = make_prototype(p, 1.0);
  int exits = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto tr = euler_path(m, sample_lattice(6, i, 8, 1.0), 8);
    if (tr.values.minCoeff() < -0.5 || tr.values.maxCoeff() > 1.5) ++exits;
  }
  CHECK(exits <= 2);
}

TEST_CASE("explosions are flagged with the first offending index") {
  const auto m = model([](double, double x) { return x * x * 1e200; }, [](double, double) { return 0.0; }, 1.0);
  const auto lat = sample_lattice(1, 0, 6, 1.0);
  const auto tr = euler_path(m, lat, 6);
  REQUIRE(tr.exploded());
  const auto k = *tr.explosion_index;
  CHECK(std::isfinite(tr.values[k - 1]));
  CHECK(std::isnan(tr.values[k]));
  CHECK(std::isnan(tr.values[64]));
}
