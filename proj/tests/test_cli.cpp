// SPDX-License-Identifier: MIT
#include <doctest.h>

#include "he/cli/commands.hpp"
#include "he/cli/config.hpp"
#include "he/errors.hpp"

#include <sstream>

using namespace he;
using namespace he::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(int (*cmd)(const RunConfig&, const CommandContext&), const std::string& ini) {
  std::ostringstream out, err;
  const RunConfig cfg = parse_config(ini);
  const int code = cmd(cfg, CommandContext{&out, &err, 1});
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing and defaults") {
  const auto cfg = parse_config(
      "# comment\n[model]\nkind = wf\nkappa = 2\nlambda = const:0.5\ntheta = sin:1,0.5,6.283185307179586\n"
      "[experiment]\nlevels = 3:7\nseed = 9\n");
  CHECK(cfg.model.kind == "wf");
  CHECK(cfg.model.x0 == 0.5);
  CHECK(cfg.model.proto.kappa(0.3) == 2.0);
  CHECK(cfg.model.proto.theta(0.25) == doctest::Approx(1.5));
  CHECK(cfg.experiment.level_min == 3);
  CHECK(cfg.experiment.level_max == 7);
  CHECK(cfg.experiment.seed == 9);
  CHECK(cfg.experiment.paths == 10000);
  CHECK(cfg.experiment.ref_level == 13);
}

TEST_CASE("config errors name the line or the field") {
  CHECK_THROWS_WITH_AS(parse_config("[model]\nkind = heston\n"), doctest::Contains("[model].kind"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[model]\nkappa = abc\n"), doctest::Contains("[model].kappa"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\npaths = 1e4x\n"), doctest::Contains("[experiment].paths"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nfoo = 1\n"), doctest::Contains("[experiment].foo"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[bogus]\nx = 1\n"), doctest::Contains("[bogus]"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[model]\nkind = cir\n\nkind = wf\n"), doctest::Contains("line 4"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[model]\nkind = custom\ndrift = cubic:1\n"), doctest::Contains("[model].drift"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nlevels = 4-9\n"), doctest::Contains("[experiment].levels"),
                       ConfigError);
}

TEST_CASE("resolved config round-trips through INI") {
  auto cfg = parse_config("[model]\nkind = ckls\ngamma = 0.8\ntheta = affine:1,0.25\n[condition]\ns = 0.1\n");
  Overrides o;
  o.paths = 123;
  o.levels = "2:5";
  o.ref_level = 11;
  apply_overrides(cfg, o);
  const std::string ini = to_ini(cfg);
  const auto back = parse_config(ini);
  CHECK(to_ini(back) == ini);
  CHECK(back.experiment.paths == 123);
  CHECK(back.experiment.level_max == 5);
  CHECK(back.condition.ref_level == 11);
  CHECK(back.model.gamma == 0.8);
}

TEST_CASE("builtin coefficients and their derivatives") {
  const auto wf = parse_builtin("wf:2", "f");
  CHECK(wf.f(0.25) == doctest::Approx(0.375));
  CHECK(wf.df(0.25) == doctest::Approx(1.0));
  CHECK(wf.d2f(0.25) == -4.0);
  CHECK(wf.f(-1.0) == 0.0);
  const auto rv = parse_builtin("revert:2,0.5", "f");
  CHECK(rv.f(1.0) == -1.0);
  CHECK(rv.df(1.0) == -2.0);
  CHECK(parse_param("affine:1,2", "p")(0.5) == 2.0);
  CHECK(parse_param("3.5", "p")(9.0) == 3.5);
  CHECK_THROWS_AS(parse_param("affine:1", "p"), ConfigError);
}

TEST_CASE("convergence CSV round-trips exactly") {
  ConvergenceReport r;
  for (int l = 4; l <= 6; ++l) {
    r.levels.push_back(LevelError{l, std::int64_t{1} << l, std::ldexp(1.0, -l), 0.1 / 3.0 * std::exp2(-0.5 * l),
                                  1e-3 / 7.0, l * 3});
  }
  r.fit = fit_order(r.levels);
  r.fit->excluded_levels = {5};
  r.paths_used = 1000;
  r.exploded_paths = 2;
  std::stringstream ss;
  write_convergence_csv(ss, r, PredictionFooter{0.25, "Prop2.2i"});
  PredictionFooter f;
  const auto back = read_convergence_csv(ss, &f);
  REQUIRE(back.levels.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.levels[i].level == r.levels[i].level);
    CHECK(back.levels[i].steps == r.levels[i].steps);
    CHECK(back.levels[i].dt == r.levels[i].dt);
    CHECK(back.levels[i].error == r.levels[i].error);
    CHECK(back.levels[i].std_error == r.levels[i].std_error);
    CHECK(back.levels[i].argmax_k == r.levels[i].argmax_k);
  }
  REQUIRE(back.fit.has_value());
  CHECK(back.fit->lambda_hat == r.fit->lambda_hat);
  CHECK(back.fit->intercept == r.fit->intercept);
  CHECK(back.fit->r2 == r.fit->r2);
  CHECK(back.fit->slope_stderr == r.fit->slope_stderr);
  CHECK(back.fit->excluded_levels == r.fit->excluded_levels);
  CHECK(back.paths_used == 1000);
  CHECK(back.exploded_paths == 2);
  CHECK(*f.predicted_lambda == 0.25);
  CHECK(f.provenance == "Prop2.2i");

  std::stringstream again;
  write_convergence_csv(again, back, f);
  std::stringstream first;
  write_convergence_csv(first, r, PredictionFooter{0.25, "Prop2.2i"});
  CHECK(again.str() == first.str());
}

TEST_CASE("moments CSV round-trips exactly") {
  MomentEstimate e;
  e.q = -1.0;
  e.levels = {{10, 1.0 / 3.0, 0.01, 1.0 / 3.0 - 1e-9, 11}, {11, 0.7, 0.02, 0.6, 4}, {12, 2.0 / 3.0, 1e-5, 0.5, 0}};
  e.divergence_flag = true;
  e.relative_spread = 0.123456789;
  std::stringstream ss;
  write_moments_csv(ss, e);
  const auto back = read_moments_csv(ss);
  CHECK(back.q == e.q);
  CHECK(back.divergence_flag);
  CHECK(back.relative_spread == e.relative_spread);
  REQUIRE(back.levels.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.levels[i].ref_level == e.levels[i].ref_level);
    CHECK(back.levels[i].estimate == e.levels[i].estimate);
    CHECK(back.levels[i].std_error == e.levels[i].std_error);
    CHECK(back.levels[i].finite_part == e.levels[i].finite_part);
    CHECK(back.levels[i].cap_hits == e.levels[i].cap_hits);
  }
}

TEST_CASE("predict prints the machine-readable line") {
  auto r = run(cmd_predict, "[model]\nkind = cir\nkappa = 1\nlambda = 0.25\ntheta = 1\n");
  CHECK(r.code == kExitOk);
  CHECK(r.out == "mu0=0.25 s=0.25 lambda_sup=0.25 provenance=Prop2.2i\n");
  r = run(cmd_predict, "[model]\nkind = wf\nkappa = 1\nlambda = 0.5\n");
  CHECK(r.out == "mu0=0.5 mu1=0.5 s=0 lambda_sup=0.5 provenance=Prop2.2ii\n");
  r = run(cmd_predict, "[model]\nkind = cir\nlambda = 0\n");
  CHECK(r.code == kExitHypothesis);
  CHECK(r.err.find("mu0 <= 0") != std::string::npos);
}

TEST_CASE("converge reports the gap rule as a config error") {
  const auto r = run(cmd_converge, "[experiment]\nlevels = 4:9\nref_level = 10\n");
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("reference gap rule") != std::string::npos);
}

TEST_CASE("converge output shape") {
  const auto r = run(cmd_converge, "[experiment]\nlevels = 2:5\nref_level = 9\npaths = 200\n");
  REQUIRE(r.code == kExitOk);
  std::istringstream is(r.out);
  PredictionFooter f;
  const auto rep = read_convergence_csv(is, &f);
  CHECK(rep.levels.size() == 4);
  CHECK(rep.fit.has_value());
  CHECK(f.provenance == "Prop2.2i");
  CHECK(r.out.find("\n# lambda_hat=") != std::string::npos);
}

TEST_CASE("converge on a zero-diffusion custom model") {
  const auto r = run(cmd_converge,
                     "[model]\nkind = custom\ndrift = linear:0,-1\nsigma = zero\nx0 = 1\n"
                     "[experiment]\nlevels = 4:10\nref_level = 14\npaths = 100\n");
  REQUIRE(r.code == kExitOk);
  std::istringstream is(r.out);
  PredictionFooter f;
  const auto rep = read_convergence_csv(is, &f);
  CHECK(rep.fit->lambda_hat == doctest::Approx(1.0).epsilon(0.05));
  CHECK_FALSE(f.predicted_lambda.has_value());
}

TEST_CASE("explosions exit with code 2") {
  const auto r = run(cmd_converge,
                     "[model]\nkind = custom\ndrift = linear:0,1e300\nsigma = const:1\nx0 = 1e10\n"
                     "[experiment]\nlevels = 2:4\nref_level = 8\npaths = 100\n");
  CHECK(r.code == kExitAbort);
}

TEST_CASE("thin wrappers print verdicts") {
  auto r = run(cmd_feller, "[model]\nkind = cir\n");
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("conclusion=no-exit", 0) == 0);
  r = run(cmd_feller, "[model]\nkind = cir\nlambda = 0.25\n");
  CHECK(r.out.rfind("conclusion=exit-possible", 0) == 0);

  r = run(cmd_ito, "[model]\nkind = custom\ndrift = revert:1,1\nsigma = const:2\nx0 = 0\n");
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("classification=bounded-below", 0) == 0);

  r = run(cmd_timechange, "[model]\nkind = cir\n[experiment]\npaths = 2000\n[timechange]\nlevel = 8\n");
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("verdict=pass", 0) == 0);

  r = run(cmd_compare, "[model]\nkind = cir\n[model_hi]\nkind = cir\n[experiment]\npaths = 200\n");
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("violations=0 ", 0) == 0);

  r = run(cmd_compare, "[model]\nkind = cir\n");
  CHECK(r.code == kExitConfig);

  r = run(cmd_moments, "[model]\nkind = cir\nhorizon = 2\n[condition]\nq = 0\n[experiment]\npaths = 100\n");
  CHECK(r.code == kExitOk);
  std::istringstream is(r.out);
  const auto m = read_moments_csv(is);
  for (const auto& l : m.levels) CHECK(l.estimate == 2.0);
  CHECK_FALSE(m.divergence_flag);
}
