// SPDX-License-Identifier: MIT
/**
 * @file config.hpp
 * @brief Flat INI run configuration shared by every subcommand.
 *
 *   [model]       kind = cir|ckls|wf|custom, kappa/lambda/theta = <param>,
 *                 gamma, x0, horizon; custom: drift, sigma = <builtin>, domain = l,r
 *   [model_hi]    second model for `compare` (same keys as [model])
 *   [experiment]  levels = a:b, ref_level, paths, seed, allow_explosions
 *   [condition]   s, epsilon, q, cap, growth_factor, ref_level
 *   [compare]     levels = 8,10, tolerance
 *   [timechange]  level, significance
 *   [feller]      origin, threshold
 *   [output]      out, plot, verbosity
 *
 * <param> is `c`, `const:c`, `affine:p,q` (p + q t) or `sin:p,q,w` (p + q sin(w t)).
 * <builtin> is `zero`, `const:c`, `linear:p,q` (p + q x), `poslinear:s` (s x+),
 * `wf:s` (s (x(1-x))+) or `revert:k,l` (k (l - x)).
 */
#pragma once

#include "he/criteria.hpp"
#include "he/sde_core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace he::cli {

/// Coefficient of x only with its first two derivatives.
struct Builtin {
  std::string expr;
  ScalarFn f;
  ScalarFn df;
  ScalarFn d2f;
  double lipschitz = 0.0;
  bool nonnegative = false;
};

Builtin parse_builtin(const std::string& expr, const std::string& field);
ParamFn parse_param(const std::string& expr, const std::string& field);

struct ModelBlock {
  std::string kind = "cir";
  PrototypeParams proto;
  double horizon = 1.0;
  std::string drift = "zero";
  std::string sigma = "zero";
  double gamma = 0.5;
  double x0 = 1.0;
  std::optional<Domain> domain;

  bool is_prototype() const { return kind != "custom"; }
};

struct ExperimentBlock {
  int level_min = 4;
  int level_max = 9;
  int ref_level = 13;
  std::int64_t paths = 10000;
  std::uint64_t seed = 42;
  bool allow_explosions = false;
};

struct ConditionBlock {
  std::optional<double> s;
  double epsilon = 0.01;
  std::optional<double> q;
  double cap = 1e12;
  double growth_factor = 1.1;
  int ref_level = 12;
};

struct CompareBlock {
  std::vector<int> levels{8, 10};
  double tolerance = 1e-3;
};

struct TimeChangeBlock {
  int level = 12;
  double significance = 1e-3;
};

struct FellerBlock {
  std::optional<double> origin;
  double threshold = 1e8;
};

struct OutputBlock {
  std::string out;
  std::string plot;
  int verbosity = 0;
};

struct RunConfig {
  ModelBlock model;
  std::optional<ModelBlock> model_hi;
  ExperimentBlock experiment;
  ConditionBlock condition;
  CompareBlock compare;
  TimeChangeBlock timechange;
  FellerBlock feller;
  OutputBlock output;
};

/// Command-line flags that override config keys.
struct Overrides {
  std::optional<std::int64_t> paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> levels;  ///< "a:b"
  std::optional<int> ref_level;
  std::optional<std::string> out;
};

/// Parses INI text; errors are ConfigError messages naming line or [section].key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Resolved configuration as INI text (what --dry-run prints).
std::string to_ini(const RunConfig& config);

SdeModel build_model(const ModelBlock& block);
AutonomousModel build_autonomous(const ModelBlock& block);

/// Fixed labels for sub-seed derivation, one per subcommand.
inline constexpr const char* kSeedLabelConverge = "converge";
inline constexpr const char* kSeedLabelMoments = "moments";
inline constexpr const char* kSeedLabelCompare = "compare";
inline constexpr const char* kSeedLabelTimeChange = "timechange";

}  // namespace he::cli
