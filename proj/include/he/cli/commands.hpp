// SPDX-License-Identifier: MIT
/**
 * @file commands.hpp
 * @brief Subcommands of the `he` tool and their CSV records.
 *
 * Exit codes: 0 ok, 2 simulation abort, 3 config error, 4 hypothesis failure.
 * Numbers in CSV output use 17 significant digits so files parse back to the
 * exact in-memory values.
 */
#pragma once

#include "he/cli/config.hpp"
#include "he/montecarlo.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace he::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAbort = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitHypothesis = 4;

struct CommandContext {
  std::ostream* out = nullptr;  ///< standard output; CSV goes here unless [output].out is set
  std::ostream* err = nullptr;  ///< diagnostics
  int workers = 0;
};

/// Runs `body`, mapping the library's exceptions onto exit codes and writing the message to ctx.err.
int guarded(const CommandContext& ctx, const std::function<int()>& body);

int cmd_converge(const RunConfig& config, const CommandContext& ctx);
int cmd_predict(const RunConfig& config, const CommandContext& ctx);
int cmd_moments(const RunConfig& config, const CommandContext& ctx);
int cmd_feller(const RunConfig& config, const CommandContext& ctx);
int cmd_ito(const RunConfig& config, const CommandContext& ctx);
int cmd_timechange(const RunConfig& config, const CommandContext& ctx);
int cmd_compare(const RunConfig& config, const CommandContext& ctx);

/// `%.17g`, with "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);
/// Shortest text that parses back to `v`.
std::string format_shortest(double v);

struct PredictionFooter {
  std::optional<double> predicted_lambda;
  std::string provenance = "none";
};

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report, const PredictionFooter& footer);
/// Inverse of write_convergence_csv; a missing fit in the footer reads back as no fit.
ConvergenceReport read_convergence_csv(std::istream& is, PredictionFooter* footer = nullptr);
void write_plot_csv(std::ostream& os, const ConvergenceReport& report);

void write_moments_csv(std::ostream& os, const MomentEstimate& estimate);
MomentEstimate read_moments_csv(std::istream& is);

/// The line printed by `predict`.
std::string prediction_line(const RatePrediction& prediction);

}  // namespace he::cli
