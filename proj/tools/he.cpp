// SPDX-License-Identifier: MIT
// he: command-line runner for the Euler convergence experiments and criteria.

#include "he/cli/commands.hpp"
#include "he/cli/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

using Command = int (*)(const he::cli::RunConfig&, const he::cli::CommandContext&);

struct Flags {
  std::string config;
  he::cli::Overrides overrides;
  int workers = 0;
  bool dry_run = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
  sub->add_option("--paths", f.overrides.paths, "Monte Carlo paths");
  sub->add_option("--seed", f.overrides.seed, "master seed");
  sub->add_option("--levels", f.overrides.levels, "level range a:b");
  sub->add_option("--ref-level", f.overrides.ref_level, "reference level");
  sub->add_option("--out", f.overrides.out, "output CSV path");
  sub->add_option("--workers", f.workers, "worker threads (default: HE_WORKERS, else all cores)")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("--dry-run", f.dry_run, "print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler scheme convergence experiments for SDEs with Hoelder diffusion"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<Command, std::string>> commands = {
      {"converge", {he::cli::cmd_converge, "strong L1 error per level and fitted order"}},
      {"predict", {he::cli::cmd_predict, "predicted convergence order for a prototype"}},
      {"moments", {he::cli::cmd_moments, "inverse-moment estimate with refinement diagnostic"}},
      {"feller", {he::cli::cmd_feller, "boundary classification by Feller's test"}},
      {"ito", {he::cli::cmd_ito, "lower-boundedness of the Ito criterion function"}},
      {"timechange", {he::cli::cmd_timechange, "time-change distributional check"}},
      {"compare", {he::cli::cmd_compare, "pathwise comparison check of two drift-ordered models"}},
  };

  Flags flags;
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    add_common(sub, flags);
    handlers[sub] = entry.first;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : he::cli::kExitConfig;
  }

  he::cli::CommandContext ctx{&std::cout, &std::cerr, flags.workers};
  he::cli::RunConfig cfg;
  const int status = he::cli::guarded(ctx, [&] {
    if (!flags.config.empty()) cfg = he::cli::load_config(flags.config);
    he::cli::apply_overrides(cfg, flags.overrides);
    return he::cli::kExitOk;
  });
  if (status != he::cli::kExitOk) return status;
  if (flags.dry_run) {
    std::cout << he::cli::to_ini(cfg);
    return he::cli::kExitOk;
  }

  for (CLI::App* sub : app.get_subcommands()) return handlers.at(sub)(cfg, ctx);
  return he::cli::kExitConfig;
}
