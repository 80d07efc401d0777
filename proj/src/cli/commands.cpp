// SPDX-License-Identifier: MIT
#include "he/cli/commands.hpp"

#include "he/criteria.hpp"
#include "he/errors.hpp"
#include "he/random.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace he::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw InvalidArgument("csv: bad number '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw InvalidArgument("csv: bad integer '" + s + "'");
  return v;
}

/// "k=v k=v" after a leading "# ".
std::map<std::string, std::string> parse_footer(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(line.substr(1));
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

std::ostream& csv_sink(const RunConfig& cfg, const CommandContext& ctx, std::ofstream& file) {
  if (cfg.output.out.empty()) return *ctx.out;
  file.open(cfg.output.out);
  if (!file) throw ConfigError("[output].out: cannot write '" + cfg.output.out + "'");
  return file;
}

void require_prototype(const ModelBlock& m, const char* command) {
  if (!m.is_prototype()) throw ConfigError(std::string("[model].kind: ") + command + " needs cir, ckls or wf");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

int guarded(const CommandContext& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const SimulationAbort& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitAbort;
  } catch (const HypothesisFailure& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitHypothesis;
  } catch (const ConfigError& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidCoefficient& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitAbort;
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& r, const PredictionFooter& footer) {
  os << "level,N,dt,l1_error,stderr,argmax_k\n";
  for (const auto& l : r.levels) {
    os << l.level << ',' << l.steps << ',' << format_double(l.dt) << ',' << format_double(l.error) << ','
       << format_double(l.std_error) << ',' << l.argmax_k << '\n';
  }
  const auto& fit = r.fit;
  os << "# lambda_hat=" << (fit ? format_double(fit->lambda_hat) : "none")
     << " stderr=" << (fit ? format_double(fit->slope_stderr) : "none")
     << " r2=" << (fit ? format_double(fit->r2) : "none")
     << " predicted_lambda=" << opt_double(footer.predicted_lambda) << " provenance=" << footer.provenance << '\n';
  os << "# intercept=" << (fit ? format_double(fit->intercept) : "none") << " excluded_levels=";
  if (!fit || fit->excluded_levels.empty()) {
    os << "none";
  } else {
    for (std::size_t i = 0; i < fit->excluded_levels.size(); ++i) os << (i ? ":" : "") << fit->excluded_levels[i];
  }
  os << " paths_used=" << r.paths_used << " exploded_paths=" << r.exploded_paths << '\n';
}

ConvergenceReport read_convergence_csv(std::istream& is, PredictionFooter* footer) {
  ConvergenceReport r;
  std::string line;
  if (!std::getline(is, line) || line != "level,N,dt,l1_error,stderr,argmax_k") {
    throw InvalidArgument("csv: missing convergence header");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      for (auto& [k, v] : parse_footer(line)) kv[k] = v;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) throw InvalidArgument("csv: expected 6 fields in '" + line + "'");
    LevelError l;
    l.level = static_cast<int>(parse_int(f[0]));
    l.steps = parse_int(f[1]);
    l.dt = parse_double(f[2]);
    l.error = parse_double(f[3]);
    l.std_error = parse_double(f[4]);
    l.argmax_k = parse_int(f[5]);
    r.levels.push_back(l);
  }
  if (kv.count("lambda_hat") && kv["lambda_hat"] != "none") {
    OrderFit fit;
    fit.lambda_hat = parse_double(kv["lambda_hat"]);
    fit.slope_stderr = parse_double(kv["stderr"]);
    fit.r2 = parse_double(kv["r2"]);
    fit.intercept = parse_double(kv["intercept"]);
    if (kv["excluded_levels"] != "none") {
      for (const auto& s : split(kv["excluded_levels"], ':')) fit.excluded_levels.push_back(static_cast<int>(parse_int(s)));
    }
    r.fit = fit;
  }
  if (kv.count("paths_used")) r.paths_used = parse_int(kv["paths_used"]);
  if (kv.count("exploded_paths")) r.exploded_paths = parse_int(kv["exploded_paths"]);
  if (footer) {
    footer->predicted_lambda.reset();
    if (kv.count("predicted_lambda") && kv["predicted_lambda"] != "none") {
      footer->predicted_lambda = parse_double(kv["predicted_lambda"]);
    }
    footer->provenance = kv.count("provenance") ? kv["provenance"] : "none";
  }
  return r;
}

void write_plot_csv(std::ostream& os, const ConvergenceReport& r) {
  os << "log2N,log2err\n";
  for (const auto& l : r.levels) os << l.level << ',' << format_double(std::log2(l.error)) << '\n';
}

void write_moments_csv(std::ostream& os, const MomentEstimate& e) {
  os << "q,estimate,stderr,ref_level,cap_hits,divergence_flag\n";
  for (const auto& l : e.levels) {
    os << format_double(e.q) << ',' << format_double(l.estimate) << ',' << format_double(l.std_error) << ','
       << l.ref_level << ',' << l.cap_hits << ',' << (e.divergence_flag ? "true" : "false") << '\n';
  }
  os << "# finite_part=";
  for (std::size_t i = 0; i < e.levels.size(); ++i) os << (i ? ":" : "") << format_double(e.levels[i].finite_part);
  os << " relative_spread=" << format_double(e.relative_spread) << '\n';
}

MomentEstimate read_moments_csv(std::istream& is) {
  MomentEstimate e;
  std::string line;
  if (!std::getline(is, line) || line != "q,estimate,stderr,ref_level,cap_hits,divergence_flag") {
    throw InvalidArgument("csv: missing moments header");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      kv = parse_footer(line);
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) throw InvalidArgument("csv: expected 6 fields in '" + line + "'");
    e.q = parse_double(f[0]);
    MomentLevel l;
    l.estimate = parse_double(f[1]);
    l.std_error = parse_double(f[2]);
    l.ref_level = static_cast<int>(parse_int(f[3]));
    l.cap_hits = parse_int(f[4]);
    e.divergence_flag = f[5] == "true";
    e.levels.push_back(l);
  }
  if (kv.count("finite_part")) {
    const auto parts = split(kv["finite_part"], ':');
    for (std::size_t i = 0; i < parts.size() && i < e.levels.size(); ++i) e.levels[i].finite_part = parse_double(parts[i]);
  }
  if (kv.count("relative_spread")) e.relative_spread = parse_double(kv["relative_spread"]);
  return e;
}

std::string prediction_line(const RatePrediction& p) {
  std::string s;
  if (p.mu0) s += "mu0=" + format_shortest(*p.mu0) + " ";
  if (p.mu1) s += "mu1=" + format_shortest(*p.mu1) + " ";
  s += "s=" + format_shortest(p.s_exponent) + " lambda_sup=" + format_shortest(p.lambda_sup) +
       " provenance=" + p.provenance;
  return s;
}

int cmd_converge(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    ExperimentConfig ec;
    ec.model = build_model(cfg.model);
    ec.horizon = cfg.model.horizon;
    ec.level_min = cfg.experiment.level_min;
    ec.level_max = cfg.experiment.level_max;
    ec.ref_level = cfg.experiment.ref_level;
    ec.paths = cfg.experiment.paths;
    ec.seed = derive_seed(cfg.experiment.seed, kSeedLabelConverge);
    ec.allow_explosions = cfg.experiment.allow_explosions;
    ec.workers = ctx.workers;
    validate(ec);

    PredictionFooter footer;
    if (cfg.model.is_prototype()) {
      try {
        const auto p = predict_rate(cfg.model.proto, cfg.model.horizon);
        footer.predicted_lambda = p.lambda_sup;
        footer.provenance = p.provenance;
      } catch (const HypothesisFailure& e) {
        *ctx.err << "note: no rate prediction: " << e.what() << '\n';
      }
    }

    const ConvergenceReport report = estimate_strong_error(ec);
    if (report.exploded_paths > 0) {
      *ctx.err << "note: " << report.exploded_paths << " exploded paths discarded\n";
    }
    std::ofstream file;
    write_convergence_csv(csv_sink(cfg, ctx, file), report, footer);
    if (!cfg.output.plot.empty()) {
      std::ofstream plot(cfg.output.plot);
      if (!plot) throw ConfigError("[output].plot: cannot write '" + cfg.output.plot + "'");
      write_plot_csv(plot, report);
    }
    return kExitOk;
  });
}

int cmd_predict(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    require_prototype(cfg.model, "predict");
    check_prototype(cfg.model.proto, cfg.model.horizon);
    const RatePrediction p = predict_rate(cfg.model.proto, cfg.model.horizon);
    *ctx.out << prediction_line(p) << '\n';
    return kExitOk;
  });
}

int cmd_moments(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const SdeModel model = build_model(cfg.model);
    MomentCondition cond;
    cond.gamma = cfg.model.gamma;
    cond.s_exponent = cfg.condition.s.value_or(0.0);
    cond.epsilon = cfg.condition.epsilon;
    cond.q_override = cfg.condition.q;
    MomentOptions opt;
    opt.horizon = cfg.model.horizon;
    opt.ref_level = cfg.condition.ref_level;
    opt.paths = cfg.experiment.paths;
    opt.seed = derive_seed(cfg.experiment.seed, kSeedLabelMoments);
    opt.cap = cfg.condition.cap;
    opt.growth_factor = cfg.condition.growth_factor;
    opt.workers = ctx.workers;
    const MomentEstimate e = estimate_inverse_moment(model, cond, opt);
    std::ofstream file;
    write_moments_csv(csv_sink(cfg, ctx, file), e);
    return kExitOk;
  });
}

int cmd_feller(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const AutonomousModel m = build_autonomous(cfg.model);
    FellerOptions opt;
    opt.threshold = cfg.feller.threshold;
    const double origin = cfg.feller.origin.value_or(m.x0);
    if (!m.domain.contains(origin)) throw ConfigError("[feller].origin: must lie inside the domain");
    const FellerResult r = feller_test(m, origin, opt);
    *ctx.out << "conclusion=" << to_string(r.conclusion) << " left=" << to_string(r.left.classification)
             << " right=" << to_string(r.right.classification)
             << " local_integrability=" << (r.local_integrability_ok ? "ok" : "failed") << '\n';
    if (!cfg.output.out.empty()) {
      std::ofstream file;
      auto& os = csv_sink(cfg, ctx, file);
      os << "side,x,v\n";
      for (const auto& [x, v] : r.left.sequence) os << "left," << format_double(x) << ',' << format_double(v) << '\n';
      for (const auto& [x, v] : r.right.sequence) os << "right," << format_double(x) << ',' << format_double(v) << '\n';
    }
    return kExitOk;
  });
}

int cmd_ito(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const AutonomousModel m = build_autonomous(cfg.model);
    ItoGridSpec grid;
    grid.origin = cfg.feller.origin;
    const CriterionReport r = ito_criterion(m, grid);
    *ctx.out << "classification=" << to_string(r.classification) << " inf=" << format_double(r.inf_estimate)
             << " argmin=" << format_double(r.argmin_x) << " s=" << opt_double(r.s_exponent)
             << " lambda_sup=" << opt_double(r.lambda_sup) << '\n';
    if (!cfg.output.out.empty()) {
      std::ofstream file;
      auto& os = csv_sink(cfg, ctx, file);
      os << "side,x,g\n";
      for (const auto& [x, g] : r.left_sequence) os << "left," << format_double(x) << ',' << format_double(g) << '\n';
      for (const auto& [x, g] : r.right_sequence) os << "right," << format_double(x) << ',' << format_double(g) << '\n';
    }
    return kExitOk;
  });
}

int cmd_timechange(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    require_prototype(cfg.model, "timechange");
    check_prototype(cfg.model.proto, cfg.model.horizon);
    TimeChangeOptions opt;
    opt.horizon = cfg.model.horizon;
    opt.level = cfg.timechange.level;
    opt.paths = cfg.experiment.paths;
    opt.seed = derive_seed(cfg.experiment.seed, kSeedLabelTimeChange);
    opt.significance = cfg.timechange.significance;
    opt.workers = ctx.workers;
    const TimeChangeReport r = timechange_check(cfg.model.proto, opt);
    *ctx.out << "verdict=" << (r.pass ? "pass" : "fail") << " z_mean=" << format_double(r.z_mean)
             << " z_var=" << format_double(r.z_var) << " z_critical=" << format_double(r.z_critical)
             << " horizon_image=" << format_double(r.horizon_image) << '\n';
    if (!cfg.output.out.empty()) {
      std::ofstream file;
      csv_sink(cfg, ctx, file) << "run,mean,var\n"
                               << "original," << format_double(r.mean_original) << ','
                               << format_double(r.var_original) << '\n'
                               << "changed," << format_double(r.mean_changed) << ','
                               << format_double(r.var_changed) << '\n';
    }
    return kExitOk;
  });
}

int cmd_compare(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    if (!cfg.model_hi) throw ConfigError("[model_hi]: compare needs a second model");
    const SdeModel lo = build_model(cfg.model);
    const SdeModel hi = build_model(*cfg.model_hi);
    ComparisonOptions opt;
    opt.horizon = cfg.model.horizon;
    opt.levels = cfg.compare.levels;
    opt.paths = cfg.experiment.paths;
    opt.seed = derive_seed(cfg.experiment.seed, kSeedLabelCompare);
    opt.tolerance = cfg.compare.tolerance;
    opt.workers = ctx.workers;
    const ComparisonReport r = comparison_check(lo, hi, opt);
    const auto& last = r.levels.back();
    *ctx.out << "violations=" << last.violations << " fraction=" << format_double(last.fraction)
             << " level=" << last.level << " nonincreasing=" << (r.nonincreasing ? "true" : "false") << '\n';
    if (!cfg.output.out.empty()) {
      std::ofstream file;
      auto& os = csv_sink(cfg, ctx, file);
      os << "level,violations,fraction,worst\n";
      for (const auto& l : r.levels) {
        os << l.level << ',' << l.violations << ',' << format_double(l.fraction) << ',' << format_double(l.worst) << '\n';
      }
    }
    return kExitOk;
  });
}

}  // namespace he::cli
