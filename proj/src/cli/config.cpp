// SPDX-License-Identifier: MIT
#include "he/cli/config.hpp"

#include "he/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace he::cli {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& text, const std::string& field) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(field + ": expected a number, got '" + text + "'");
}

long long to_integer(const std::string& text, const std::string& field) {
  const std::string s = trim(text);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(field + ": expected an integer, got '" + text + "'");
}

std::uint64_t to_unsigned(const std::string& text, const std::string& field) {
  const std::string s = trim(text);
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(field + ": expected a non-negative integer, got '" + text + "'");
}

bool to_bool(const std::string& text, const std::string& field) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(field + ": expected true or false, got '" + text + "'");
}

std::vector<double> args_of(const std::string& expr, const std::string& head, std::size_t count,
                            const std::string& field) {
  const std::string body = expr.substr(head.size() + 1);
  const auto parts = split(body, ',');
  if (parts.size() != count) {
    throw ConfigError(field + ": '" + head + "' takes " + std::to_string(count) + " argument(s), got '" + expr + "'");
  }
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(to_double(p, field));
  return out;
}

std::pair<int, int> parse_level_range(const std::string& text, const std::string& field) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError(field + ": expected 'a:b', got '" + text + "'");
  return {static_cast<int>(to_integer(parts[0], field)), static_cast<int>(to_integer(parts[1], field))};
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model", {"kind", "kappa", "lambda", "theta", "gamma", "x0", "horizon", "drift", "sigma", "domain"}},
      {"model_hi", {"kind", "kappa", "lambda", "theta", "gamma", "x0", "horizon", "drift", "sigma", "domain"}},
      {"experiment", {"levels", "ref_level", "paths", "seed", "allow_explosions"}},
      {"condition", {"s", "epsilon", "q", "cap", "growth_factor", "ref_level"}},
      {"compare", {"levels", "tolerance"}},
      {"timechange", {"level", "significance"}},
      {"feller", {"origin", "threshold"}},
      {"output", {"out", "plot", "verbosity"}},
  };
  return keys;
}

ModelBlock parse_model(const pt::ptree& sec, const std::string& name) {
  ModelBlock m;
  auto field = [&](const std::string& key) { return "[" + name + "]." + key; };
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = sec.get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
    return std::nullopt;
  };
  if (auto v = get("kind")) m.kind = *v;
  if (m.kind != "cir" && m.kind != "ckls" && m.kind != "wf" && m.kind != "custom") {
    throw ConfigError(field("kind") + ": expected cir, ckls, wf or custom, got '" + m.kind + "'");
  }
  if (auto v = get("horizon")) m.horizon = to_double(*v, field("horizon"));
  if (!(m.horizon > 0.0) || !std::isfinite(m.horizon)) throw ConfigError(field("horizon") + ": must be positive");
  if (auto v = get("x0")) m.x0 = to_double(*v, field("x0"));
  if (auto v = get("gamma")) m.gamma = to_double(*v, field("gamma"));

  if (m.is_prototype()) {
    m.proto.kind = m.kind == "cir" ? PrototypeKind::cir : m.kind == "wf" ? PrototypeKind::wf : PrototypeKind::ckls;
    if (auto v = get("kappa")) m.proto.kappa = parse_param(*v, field("kappa"));
    if (auto v = get("lambda")) m.proto.lambda = parse_param(*v, field("lambda"));
    if (auto v = get("theta")) m.proto.theta = parse_param(*v, field("theta"));
    if (m.kind == "wf" && !get("x0")) m.x0 = 0.5;
    if (m.kind == "ckls" && !get("gamma")) m.gamma = 0.75;
    if (m.kind != "ckls") m.gamma = 0.5;
    m.proto.x0 = m.x0;
    m.proto.gamma = m.gamma;
    for (const char* k : {"drift", "sigma", "domain"}) {
      if (get(k)) throw ConfigError(field(k) + ": only valid with kind = custom");
    }
  } else {
    for (const char* k : {"kappa", "lambda", "theta"}) {
      if (get(k)) throw ConfigError(field(k) + ": only valid for prototype kinds");
    }
    if (auto v = get("drift")) m.drift = *v;
    if (auto v = get("sigma")) m.sigma = *v;
    parse_builtin(m.drift, field("drift"));
    parse_builtin(m.sigma, field("sigma"));
    if (auto v = get("domain")) {
      const auto parts = split(*v, ',');
      if (parts.size() != 2) throw ConfigError(field("domain") + ": expected 'l,r'");
      m.domain = Domain{to_double(parts[0], field("domain")), to_double(parts[1], field("domain"))};
    }
  }
  return m;
}

}  // namespace

ParamFn parse_param(const std::string& text, const std::string& field) {
  const std::string expr = trim(text);
  auto starts = [&](const std::string& head) { return expr.rfind(head + ":", 0) == 0; };
  if (starts("const")) return ParamFn::constant(args_of(expr, "const", 1, field)[0]);
  if (starts("affine")) {
    const auto a = args_of(expr, "affine", 2, field);
    return ParamFn::affine(a[0], a[1]);
  }
  if (starts("sin")) {
    const auto a = args_of(expr, "sin", 3, field);
    return ParamFn::sinusoidal(a[0], a[1], a[2]);
  }
  return ParamFn::constant(to_double(expr, field));
}

Builtin parse_builtin(const std::string& text, const std::string& field) {
  const std::string expr = trim(text);
  auto starts = [&](const std::string& head) { return expr.rfind(head + ":", 0) == 0; };
  Builtin b;
  b.expr = expr;
  auto zero = [](double) { return 0.0; };
  if (expr == "zero") {
    b.f = zero;
    b.df = zero;
    b.d2f = zero;
    b.nonnegative = true;
  } else if (starts("const")) {
    const double c = args_of(expr, "const", 1, field)[0];
    b.f = [c](double) { return c; };
    b.df = zero;
    b.d2f = zero;
    b.nonnegative = c >= 0.0;
  } else if (starts("linear")) {
    const auto a = args_of(expr, "linear", 2, field);
    const double p = a[0], q = a[1];
    b.f = [p, q](double x) { return p + q * x; };
    b.df = [q](double) { return q; };
    b.d2f = zero;
    b.lipschitz = std::abs(q);
  } else if (starts("poslinear")) {
    const double s = args_of(expr, "poslinear", 1, field)[0];
    b.f = [s](double x) { return s * std::max(x, 0.0); };
    b.df = [s](double x) { return x > 0.0 ? s : 0.0; };
    b.d2f = zero;
    b.lipschitz = std::abs(s);
    b.nonnegative = s >= 0.0;
  } else if (starts("wf")) {
    const double s = args_of(expr, "wf", 1, field)[0];
    b.f = [s](double x) { return s * std::max(x * (1.0 - x), 0.0); };
    b.df = [s](double x) { return (x > 0.0 && x < 1.0) ? s * (1.0 - 2.0 * x) : 0.0; };
    b.d2f = [s](double x) { return (x > 0.0 && x < 1.0) ? -2.0 * s : 0.0; };
    b.lipschitz = std::abs(s);
    b.nonnegative = s >= 0.0;
  } else if (starts("revert")) {
    const auto a = args_of(expr, "revert", 2, field);
    const double k = a[0], l = a[1];
    b.f = [k, l](double x) { return k * (l - x); };
    b.df = [k](double) { return -k; };
    b.d2f = zero;
    b.lipschitz = std::abs(k);
  } else {
    throw ConfigError(field + ": unknown coefficient '" + expr +
                      "' (expected zero, const:c, linear:p,q, poslinear:s, wf:s or revert:k,l)");
  }
  return b;
}

RunConfig parse_config(const std::string& text) {
  // The INI reader only knows ';' comments; blank out '#' lines so line numbers survive.
  std::stringstream cleaned;
  {
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      cleaned << ((!t.empty() && t[0] == '#') ? "" : line) << '\n';
    }
  }
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' must be inside a [section]");
      throw ConfigError("[" + section + "]: unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("[" + section + "]." + key + ": unknown key");
    }
  }

  RunConfig cfg;
  auto section = [&](const std::string& name) -> const pt::ptree* {
    const auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return child ? &*child : nullptr;
  };
  auto value = [&](const pt::ptree* sec, const std::string& key) -> std::optional<std::string> {
    if (!sec) return std::nullopt;
    if (auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
    return std::nullopt;
  };

  static const pt::ptree empty;
  cfg.model = parse_model(section("model") ? *section("model") : empty, "model");
  if (const auto* hi = section("model_hi")) cfg.model_hi = parse_model(*hi, "model_hi");

  if (const auto* e = section("experiment")) {
    if (auto v = value(e, "levels")) {
      std::tie(cfg.experiment.level_min, cfg.experiment.level_max) = parse_level_range(*v, "[experiment].levels");
    }
    if (auto v = value(e, "ref_level")) cfg.experiment.ref_level = static_cast<int>(to_integer(*v, "[experiment].ref_level"));
    if (auto v = value(e, "paths")) cfg.experiment.paths = to_integer(*v, "[experiment].paths");
    if (auto v = value(e, "seed")) cfg.experiment.seed = to_unsigned(*v, "[experiment].seed");
    if (auto v = value(e, "allow_explosions")) {
      cfg.experiment.allow_explosions = to_bool(*v, "[experiment].allow_explosions");
    }
  }
  if (const auto* c = section("condition")) {
    if (auto v = value(c, "s")) cfg.condition.s = to_double(*v, "[condition].s");
    if (auto v = value(c, "epsilon")) cfg.condition.epsilon = to_double(*v, "[condition].epsilon");
    if (auto v = value(c, "q")) cfg.condition.q = to_double(*v, "[condition].q");
    if (auto v = value(c, "cap")) cfg.condition.cap = to_double(*v, "[condition].cap");
    if (auto v = value(c, "growth_factor")) cfg.condition.growth_factor = to_double(*v, "[condition].growth_factor");
    if (auto v = value(c, "ref_level")) cfg.condition.ref_level = static_cast<int>(to_integer(*v, "[condition].ref_level"));
  }
  if (const auto* c = section("compare")) {
    if (auto v = value(c, "levels")) {
      cfg.compare.levels.clear();
      for (const auto& p : split(*v, ',')) cfg.compare.levels.push_back(static_cast<int>(to_integer(p, "[compare].levels")));
    }
    if (auto v = value(c, "tolerance")) cfg.compare.tolerance = to_double(*v, "[compare].tolerance");
  }
  if (const auto* c = section("timechange")) {
    if (auto v = value(c, "level")) cfg.timechange.level = static_cast<int>(to_integer(*v, "[timechange].level"));
    if (auto v = value(c, "significance")) cfg.timechange.significance = to_double(*v, "[timechange].significance");
  }
  if (const auto* c = section("feller")) {
    if (auto v = value(c, "origin")) cfg.feller.origin = to_double(*v, "[feller].origin");
    if (auto v = value(c, "threshold")) cfg.feller.threshold = to_double(*v, "[feller].threshold");
  }
  if (const auto* c = section("output")) {
    if (auto v = value(c, "out")) cfg.output.out = *v;
    if (auto v = value(c, "plot")) cfg.output.plot = *v;
    if (auto v = value(c, "verbosity")) cfg.output.verbosity = static_cast<int>(to_integer(*v, "[output].verbosity"));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.paths) cfg.experiment.paths = *o.paths;
  if (o.seed) cfg.experiment.seed = *o.seed;
  if (o.levels) std::tie(cfg.experiment.level_min, cfg.experiment.level_max) = parse_level_range(*o.levels, "--levels");
  if (o.ref_level) {
    cfg.experiment.ref_level = *o.ref_level;
    cfg.condition.ref_level = *o.ref_level;
  }
  if (o.out) cfg.output.out = *o.out;
}

namespace {

void model_ini(std::ostringstream& os, const ModelBlock& m, const char* name) {
  os << "[" << name << "]\n";
  os << "kind = " << m.kind << "\n";
  os << "horizon = " << fmt(m.horizon) << "\n";
  os << "x0 = " << fmt(m.x0) << "\n";
  os << "gamma = " << fmt(m.gamma) << "\n";
  if (m.is_prototype()) {
    os << "kappa = " << m.proto.kappa.to_string() << "\n";
    os << "lambda = " << m.proto.lambda.to_string() << "\n";
    os << "theta = " << m.proto.theta.to_string() << "\n";
  } else {
    os << "drift = " << m.drift << "\n";
    os << "sigma = " << m.sigma << "\n";
    if (m.domain) os << "domain = " << fmt(m.domain->left) << "," << fmt(m.domain->right) << "\n";
  }
  os << "\n";
}

}  // namespace

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  model_ini(os, cfg.model, "model");
  if (cfg.model_hi) model_ini(os, *cfg.model_hi, "model_hi");
  os << "[experiment]\n"
     << "levels = " << cfg.experiment.level_min << ":" << cfg.experiment.level_max << "\n"
     << "ref_level = " << cfg.experiment.ref_level << "\n"
     << "paths = " << cfg.experiment.paths << "\n"
     << "seed = " << cfg.experiment.seed << "\n"
     << "allow_explosions = " << (cfg.experiment.allow_explosions ? "true" : "false") << "\n\n";
  os << "[condition]\n";
  if (cfg.condition.s) os << "s = " << fmt(*cfg.condition.s) << "\n";
  os << "epsilon = " << fmt(cfg.condition.epsilon) << "\n";
  if (cfg.condition.q) os << "q = " << fmt(*cfg.condition.q) << "\n";
  os << "cap = " << fmt(cfg.condition.cap) << "\n"
     << "growth_factor = " << fmt(cfg.condition.growth_factor) << "\n"
     << "ref_level = " << cfg.condition.ref_level << "\n\n";
  os << "[compare]\nlevels = ";
  for (std::size_t i = 0; i < cfg.compare.levels.size(); ++i) os << (i ? "," : "") << cfg.compare.levels[i];
  os << "\ntolerance = " << fmt(cfg.compare.tolerance) << "\n\n";
  os << "[timechange]\nlevel = " << cfg.timechange.level << "\nsignificance = " << fmt(cfg.timechange.significance)
     << "\n\n";
  os << "[feller]\n";
  if (cfg.feller.origin) os << "origin = " << fmt(*cfg.feller.origin) << "\n";
  os << "threshold = " << fmt(cfg.feller.threshold) << "\n\n";
  os << "[output]\n";
  if (!cfg.output.out.empty()) os << "out = " << cfg.output.out << "\n";
  if (!cfg.output.plot.empty()) os << "plot = " << cfg.output.plot << "\n";
  os << "verbosity = " << cfg.output.verbosity << "\n";
  return os.str();
}

SdeModel build_model(const ModelBlock& block) {
  try {
    if (block.is_prototype()) return make_prototype(block.proto, block.horizon);
    const Builtin drift = parse_builtin(block.drift, "[model].drift");
    const Builtin sigma = parse_builtin(block.sigma, "[model].sigma");
    CoefficientFn a{[f = drift.f](double, double x) { return f(x); }, {drift.lipschitz, 0.0, drift.nonnegative}};
    CoefficientFn s{[f = sigma.f](double, double x) { return f(x); }, {sigma.lipschitz, 0.0, sigma.nonnegative}};
    return make_model(std::move(a), std::move(s), block.gamma, block.x0, block.domain,
                      "custom(" + block.drift + ";" + block.sigma + ")");
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[model]: ") + e.what());
  }
}

AutonomousModel build_autonomous(const ModelBlock& block) {
  try {
    if (block.is_prototype()) {
      PrototypeParams p = block.proto;
      check_prototype(p, block.horizon);
      return autonomous_prototype(p);
    }
    const Builtin drift = parse_builtin(block.drift, "[model].drift");
    const Builtin sigma = parse_builtin(block.sigma, "[model].sigma");
    AutonomousModel m;
    m.a = drift.f;
    m.da = drift.df;
    m.sigma = sigma.f;
    m.dsigma = sigma.df;
    m.d2sigma = sigma.d2f;
    m.gamma = block.gamma;
    m.x0 = block.x0;
    m.domain = block.domain.value_or(Domain{});
    check_autonomous(m);
    return m;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[model]: ") + e.what());
  }
}

}  // namespace he::cli
