#include "config.hpp"

#include "hmp/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hmp::cli {

using nlohmann::json;

namespace {

void allow_only(const json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

double positive(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + " must be positive");
  return v;
}

int integer(const json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1000000000) throw ConfigError(where + " out of range");
  return static_cast<int>(v);
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be true or false");
  return j.get<bool>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vec vec(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError(where + " has a bad length");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

void parse_solver(const json& j, SolveOptions& o) {
  allow_only(j, {"step", "tol", "max_iter", "fd_step", "armijo", "min_alpha", "eliminate_mu",
                 "normalize_normals"}, "solver");
  if (j.contains("step")) o.step = positive(j["step"], "solver.step");
  if (j.contains("tol")) o.tol = positive(j["tol"], "solver.tol");
  if (j.contains("max_iter")) o.max_iter = integer(j["max_iter"], "solver.max_iter", 0);
  if (j.contains("fd_step")) o.fd_step = positive(j["fd_step"], "solver.fd_step");
  if (j.contains("armijo")) o.armijo = positive(j["armijo"], "solver.armijo");
  if (j.contains("min_alpha")) o.min_alpha = positive(j["min_alpha"], "solver.min_alpha");
  if (j.contains("eliminate_mu")) o.eliminate_mu = boolean(j["eliminate_mu"], "solver.eliminate_mu");
  if (j.contains("normalize_normals")) {
    o.normalize_normals = boolean(j["normalize_normals"], "solver.normalize_normals");
  }
}

void parse_tolerances(const json& j, Tolerances& t) {
  allow_only(j, {"min_gap", "ode", "transversality", "hamiltonian", "guard", "jump", "nontrivial", "cone"},
             "tolerances");
  const std::pair<const char*, double*> fields[] = {
      {"min_gap", &t.min_gap}, {"ode", &t.ode}, {"transversality", &t.transversality},
      {"hamiltonian", &t.hamiltonian}, {"guard", &t.guard}, {"jump", &t.jump},
      {"nontrivial", &t.nontrivial}, {"cone", &t.cone}};
  for (const auto& [key, dst] : fields) {
    if (j.contains(key)) *dst = positive(j[key], std::string("tolerances.") + key);
  }
}

ShootingState parse_guess(const json& j) {
  allow_only(j, {"p0", "switch_times", "mus"}, "guess");
  if (!j.contains("p0")) throw ConfigError("guess.p0 is required");
  ShootingState z;
  z.p0 = vec(j["p0"], "guess.p0");
  if (j.contains("switch_times")) z.switch_times = numbers(j["switch_times"], "guess.switch_times");
  if (j.contains("mus")) z.mus = numbers(j["mus"], "guess.mus");
  return z;
}

SimulateBlock parse_simulate(const json& j) {
  allow_only(j, {"control", "step"}, "simulate");
  SimulateBlock b;
  if (j.contains("control")) {
    const auto& c = j["control"];
    if (c.is_string()) {
      if (c.get<std::string>() != "suboptimal") throw ConfigError("simulate.control must be an array or \"suboptimal\"");
      b.suboptimal = true;
    } else {
      b.control = vec(c, "simulate.control");
    }
  }
  if (j.contains("step")) b.step = positive(j["step"], "simulate.step");
  return b;
}

NeedleBlock parse_needle(const json& j) {
  allow_only(j, {"count", "specs", "max_epsilon", "fd_epsilon", "fd_tol"}, "needle");
  NeedleBlock b;
  if (j.contains("count")) b.count = integer(j["count"], "needle.count", 1);
  if (j.contains("max_epsilon")) b.max_epsilon = positive(j["max_epsilon"], "needle.max_epsilon");
  if (j.contains("fd_epsilon")) b.fd_epsilon = positive(j["fd_epsilon"], "needle.fd_epsilon");
  if (j.contains("fd_tol")) b.fd_tol = positive(j["fd_tol"], "needle.fd_tol");
  if (j.contains("specs")) {
    if (!j["specs"].is_array()) throw ConfigError("needle.specs must be an array");
    for (std::size_t i = 0; i < j["specs"].size(); ++i) {
      const auto& s = j["specs"][i];
      const std::string where = "needle.specs[" + std::to_string(i) + "]";
      allow_only(s, {"t1", "u1", "epsilon"}, where);
      if (!s.contains("t1") || !s.contains("u1")) throw ConfigError(where + " needs t1 and u1");
      NeedleSpec spec;
      spec.t1 = number(s["t1"], where + ".t1");
      spec.u1 = vec(s["u1"], where + ".u1");
      spec.epsilon = s.contains("epsilon") ? positive(s["epsilon"], where + ".epsilon") : b.max_epsilon;
      b.specs.push_back(spec);
    }
  }
  return b;
}

OracleBlock parse_oracle(const json& j) {
  allow_only(j, {"segments", "grid_points", "restarts", "gradient", "surface"}, "oracle");
  OracleBlock b;
  if (j.contains("segments")) b.segments = integer(j["segments"], "oracle.segments", 0);
  if (j.contains("grid_points")) b.grid_points = integer(j["grid_points"], "oracle.grid_points", 0);
  if (j.contains("restarts")) b.restarts = integer(j["restarts"], "oracle.restarts", 1);
  if (j.contains("gradient")) b.gradient = boolean(j["gradient"], "oracle.gradient");
  if (j.contains("surface")) {
    const auto& s = j["surface"];
    allow_only(s, {"switch_index", "center_x", "center_t", "spacing", "half_width", "segments"}, "oracle.surface");
    SurfaceBlock sb;
    if (s.contains("switch_index")) sb.switch_index = integer(s["switch_index"], "oracle.surface.switch_index", 0);
    if (s.contains("center_x")) sb.center_x = vec(s["center_x"], "oracle.surface.center_x");
    if (s.contains("center_t")) sb.center_t = number(s["center_t"], "oracle.surface.center_t");
    if (s.contains("spacing")) sb.spacing = positive(s["spacing"], "oracle.surface.spacing");
    if (s.contains("half_width")) sb.half_width = integer(s["half_width"], "oracle.surface.half_width", 0);
    if (s.contains("segments")) sb.segments = integer(s["segments"], "oracle.surface.segments", 1);
    b.surface = sb;
  }
  return b;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_only(j, {"problem", "params", "variant", "t0", "tf", "seed", "solver", "tolerances", "guess", "simulate",
                 "needle", "oracle", "out", "bundle"},
             "config");
  RunConfig cfg;
  if (!j.contains("problem") || !j["problem"].is_string()) throw ConfigError("config.problem must name a registry entry");
  cfg.problem = j["problem"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("params must be an object");
    for (const auto& [k, v] : j["params"].items()) cfg.params[k] = number(v, "params." + k);
  }
  if (j.contains("variant")) {
    if (!j["variant"].is_string()) throw ConfigError("variant must be a string");
    try {
      cfg.variant = variant_from_string(j["variant"].get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("t0")) cfg.t0 = number(j["t0"], "t0");
  if (j.contains("tf")) cfg.tf = number(j["tf"], "tf");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("solver")) parse_solver(j["solver"], cfg.solver);
  if (j.contains("tolerances")) parse_tolerances(j["tolerances"], cfg.solver.check);
  if (j.contains("guess")) cfg.guess = parse_guess(j["guess"]);
  if (j.contains("simulate")) cfg.simulate = parse_simulate(j["simulate"]);
  if (j.contains("needle")) cfg.needle = parse_needle(j["needle"]);
  if (j.contains("oracle")) cfg.oracle = parse_oracle(j["oracle"]);
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw ConfigError("out must be a path");
    cfg.out = j["out"].get<std::string>();
  }
  if (j.contains("bundle")) {
    if (!j["bundle"].is_string()) throw ConfigError("bundle must be a path");
    cfg.bundle = j["bundle"].get<std::string>();
  }
  cfg.canonical = j.dump();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

HybridProblem build_problem(const RunConfig& cfg) {
  HybridProblem p;
  try {
    p = registry_instantiate(cfg.problem, cfg.params);
  } catch (const UnknownProblemError& e) {
    throw ConfigError(e.what());
  } catch (const ParameterRangeError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.t0) p.t0 = *cfg.t0;
  if (cfg.tf) p.tf = *cfg.tf;
  if (!(p.t0 < p.tf)) throw ConfigError("horizon must satisfy t0 < tf");
  if (cfg.variant) p.variant = *cfg.variant;
  const auto report = model::validate(p);
  if (!report.ok()) {
    std::string msg = "problem fails validation:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  return p;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hmp::cli
