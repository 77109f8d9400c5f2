#include "commands.hpp"

#include "artifacts.hpp"
#include "config.hpp"
#include "hmp/errors.hpp"
#include "hmp/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef HMP_VERSION
#define HMP_VERSION "0.0.0"
#endif

namespace hmp::cli {

namespace fs = std::filesystem;

const char* tool_version() { return HMP_VERSION; }

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string bundle;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

struct Context {
  RunConfig cfg;
  HybridProblem problem;
  fs::path out;
  fs::path bundle;
  bool explicit_bundle = false;
  bool verbose = false;
  std::ostream& stdout_;
  std::ostream& stderr_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

io::LoadedTrajectory load_trajectory(const Context& ctx) {
  std::istringstream in(read_file(ctx.bundle / "trajectory.csv"));
  try {
    return io::read_trajectory_csv(in, ctx.problem);
  } catch (const FormatError& e) {
    throw FormatError((ctx.bundle / "trajectory.csv").string() + ": " + e.what());
  }
}

std::string failure_class(const NumericalError& e) {
  if (dynamic_cast<const MaxIterationsError*>(&e)) return "max-iterations";
  if (dynamic_cast<const LineSearchStallError*>(&e)) return "line-search-stall";
  if (dynamic_cast<const SingularJacobianError*>(&e)) return "singular-jacobian";
  if (dynamic_cast<const BlowUpError*>(&e)) return "blow-up";
  if (dynamic_cast<const TangentialCrossingError*>(&e)) return "tangential-crossing";
  if (dynamic_cast<const ScheduleViolationError*>(&e)) return "schedule-violation";
  if (dynamic_cast<const NonInvertibleJumpError*>(&e)) return "non-invertible-jump";
  return "numerical";
}

std::string fmt(double v) { return io::format_double(v); }

std::string fmt(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

int cmd_simulate(Context& ctx) {
  const auto& p = ctx.problem;
  const auto& b = ctx.cfg.simulate;
  std::vector<ControlLaw> laws;
  if (b.suboptimal) {
    if (p.suboptimal_controls.empty()) throw ConfigError(p.name + " documents no suboptimal policy");
    laws = p.suboptimal_controls;
  } else {
    if (!b.control) throw ConfigError("simulate.control is required");
    if (b.control->size() != p.m) throw ConfigError("simulate.control must have " + std::to_string(p.m) + " entries");
    if (!p.control_set.contains(*b.control, 0.0)) throw ConfigError("simulate.control lies outside the control set");
    laws.assign(p.modes.size(), model::constant_law(*b.control));
  }
  FlowOptions opts;
  opts.step = b.step > 0.0 ? b.step : ctx.cfg.solver.step;
  opts.control_bounds = p.control_set;
  const auto traj = flow::hybrid_flow(p, laws, p.num_switches(), opts);

  std::ostringstream csv;
  io::write_trajectory_csv(csv, p, traj);
  write_file(ctx.out / "trajectory.csv", csv.str());
  write_file(ctx.out / "switches.json", dump(switches_json(traj, false)));
  ctx.stdout_ << "simulate " << p.name << ": " << traj.switches.size() << " switch(es), x(" << fmt(traj.arcs.back().t_end)
              << ") = " << fmt(traj.final_state()) << ", cost " << fmt(p.terminal_cost.value(traj.final_state())) << "\n";
  return kExitPass;
}

int cmd_solve(Context& ctx) {
  const auto& p = ctx.problem;
  const ShootingState guess = ctx.cfg.guess ? *ctx.cfg.guess : solver::default_guess(p);
  SolveResult res;
  try {
    res = solver::solve(p, guess, ctx.cfg.solver);
  } catch (const NumericalError& e) {
    const json rep = {{"problem", p.name},
                      {"variant", to_string(p.variant)},
                      {"status", "solver-failure"},
                      {"failure_class", failure_class(e)},
                      {"message", e.what()}};
    write_file(ctx.out / "report.json", dump(rep));
    throw;
  }
  std::ostringstream csv;
  io::write_trajectory_csv(csv, p, res.trajectory, &res.adjoint);
  write_file(ctx.out / "trajectory.csv", csv.str());
  write_file(ctx.out / "switches.json", dump(switches_json(res.trajectory, true)));
  const json rep = {{"problem", p.name},
                    {"variant", to_string(p.variant)},
                    {"status", res.report.pass ? "certified" : "check-failed"},
                    {"solver", solver_json(res)},
                    {"report", report_json(res.report)}};
  write_file(ctx.out / "report.json", dump(rep));

  if (ctx.verbose) {
    for (std::size_t k = 0; k < res.residual_history.size(); ++k) {
      ctx.stderr_ << "  iteration " << k << ": |r| = " << fmt(res.residual_history[k]) << "\n";
    }
  }
  ctx.stdout_ << "solve " << p.name << ": " << (res.report.pass ? "certified" : "check failed") << " after "
              << res.iterations << " iteration(s), cost " << fmt(res.cost) << ", p0 = " << fmt(res.state.p0) << "\n";
  for (std::size_t i = 0; i < res.state.mus.size(); ++i) {
    ctx.stdout_ << "  switch " << i << ": t = " << fmt(res.state.switch_times[i]) << ", mu = " << fmt(res.state.mus[i])
                << "\n";
  }
  for (const auto& f : res.report.failures) ctx.stdout_ << "  FAIL " << f << "\n";
  return res.report.pass ? kExitPass : kExitCheckFailed;
}

int cmd_check(Context& ctx) {
  const auto started = std::chrono::steady_clock::now();
  auto loaded = load_trajectory(ctx);
  if (!loaded.adjoint) throw FormatError("trajectory.csv carries no costate columns; check needs a solved bundle");
  apply_switches_json(parse_json_file(ctx.bundle / "switches.json"), loaded.trajectory);
  const auto report = conditions::check_trajectory(ctx.problem, loaded.trajectory, *loaded.adjoint,
                                                   ctx.cfg.solver.check);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const json artifact = {{"report", report_json(report)},
                         {"provenance",
                          {{"problem", ctx.problem.name},
                           {"variant", to_string(ctx.problem.variant)},
                           {"config_hash", fnv1a_hex(ctx.cfg.canonical)},
                           {"tool_version", tool_version()},
                           {"wall_time_s", wall}}}};
  write_file(ctx.out / "check.json", dump(artifact));
  ctx.stdout_ << "check " << ctx.problem.name << ": " << (report.pass ? "pass" : "FAIL") << "\n";
  for (const auto& f : report.failures) ctx.stdout_ << "  FAIL " << f << "\n";
  return report.pass ? kExitPass : kExitCheckFailed;
}

int cmd_needle(Context& ctx) {
  const auto& p = ctx.problem;
  const auto& b = ctx.cfg.needle;
  const auto loaded = load_trajectory(ctx);
  const auto& traj = loaded.trajectory;
  std::vector<NeedleSpec> specs = b.specs;
  if (specs.empty()) {
    specs = conditions::random_needles(p, traj, b.count, ctx.cfg.seed, b.max_epsilon);
  } else {
    for (std::size_t k = 0; k < specs.size(); ++k) {
      try {
        conditions::validate_needle(p, traj, specs[k], 0.0);
      } catch (const ContractError& e) {
        throw ConfigError("needle spec " + std::to_string(k) + " rejected: " + e.what());
      }
    }
  }
  const Vec dh = p.terminal_cost.gradient(traj.final_state());
  const double tol_cone = ctx.cfg.solver.check.cone;
  json rows = json::array();
  std::vector<int> negative;
  std::vector<int> fd_fail;
  double min_pairing = INFINITY;
  double max_gap = 0.0;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& s = specs[k];
    const Vec a = conditions::needle_terminal_variation(p, traj, s).comps;
    const Vec fd = conditions::needle_fd_richardson(p, traj, s, b.fd_epsilon);
    const double gap = (a - fd).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
    const double pairing = dh.dot(a);
    min_pairing = std::min(min_pairing, pairing);
    max_gap = std::max(max_gap, gap);
    if (pairing < -tol_cone) negative.push_back(static_cast<int>(k));
    if (!(gap <= b.fd_tol)) fd_fail.push_back(static_cast<int>(k));
    rows.push_back({{"t1", s.t1},
                    {"u1", to_json(s.u1)},
                    {"epsilon", s.epsilon},
                    {"analytic", to_json(a)},
                    {"finite_difference", to_json(fd)},
                    {"relative_gap", gap},
                    {"pairing", pairing}});
  }
  const bool pass = negative.empty() && fd_fail.empty();
  const json doc = {{"problem", p.name},
                    {"seed", ctx.cfg.seed},
                    {"needles", rows},
                    {"summary",
                     {{"count", specs.size()},
                      {"min_pairing", min_pairing},
                      {"max_relative_gap", max_gap},
                      {"negative_pairings", negative},
                      {"fd_mismatches", fd_fail},
                      {"pass", pass}}}};
  write_file(ctx.out / "needle.json", dump(doc));
  ctx.stdout_ << "needle " << p.name << ": " << specs.size() << " spec(s), min pairing " << fmt(min_pairing)
              << ", max FD gap " << fmt(max_gap) << (pass ? ", pass" : ", FAIL") << "\n";
  if (!negative.empty()) ctx.stdout_ << "  " << negative.size() << " needle(s) with negative pairing\n";
  if (!fd_fail.empty()) ctx.stdout_ << "  " << fd_fail.size() << " needle(s) disagree with finite differences\n";
  return pass ? kExitPass : kExitCheckFailed;
}

void write_surface_csv(const fs::path& path, const HybridProblem& p, const ValueSurface& s) {
  std::ostringstream out;
  const int k = s.dim();
  out << "# hmp value surface v1\n# problem: " << p.name << "\n# dim: " << k << "\n# spacing: " << fmt(s.spacing)
      << "\n# value = best terminal cost with the crossing pinned to (x, t); reachable iff residual <= 1e-3\n";
  for (int i = 1; i <= k; ++i) out << "i" << i << ",";
  for (int i = 1; i <= k; ++i) out << "y" << i << ",";
  for (int i = 1; i <= p.n; ++i) out << "x" << i << ",";
  out << "t,value,residual,reachable\n";
  for (const auto& smp : s.samples) {
    for (int i : smp.index) out << i << ",";
    for (int i = 0; i < k; ++i) out << fmt(smp.y[i]) << ",";
    for (int i = 0; i < p.n; ++i) out << fmt(smp.x[i]) << ",";
    out << fmt(smp.t) << "," << fmt(smp.value) << "," << fmt(smp.residual) << "," << (smp.reachable ? 1 : 0) << "\n";
  }
  write_file(path, out.str());
}

int cmd_oracle(Context& ctx) {
  const auto& p = ctx.problem;
  const auto& b = ctx.cfg.oracle;
  OracleOptions opts;
  opts.seed = ctx.cfg.seed;
  opts.restarts = b.restarts;
  opts.gradient = b.gradient;
  const auto sol = oracle::direct_oracle(p, b.segments, b.grid_points, opts);

  json controls = json::array();
  for (const auto& m : sol.control.values) {
    json mode = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      mode.push_back(row);
    }
    controls.push_back(mode);
  }
  json doc = {{"problem", p.name},
              {"seed", ctx.cfg.seed},
              {"segments", sol.segments},
              {"grid_points", sol.grid_points},
              {"exhaustive", sol.exhaustive},
              {"cost", sol.cost},
              {"evaluations", sol.evaluations},
              {"control", controls},
              {"switches", switches_json(sol.trajectory, false)}};
  if (b.gradient) doc["cost_gradient_x0"] = to_json(sol.cost_gradient_x0);
  std::ostringstream csv;
  io::write_trajectory_csv(csv, p, sol.trajectory);
  write_file(ctx.out / "oracle_trajectory.csv", csv.str());
  ctx.stdout_ << "oracle " << p.name << ": N = " << sol.segments << ", G = " << sol.grid_points << ", cost "
              << fmt(sol.cost) << (sol.exhaustive ? " (exhaustive)" : "") << "\n";
  if (b.gradient) ctx.stdout_ << "  d cost / d x0 = " << fmt(sol.cost_gradient_x0) << "\n";

  const fs::path report = ctx.bundle / "report.json";
  if (fs::exists(report) && (ctx.explicit_bundle || ctx.bundle == ctx.out)) {
    const json r = parse_json_file(report);
    if (r.contains("solver") && r["solver"].contains("cost") && r["solver"]["cost"].is_number()) {
      const double indirect = r["solver"]["cost"].get<double>();
      const double gap = indirect - sol.cost;
      doc["indirect_cost"] = indirect;
      doc["indirect_minus_oracle"] = gap;
      doc["agrees"] = std::abs(gap) <= std::max(1e-3, 5e-3 * std::abs(sol.cost));
      ctx.stdout_ << "  indirect cost " << fmt(indirect) << ", gap " << fmt(gap) << "\n";
    }
  }

  if (b.surface) {
    const auto& sb = *b.surface;
    oracle::SurfaceGrid g;
    g.switch_index = sb.switch_index;
    g.spacing = sb.spacing;
    g.half_width = sb.half_width;
    g.segments = sb.segments;
    if (sb.center_x) {
      g.center_x = *sb.center_x;
      g.center_t = sb.center_t.value_or(0.0);
    } else {
      const auto res = solver::solve(p, ctx.cfg.guess ? *ctx.cfg.guess : solver::default_guess(p), ctx.cfg.solver);
      if (sb.switch_index >= static_cast<int>(res.trajectory.switches.size())) {
        throw ConfigError("oracle.surface.switch_index out of range");
      }
      g.center_x = res.trajectory.switches[sb.switch_index].x_minus;
      g.center_t = sb.center_t.value_or(res.trajectory.switches[sb.switch_index].t);
    }
    const auto surface = oracle::value_surface_oracle(p, g, opts);
    write_surface_csv(ctx.out / "surface.csv", p, surface);
    const ValueSurface::Sample* best = nullptr;
    for (const auto& smp : surface.samples) {
      if (smp.reachable && (!best || smp.value < best->value)) best = &smp;
    }
    json sj = {{"dim", surface.dim()},
               {"spacing", surface.spacing},
               {"half_width", surface.half_width},
               {"samples", surface.samples.size()}};
    if (best) sj["minimum"] = {{"index", best->index}, {"x", to_json(best->x)}, {"t", best->t}, {"value", best->value}};
    if (surface.half_width > 0) {
      const auto dv = conditions::dv_covector(surface, Vec::Zero(surface.dim()));
      sj["tangential_gradient"] = to_json(dv.tangential);
      sj["tangential_norm"] = dv.tangential_norm;
      ctx.stdout_ << "  surface: " << surface.samples.size() << " samples, tangential |dv| at centre "
                  << fmt(dv.tangential_norm) << "\n";
    }
    if (best) ctx.stdout_ << "  surface minimum at x = " << fmt(best->x) << ", value " << fmt(best->value) << "\n";
    doc["surface"] = sj;
  }
  write_file(ctx.out / "oracle.json", dump(doc));
  return kExitPass;
}

int cmd_registry(std::ostream& out) {
  for (const auto& e : registry()) {
    out << e.name << "  " << e.summary << "\n";
    for (const auto& ps : e.params) {
      out << "    " << ps.name << " = " << fmt(ps.default_value) << "  [" << fmt(ps.lo) << ", " << fmt(ps.hi) << "]  "
          << ps.doc << "\n";
    }
  }
  return kExitPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid maximum principle toolkit: simulate, solve, certify and cross-check impulsive hybrid "
               "optimal control problems.",
               "hmp"};
  app.set_version_flag("--version", std::string(tool_version()));
  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration");
  app.add_option("--out", flags.out, "output directory (default: config 'out', else .)");
  app.add_option("--bundle", flags.bundle, "directory holding a solution bundle (default: the output directory)");
  app.add_option("--seed", flags.seed, "seed for random needles and oracle restarts");
  app.add_flag("--verbose", flags.verbose, "progress on stderr");
  app.require_subcommand(1);
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "integrate the hybrid flow under a fixed control"},
      {"solve", "indirect shooting plus certification of every condition"},
      {"check", "re-certify a solution bundle read from disk"},
      {"needle", "needle variations: analytic vs finite differences, terminal cone test"},
      {"oracle", "direct brute-force optimum and value-surface sampling"},
      {"registry", "list built-in problems and their parameters"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(tool_version()) + "\n" : app.help());
      return kExitPass;
    }
    err << "hmp: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (command == "registry") return cmd_registry(out);
    if (flags.config.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    const fs::path out_dir = !flags.out.empty() ? fs::path(flags.out) : fs::path(cfg.out.value_or("."));
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    const bool explicit_bundle = !flags.bundle.empty() || cfg.bundle.has_value();
    const fs::path bundle = !flags.bundle.empty() ? fs::path(flags.bundle) : fs::path(cfg.bundle.value_or(out_dir.string()));
    Context ctx{cfg, build_problem(cfg), out_dir, bundle, explicit_bundle, flags.verbose, out, err};
    if (ctx.verbose) err << "hmp " << command << ": " << ctx.problem.name << " (" << to_string(ctx.problem.variant) << ")\n";
    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "solve") return cmd_solve(ctx);
    if (command == "check") return cmd_check(ctx);
    if (command == "needle") return cmd_needle(ctx);
    return cmd_oracle(ctx);
  } catch (const BlowUpError& e) {
    err << "hmp: numerical failure (blow-up at t = " << fmt(e.time()) << "): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "hmp: numerical failure (" << failure_class(e) << "): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const GeometryError& e) {
    err << "hmp: numerical failure (geometry): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const FormatError& e) {
    err << "hmp: schema violation: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "hmp: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "hmp: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace hmp::cli
