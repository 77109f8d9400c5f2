#include "hmp/io.hpp"

#include "hmp/conditions.hpp"
#include "hmp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace hmp::io {

namespace {

constexpr const char* kMagic = "# hmp trajectory v1";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string header_row(int n, int m) {
  std::string h = "t,mode";
  for (int i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  for (int i = 1; i <= m; ++i) h += ",u" + std::to_string(i);
  for (int i = 1; i <= n; ++i) h += ",p" + std::to_string(i);
  return h + ",H";
}

// "# key: value" lines after the magic line.
std::string meta_value(const std::string& line, const std::string& key) {
  const std::string prefix = "# " + key + ": ";
  if (line.rfind(prefix, 0) != 0) throw FormatError("expected '" + prefix + "...' header line");
  return line.substr(prefix.size());
}

long parse_count(const std::string& text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || v < 0) throw FormatError("bad count '" + text + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(v)) {
    throw FormatError("bad number '" + text + "'");
  }
  return v;
}

void write_trajectory_csv(std::ostream& out, const HybridProblem& problem, const HybridTrajectory& traj,
                          const AdjointTrajectory* adjoint) {
  if (adjoint && adjoint->arcs.size() != traj.arcs.size()) {
    throw ContractError("costate arcs do not match state arcs");
  }
  long rows = 0;
  for (const auto& arc : traj.arcs) rows += static_cast<long>(arc.samples.size());
  out << kMagic << '\n'
      << "# problem: " << problem.name << '\n'
      << "# n: " << problem.n << '\n'
      << "# m: " << problem.m << '\n'
      << "# costate: " << (adjoint ? "yes" : "no") << '\n'
      << "# rows: " << rows << '\n'
      << "# A switch at t_i is a pair of rows with equal t: the t_i- row in the old mode, then the t_i+ row\n"
      << "# in the new mode. p and H are blank without a costate. H = <p, f(x, u, t)>.\n"
      << header_row(problem.n, problem.m) << '\n';
  for (std::size_t i = 0; i < traj.arcs.size(); ++i) {
    const auto& arc = traj.arcs[i];
    const Mode& mode = problem.modes.at(static_cast<std::size_t>(arc.mode));
    if (adjoint && adjoint->arcs[i].p.size() != arc.samples.size()) {
      throw ContractError("costate samples misaligned with state samples");
    }
    for (std::size_t k = 0; k < arc.samples.size(); ++k) {
      const auto& s = arc.samples[k];
      out << format_double(s.t) << ',' << arc.mode;
      for (int j = 0; j < problem.n; ++j) out << ',' << format_double(s.x[j]);
      for (int j = 0; j < problem.m; ++j) out << ',' << format_double(s.u[j]);
      if (adjoint) {
        const Vec& p = adjoint->arcs[i].p[k];
        for (int j = 0; j < problem.n; ++j) out << ',' << format_double(p[j]);
        out << ',' << format_double(conditions::hamiltonian(mode, s.x, p, s.u, s.t));
      } else {
        for (int j = 0; j <= problem.n; ++j) out << ',';
      }
      out << '\n';
    }
  }
}

LoadedTrajectory read_trajectory_csv(std::istream& in, const HybridProblem& problem) {
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw FormatError(std::string("unexpected end of file before ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next("header");
  if (line != kMagic) throw FormatError("not a trajectory file (missing '" + std::string(kMagic) + "')");
  next("header");
  const std::string name = meta_value(line, "problem");
  if (name != problem.name) throw FormatError("trajectory belongs to '" + name + "', not '" + problem.name + "'");
  next("header");
  const long n = parse_count(meta_value(line, "n"));
  next("header");
  const long m = parse_count(meta_value(line, "m"));
  if (n != problem.n || m != problem.m) throw FormatError("state or control dimension differs from the problem");
  next("header");
  const std::string costate = meta_value(line, "costate");
  if (costate != "yes" && costate != "no") throw FormatError("costate flag must be yes or no");
  const bool has_p = costate == "yes";
  next("header");
  const long rows = parse_count(meta_value(line, "rows"));
  do {
    next("column header");
  } while (line.rfind("#", 0) == 0);
  if (line != header_row(problem.n, problem.m)) throw FormatError("unexpected column header '" + line + "'");

  LoadedTrajectory out;
  if (has_p) out.adjoint.emplace();
  const std::size_t width = 3 + 2 * static_cast<std::size_t>(n) + static_cast<std::size_t>(m);
  long count = 0;
  double t_prev = -INFINITY;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = "row " + std::to_string(count + 1);
    if (cells.size() != width) throw FormatError(where + ": expected " + std::to_string(width) + " columns");
    ArcSample s;
    s.t = parse_double(cells[0]);
    const long mode = parse_count(cells[1]);
    s.x.resize(n);
    s.u.resize(m);
    for (long j = 0; j < n; ++j) s.x[j] = parse_double(cells[2 + j]);
    for (long j = 0; j < m; ++j) s.u[j] = parse_double(cells[2 + n + j]);
    Vec p(n);
    for (long j = 0; j < n; ++j) {
      const auto& c = cells[2 + n + m + j];
      if (has_p) {
        p[j] = parse_double(c);
      } else if (!c.empty()) {
        throw FormatError(where + ": costate declared absent but p column is filled");
      }
    }

    auto& arcs = out.trajectory.arcs;
    const bool new_arc = arcs.empty() || arcs.back().mode != mode;
    if (new_arc) {
      const long expected = arcs.empty() ? 0 : arcs.back().mode + 1;
      if (mode != expected || mode >= static_cast<long>(problem.modes.size())) {
        throw FormatError(where + ": mode " + std::to_string(mode) + " out of sequence");
      }
      if (!arcs.empty() && s.t != t_prev) throw FormatError(where + ": switch rows must share their time");
      Arc arc;
      arc.mode = static_cast<int>(mode);
      arc.mode_id = problem.modes[static_cast<std::size_t>(mode)].id;
      arcs.push_back(std::move(arc));
      if (has_p) out.adjoint->arcs.emplace_back();
    } else if (!(s.t > t_prev)) {
      throw FormatError(where + ": times must increase within an arc");
    }
    t_prev = s.t;
    arcs.back().samples.push_back(s);
    if (has_p) {
      out.adjoint->arcs.back().t.push_back(s.t);
      out.adjoint->arcs.back().p.push_back(p);
    }
    ++count;
  }
  if (count != rows) {
    throw FormatError("declared " + std::to_string(rows) + " rows but found " + std::to_string(count) +
                      " (truncated file?)");
  }
  if (out.trajectory.arcs.empty()) throw FormatError("trajectory has no samples");

  auto& traj = out.trajectory;
  for (auto& arc : traj.arcs) {
    arc.t_start = arc.samples.front().t;
    arc.t_end = arc.samples.back().t;
    // Event-truncated last steps are short, so the widest interval is the step.
    arc.step = 0.0;
    for (std::size_t k = 1; k < arc.samples.size(); ++k) {
      arc.step = std::max(arc.step, arc.samples[k].t - arc.samples[k - 1].t);
      // Stage controls as a replay of the sampled control would produce them.
      const Vec& ua = arc.samples[k - 1].u;
      const Vec& ub = arc.samples[k].u;
      const Vec mid = 0.5 * (ua + ub);
      arc.stage_controls.push_back({ua, mid, mid, ub});
    }
  }
  for (std::size_t j = 0; j + 1 < traj.arcs.size(); ++j) {
    const auto& a = traj.arcs[j].samples.back();
    const auto& b = traj.arcs[j + 1].samples.front();
    SwitchRecord sw;
    sw.index = static_cast<int>(j);
    sw.t = a.t;
    sw.x_minus = a.x;
    sw.x_plus = b.x;
    sw.u_minus = a.u;
    sw.u_plus = b.u;
    const auto g = problem.guards[j].gradient(a.x, a.t);
    sw.dn = SpaceTimeCovector{CotangentVec{problem.point(a.x), g.dx}, g.dt};
    sw.jump_covector = sw.dn;
    traj.switches.push_back(sw);
  }
  return out;
}

}  // namespace hmp::io
