#include "hmp/oracle.hpp"

#include "hmp/errors.hpp"
#include "optim.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace hmp {

int PiecewiseControl::segment_of(double t) const {
  const double width = (tf - t0) / segments;
  const int k = static_cast<int>(std::floor((t - t0) / width));
  return std::clamp(k, 0, segments - 1);
}

std::vector<double> PiecewiseControl::breakpoints() const {
  std::vector<double> out;
  for (int k = 1; k < segments; ++k) out.push_back(t0 + (tf - t0) * k / segments);
  return out;
}

std::vector<ControlLaw> PiecewiseControl::laws() const {
  std::vector<ControlLaw> out;
  for (const auto& table : values) {
    PiecewiseControl self = *this;
    out.push_back([self, table](double t, const Vec&, const Vec*) -> Vec {
      return table.row(self.segment_of(t)).transpose();
    });
  }
  return out;
}

Eigen::VectorXd PiecewiseControl::flatten() const {
  Eigen::Index size = 0;
  for (const auto& v : values) size += v.size();
  Eigen::VectorXd z(size);
  Eigen::Index k = 0;
  for (const auto& v : values) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) z[k++] = v(i, j);
    }
  }
  return z;
}

void PiecewiseControl::unflatten(const Eigen::VectorXd& z) {
  Eigen::Index k = 0;
  for (auto& v : values) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = z[k++];
    }
  }
}

namespace oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double oracle_step(const HybridProblem& p, double step) { return step > 0.0 ? step : 5e-3 * (p.tf - p.t0); }

PiecewiseControl blank_control(const HybridProblem& p, int segments) {
  PiecewiseControl c;
  c.segments = segments;
  c.t0 = p.t0;
  c.tf = p.tf;
  c.values.assign(p.modes.size(), Eigen::MatrixXd::Zero(segments, p.m));
  return c;
}

// Box reparametrisation u = mid + half sin(theta) keeps the polish unconstrained.
struct BoxMap {
  Eigen::VectorXd mid;
  Eigen::VectorXd half;

  BoxMap(const HybridProblem& p, Eigen::Index size) : mid(size), half(size) {
    for (Eigen::Index k = 0; k < size; ++k) {
      const int j = static_cast<int>(k % p.m);
      mid[k] = 0.5 * (p.control_set.lower[j] + p.control_set.upper[j]);
      half[k] = 0.5 * (p.control_set.upper[j] - p.control_set.lower[j]);
    }
  }
  Eigen::VectorXd to_u(const Eigen::VectorXd& th) const {
    return mid + half.cwiseProduct(th.array().sin().matrix());
  }
  Eigen::VectorXd to_theta(const Eigen::VectorXd& u) const {
    Eigen::VectorXd th(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const double s = half[k] > 0.0 ? (u[k] - mid[k]) / half[k] : 0.0;
      th[k] = std::asin(std::clamp(s, -1.0, 1.0));
    }
    return th;
  }
};

// Unconstrained polish of a flattened control vector.
Eigen::VectorXd polish(const HybridProblem& p, const PiecewiseControl& shape, const Eigen::VectorXd& u0,
                       const std::function<double(const PiecewiseControl&)>& cost, int max_iter = 200) {
  const BoxMap box(p, u0.size());
  PiecewiseControl work = shape;
  auto f = [&](const Eigen::VectorXd& th) {
    work.unflatten(box.to_u(th));
    return cost(work);
  };
  detail::BfgsOptions bo;
  bo.max_iter = max_iter;
  bo.gtol = 1e-10;
  bo.fd_step = 1e-7;
  const auto r = detail::bfgs(f, box.to_theta(u0), bo);
  return box.to_u(r.x);
}

// Golden-section pass over every coordinate within one grid spacing.
void refine(const HybridProblem& p, PiecewiseControl& c, double& best, double spacing_scale,
            const std::function<double(const PiecewiseControl&)>& cost) {
  Eigen::VectorXd z = c.flatten();
  PiecewiseControl work = c;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const int j = static_cast<int>(k % p.m);
    const double lo = p.control_set.lower[j];
    const double hi = p.control_set.upper[j];
    const double d = spacing_scale * (hi - lo);
    const double a = std::max(lo, z[k] - d);
    const double b = std::min(hi, z[k] + d);
    Eigen::VectorXd trial = z;
    const auto r = detail::golden_section(
        [&](double s) {
          trial[k] = s;
          work.unflatten(trial);
          return cost(work);
        },
        a, b, 1e-10);
    if (r.fx < best - 1e-14 * (1.0 + std::abs(best))) {
      z[k] = r.x;
      best = r.fx;
    }
  }
  c.unflatten(z);
}

}  // namespace

double evaluate(const HybridProblem& problem, const PiecewiseControl& control, double step,
                HybridTrajectory* out) {
  FlowOptions opts;
  opts.step = oracle_step(problem, step);
  opts.breakpoints = control.breakpoints();
  try {
    HybridTrajectory traj = flow::hybrid_flow(problem, control.laws(), problem.num_switches(), opts);
    if (static_cast<int>(traj.switches.size()) != problem.num_switches()) return kInf;
    const double c = problem.terminal_cost.value(traj.final_state());
    if (out) *out = std::move(traj);
    return std::isfinite(c) ? c : kInf;
  } catch (const NumericalError&) {
    return kInf;
  } catch (const GeometryError&) {
    return kInf;
  }
}

OracleSolution direct_oracle(const HybridProblem& problem, int segments, int grid_points,
                             const OracleOptions& opts) {
  if (segments < 1 || segments > kMaxSegments) {
    throw ContractError("oracle budget: segments per arc must lie in [1, " + std::to_string(kMaxSegments) + "]");
  }
  if (grid_points < 2 || grid_points > kMaxGridPoints) {
    throw ContractError("oracle budget: control grid points must lie in [2, " + std::to_string(kMaxGridPoints) +
                        "]");
  }
  if (problem.m < 1 || problem.m > kMaxControlDim) {
    throw ContractError("oracle budget: control dimension must lie in [1, " + std::to_string(kMaxControlDim) + "]");
  }
  if (opts.restarts < 1) throw ContractError("oracle needs at least one restart");

  const int m = problem.m;
  const int vars = static_cast<int>(problem.modes.size()) * segments * m;
  const int G = grid_points;
  auto grid_value = [&](int k, int g) {
    const int j = k % m;
    const double lo = problem.control_set.lower[j];
    const double hi = problem.control_set.upper[j];
    return lo + (hi - lo) * g / (G - 1);
  };
  const PiecewiseControl shape = blank_control(problem, segments);
  const double step = oracle_step(problem, opts.step);
  std::atomic<long> evals{0};
  auto cost = [&](const PiecewiseControl& c) {
    ++evals;
    return evaluate(problem, c, step);
  };
  auto decode = [&](const std::vector<int>& idx) {
    PiecewiseControl c = shape;
    Eigen::VectorXd z(vars);
    for (int k = 0; k < vars; ++k) z[k] = grid_value(k, idx[k]);
    c.unflatten(z);
    return c;
  };

  OracleSolution sol;
  sol.segments = segments;
  sol.grid_points = G;
  const double combos = std::pow(static_cast<double>(G), vars);
  sol.exhaustive = combos <= 1e6;

  std::vector<int> best_idx(vars, (G - 1) / 2);
  double best = kInf;
  if (sol.exhaustive) {
    // Split on the first variable; each chunk enumerates the rest in order.
    std::vector<double> chunk_best(G, kInf);
    std::vector<std::vector<int>> chunk_idx(G);
    detail::parallel_for(G, [&](int g0) {
      std::vector<int> idx(vars, 0);
      idx[0] = g0;
      chunk_idx[g0] = idx;
      while (true) {
        const double c = cost(decode(idx));
        if (c < chunk_best[g0]) {
          chunk_best[g0] = c;
          chunk_idx[g0] = idx;
        }
        int k = vars - 1;
        while (k >= 1 && ++idx[k] == G) idx[k--] = 0;
        if (k < 1) break;
      }
    });
    for (int g = 0; g < G; ++g) {
      if (chunk_best[g] < best) {
        best = chunk_best[g];
        best_idx = chunk_idx[g];
      }
    }
  } else {
    std::vector<double> run_best(opts.restarts, kInf);
    std::vector<std::vector<int>> run_idx(opts.restarts);
    detail::parallel_for(opts.restarts, [&](int r) {
      std::vector<int> idx(vars, (G - 1) / 2);
      if (r > 0) {
        std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(r));
        std::uniform_int_distribution<int> pick(0, G - 1);
        for (auto& v : idx) v = pick(rng);
      }
      double cur = cost(decode(idx));
      for (int sweep = 0; sweep < 100; ++sweep) {
        bool improved = false;
        for (int k = 0; k < vars; ++k) {
          const int keep = idx[k];
          int arg = keep;
          for (int g = 0; g < G; ++g) {
            if (g == keep) continue;
            idx[k] = g;
            const double c = cost(decode(idx));
            if (c < cur) {
              cur = c;
              arg = g;
              improved = true;
            }
          }
          idx[k] = arg;
        }
        if (!improved) break;
      }
      run_best[r] = cur;
      run_idx[r] = idx;
    });
    for (int r = 0; r < opts.restarts; ++r) {
      if (run_best[r] < best) {
        best = run_best[r];
        best_idx = run_idx[r];
      }
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("oracle found no control traversing the full mode sequence");
  }

  PiecewiseControl ctrl = decode(best_idx);
  refine(problem, ctrl, best, 1.0 / (G - 1), cost);
  if (opts.polish) {
    PiecewiseControl trial = ctrl;
    trial.unflatten(polish(problem, shape, ctrl.flatten(), cost));
    const double c = cost(trial);
    if (c < best) {
      best = c;
      ctrl = trial;
    }
  }
  sol.control = ctrl;
  sol.cost = evaluate(problem, ctrl, step, &sol.trajectory);

  if (opts.gradient) {
    const int n = problem.n;
    sol.cost_gradient_x0 = Vec::Zero(n);
    const Eigen::VectorXd u_star = ctrl.flatten();
    std::vector<double> vals(2 * n, 0.0);
    detail::parallel_for(2 * n, [&](int k) {
      HybridProblem shifted = problem;
      const int i = k / 2;
      const double h = (k % 2 == 0 ? 1.0 : -1.0) * opts.fd_step_x0;
      shifted.x0.coords[i] += h;
      auto c_shift = [&](const PiecewiseControl& c) {
        ++evals;
        return evaluate(shifted, c, step);
      };
      PiecewiseControl local = shape;
      local.unflatten(u_star);
      double v = c_shift(local);
      local.unflatten(polish(shifted, shape, u_star, c_shift));
      v = std::min(v, c_shift(local));
      vals[k] = v;
    });
    for (int i = 0; i < n; ++i) {
      sol.cost_gradient_x0[i] = (vals[2 * i] - vals[2 * i + 1]) / (2.0 * opts.fd_step_x0);
    }
  }
  sol.evaluations = evals.load();
  return sol;
}

namespace {

struct SurfaceFrame {
  Mat basis;   // (n + 1) x k
  Vec normal;  // (n + 1)
  std::vector<int> active;
};

SurfaceFrame surface_frame(const HybridProblem& problem, const Guard& guard, const Vec& x, double t) {
  const int n = problem.n;
  const std::set<int> acc(problem.cost_accumulators.begin(), problem.cost_accumulators.end());
  const GuardGradient gg = guard.gradient(x, t);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n + 1);
  SurfaceFrame fr;
  for (int i = 0; i < n; ++i) {
    if (acc.count(i)) continue;
    fr.active.push_back(i);
    a[i] = gg.dx[i];
  }
  if (guard.time_varying) {
    fr.active.push_back(n);
    a[n] = gg.dt;
  }
  const double an = a.norm();
  if (!(an > 1e-12)) throw DegenerateGuardError("value surface: guard differential vanishes");
  a /= an;
  std::vector<Eigen::VectorXd> cols;
  for (int i : fr.active) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
    e[i] = 1.0;
    e -= e.dot(a) * a;
    for (const auto& c : cols) e -= e.dot(c) * c;
    if (e.norm() > 1e-8) cols.push_back(e / e.norm());
  }
  fr.basis = Mat::Zero(n + 1, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) fr.basis.col(static_cast<Eigen::Index>(j)) = cols[j];
  fr.normal = a;
  return fr;
}

// Newton along the space-time normal onto the zero set of the guard.
void project_onto_guard(const Guard& guard, const Vec& normal, Vec& x, double& t) {
  const int n = static_cast<int>(x.size());
  for (int it = 0; it < 50; ++it) {
    const double g = guard.value(x, t);
    if (std::abs(g) <= 1e-12) return;
    const GuardGradient gg = guard.gradient(x, t);
    const double slope = gg.dx.dot(normal.head(n)) + gg.dt * normal[n];
    if (std::abs(slope) < 1e-14) break;
    const double s = -g / slope;
    x += s * normal.head(n);
    t += s * normal[n];
  }
  if (!(std::abs(guard.value(x, t)) <= 1e-10)) {
    throw NumericalError("value surface: projection onto the guard failed");
  }
}

}  // namespace

ValueSurface value_surface_oracle(const HybridProblem& problem, const SurfaceGrid& grid,
                                  const OracleOptions& opts) {
  const int L = problem.num_switches();
  if (grid.switch_index < 0 || grid.switch_index >= L) throw ContractError("value surface: no such switch");
  if (!(grid.spacing > 0.0) || grid.half_width < 0) throw ContractError("value surface: bad grid");
  if (grid.segments < 1 || grid.segments > kMaxSegments) throw ContractError("value surface: bad segment count");
  if (grid.center_x.size() != problem.n) throw ContractError("value surface: centre has the wrong dimension");
  if (problem.m > kMaxControlDim) throw ContractError("value surface: control dimension too large");

  const Guard& guard = problem.guards[grid.switch_index];
  const int n = problem.n;
  Vec cx = grid.center_x;
  double ct = grid.center_t;
  const SurfaceFrame fr0 = surface_frame(problem, guard, cx, ct);
  project_onto_guard(guard, fr0.normal, cx, ct);
  const SurfaceFrame fr = surface_frame(problem, guard, cx, ct);
  const int k = static_cast<int>(fr.basis.cols());
  const std::set<int> acc(problem.cost_accumulators.begin(), problem.cost_accumulators.end());

  ValueSurface surf;
  surf.n = n;
  surf.time_varying = guard.time_varying;
  surf.center_x = cx;
  surf.center_t = ct;
  surf.basis = fr.basis;
  surf.normal = fr.normal;
  surf.spacing = grid.spacing;
  surf.half_width = grid.half_width;

  // Grid nodes, centre first and then by growing L1 distance.
  std::vector<std::vector<int>> nodes;
  {
    std::vector<int> idx(k, -grid.half_width);
    while (true) {
      nodes.push_back(idx);
      int j = k - 1;
      while (j >= 0 && ++idx[j] > grid.half_width) idx[j--] = -grid.half_width;
      if (j < 0) break;
    }
    std::stable_sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) {
      int la = 0, lb = 0;
      for (int v : a) la += std::abs(v);
      for (int v : b) lb += std::abs(v);
      return la < lb;
    });
  }

  const double step = oracle_step(problem, opts.step);
  const PiecewiseControl shape = blank_control(problem, grid.segments);
  const int sw = grid.switch_index;
  std::vector<std::pair<std::vector<int>, Eigen::VectorXd>> solved;

  for (const auto& idx : nodes) {
    ValueSurface::Sample smp;
    smp.index = idx;
    smp.y = Vec::Zero(k);
    for (int j = 0; j < k; ++j) smp.y[j] = idx[j] * grid.spacing;
    Eigen::VectorXd pt = Eigen::VectorXd::Zero(n + 1);
    pt.head(n) = cx;
    pt[n] = ct;
    for (int j = 0; j < k; ++j) pt += smp.y[j] * fr.basis.col(j);
    Vec x = pt.head(n);
    double t = pt[n];
    project_onto_guard(guard, fr.normal, x, t);
    smp.x = x;
    smp.t = t;

    auto miss = [&](const HybridTrajectory& tr) {
      const auto& s = tr.switches[sw];
      double r = 0.0;
      for (int i = 0; i < n; ++i) {
        if (acc.count(i)) continue;
        r += (s.x_minus[i] - x[i]) * (s.x_minus[i] - x[i]);
      }
      if (guard.time_varying) r += (s.t - t) * (s.t - t);
      return r;
    };
    double weight = 1.0;
    auto objective = [&](const PiecewiseControl& c) {
      HybridTrajectory tr;
      const double h = evaluate(problem, c, step, &tr);
      if (!std::isfinite(h)) return kInf;
      return h + weight * miss(tr);
    };

    Eigen::VectorXd u;
    if (solved.empty()) {
      // Cold start: coarse coordinate descent on a lightly penalised objective.
      weight = 1e2;
      PiecewiseControl c = shape;
      const int G = 11;
      Eigen::VectorXd z = Eigen::VectorXd::Zero(shape.flatten().size());
      for (Eigen::Index q = 0; q < z.size(); ++q) {
        const int j = static_cast<int>(q % problem.m);
        z[q] = 0.5 * (problem.control_set.lower[j] + problem.control_set.upper[j]);
      }
      c.unflatten(z);
      double cur = objective(c);
      for (int sweep = 0; sweep < 30; ++sweep) {
        bool improved = false;
        for (Eigen::Index q = 0; q < z.size(); ++q) {
          const int j = static_cast<int>(q % problem.m);
          const double lo = problem.control_set.lower[j];
          const double hi = problem.control_set.upper[j];
          double arg = z[q];
          for (int g = 0; g < G; ++g) {
            Eigen::VectorXd trial = z;
            trial[q] = lo + (hi - lo) * g / (G - 1);
            c.unflatten(trial);
            const double v = objective(c);
            if (v < cur) {
              cur = v;
              arg = trial[q];
              improved = true;
            }
          }
          z[q] = arg;
        }
        if (!improved) break;
      }
      u = z;
    } else {
      // Warm start from the nearest node solved so far.
      int best_d = std::numeric_limits<int>::max();
      for (const auto& [other, uo] : solved) {
        int d = 0;
        for (int j = 0; j < k; ++j) d += std::abs(other[j] - idx[j]);
        if (d < best_d) {
          best_d = d;
          u = uo;
        }
      }
    }
    for (double w : {1e2, 1e4, 1e6}) {
      weight = w;
      u = polish(problem, shape, u, objective, 400);
    }
    weight = 1e6;
    PiecewiseControl c = shape;
    c.unflatten(u);
    HybridTrajectory tr;
    const double h = evaluate(problem, c, step, &tr);
    if (std::isfinite(h)) {
      smp.residual = std::sqrt(miss(tr));
      smp.value = h + 1e6 * miss(tr);
      smp.reachable = smp.residual <= 1e-3;
    } else {
      smp.residual = kInf;
      smp.value = kInf;
      smp.reachable = false;
    }
    if (smp.reachable) solved.emplace_back(idx, u);
    surf.samples.push_back(smp);
  }
  return surf;
}

}  // namespace oracle
}  // namespace hmp
