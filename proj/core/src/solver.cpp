#include "hmp/solver.hpp"

#include "hmp/errors.hpp"
#include "parallel.hpp"

#include <cmath>
#include <sstream>

namespace hmp {

Eigen::VectorXd ResidualVector::stacked() const {
  Eigen::VectorXd r(terminal.size() + guards.size() + hjumps.size());
  r << terminal, guards, hjumps;
  return r;
}

double ResidualVector::inf_norm() const {
  const Eigen::VectorXd r = stacked();
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

namespace solver {

namespace {

Vec minimize_for(const Mode& mode, const Vec& x, const Vec& p, const ControlSet& set, double t) {
  if (mode.hamiltonian_minimizer) return set.clamp(mode.hamiltonian_minimizer(x, p, t, set));
  return conditions::minimize_hamiltonian(mode, x, p, set, t);
}

int unknown_count(const HybridProblem& p, const SolveOptions& o) {
  const int L = p.num_switches();
  return p.n + L + (o.eliminate_mu ? 0 : L);
}

Eigen::VectorXd pack(const HybridProblem& p, const ShootingState& z, const SolveOptions& o) {
  const int L = p.num_switches();
  Eigen::VectorXd v(unknown_count(p, o));
  for (int i = 0; i < p.n; ++i) v[i] = z.p0[i];
  for (int i = 0; i < L; ++i) v[p.n + i] = z.switch_times[i];
  if (!o.eliminate_mu) {
    for (int i = 0; i < L; ++i) v[p.n + L + i] = z.mus[i];
  }
  return v;
}

ShootingState unpack(const HybridProblem& p, const Eigen::VectorXd& v, const SolveOptions& o,
                     const ShootingState& like) {
  const int L = p.num_switches();
  ShootingState z = like;
  z.p0 = v.head(p.n);
  for (int i = 0; i < L; ++i) z.switch_times[i] = v[p.n + i];
  if (!o.eliminate_mu) {
    for (int i = 0; i < L; ++i) z.mus[i] = v[p.n + L + i];
  }
  return z;
}

void check_shape(const HybridProblem& p, const ShootingState& z) {
  const auto L = static_cast<std::size_t>(p.num_switches());
  if (z.p0.size() != p.n) throw ContractError("initial costate has the wrong dimension");
  if (z.switch_times.size() != L) throw ContractError("expected one switching time per guard");
  if (z.mus.size() != L) throw ContractError("expected one multiplier per guard");
}

SpaceTimeCovector jump_covector(const HybridProblem& p, int i, const Vec& xm, double t, const SolveOptions& o) {
  if (uses_value_differential(p.variant) && !o.value_differentials.empty()) {
    if (o.value_differentials.size() != static_cast<std::size_t>(p.num_switches())) {
      throw ContractError("expected one value differential per guard");
    }
    return o.value_differentials[i];
  }
  const Guard& g = p.guards[i];
  const GuardGradient gg = g.gradient(xm, t);
  return geometry::normal_covector(gg.dx, g.time_varying ? gg.dt : 0.0, p.metric, p.point(xm),
                                   o.normalize_normals);
}

}  // namespace

bool admissible(const HybridProblem& problem, const ShootingState& z) {
  double prev = problem.t0;
  for (double t : z.switch_times) {
    if (!std::isfinite(t) || !(t > prev)) return false;
    prev = t;
  }
  return prev < problem.tf || z.switch_times.empty();
}

ShootingEvaluation shoot(const HybridProblem& problem, const ShootingState& z, const SolveOptions& opts) {
  check_shape(problem, z);
  if (!admissible(problem, z)) {
    throw AdmissibilityError("switching times must increase strictly inside (t0, tf)");
  }
  if (!z.p0.allFinite()) throw ContractError("initial costate must be finite");
  const int L = problem.num_switches();
  FlowOptions fo;
  fo.step = flow::default_step(problem.t0, problem.tf, opts.step);
  fo.control_bounds = problem.control_set;

  ShootingEvaluation ev;
  ev.residual.guards.resize(L);
  ev.residual.hjumps.resize(opts.eliminate_mu ? 0 : L);
  ChartPoint x = problem.x0;
  Vec p = z.p0;
  double t = problem.t0;
  for (int i = 0; i <= L; ++i) {
    const Mode& mode = problem.modes[i];
    const ControlSet& set = problem.control_set;
    const ControlLaw law = [&mode, &set](double tt, const Vec& xx, const Vec* pp) {
      return minimize_for(mode, xx, *pp, set, tt);
    };
    const double t_end = i < L ? z.switch_times[i] : problem.tf;
    Arc arc = flow::integrate_coupled(mode, x, p, law, t, t_end, fo);
    arc.mode = i;
    AdjointArc adj;
    for (const auto& s : arc.samples) adj.t.push_back(s.t);
    adj.p = arc.costate;
    const Vec xm = arc.x_end();
    const Vec pm = arc.costate.back();
    const Vec um = arc.samples.back().u;
    ev.trajectory.arcs.push_back(std::move(arc));
    ev.adjoint.arcs.push_back(std::move(adj));
    if (i == L) break;

    const Mode& next = problem.modes[i + 1];
    const Jump& jump = problem.jumps[i];
    ev.residual.guards[i] = problem.guards[i].value(xm, t_end);
    SwitchRecord sw;
    sw.index = i;
    sw.t = t_end;
    sw.x_minus = xm;
    sw.u_minus = um;
    sw.x_plus = jump.apply(xm, t_end);
    if (!sw.x_plus.allFinite()) throw BlowUpError("post-jump state is not finite", t_end);
    const GuardGradient gg = problem.guards[i].gradient(xm, t_end);
    sw.dn = geometry::normal_covector(gg.dx, problem.guards[i].time_varying ? gg.dt : 0.0, problem.metric,
                                      problem.point(xm), opts.normalize_normals);
    sw.jump_covector = jump_covector(problem, i, xm, t_end, opts);
    Vec pp;
    Vec up;
    if (opts.eliminate_mu) {
      const auto fj = conditions::adjoint_jump_forward(problem.variant, CotangentVec{problem.point(xm), pm}, t_end,
                                                       sw.jump_covector, jump, mode, next, um, set);
      sw.mu = fj.mu;
      pp = fj.p_plus.comps;
      up = fj.u_plus;
    } else {
      const Mat dz = jump.jacobian(xm, t_end);
      if (!(conditions::condition_number(dz) < 1e12)) {
        throw NonInvertibleJumpError("jump Jacobian is numerically singular");
      }
      sw.mu = z.mus[i];
      pp = dz.transpose().partialPivLu().solve(pm - sw.mu * sw.jump_covector.dn_x.comps);
      up = minimize_for(next, sw.x_plus, pp, set, t_end);
    }
    sw.u_plus = up;
    sw.dstar_t_zeta = jump.time_varying ? pp.dot(jump.time_derivative(xm, t_end)) : 0.0;
    const double ct = uses_time_normal(problem.variant) ? sw.jump_covector.dn_t : 0.0;
    if (problem.variant == TheoremVariant::Combined) sw.dstar_t_v = sw.jump_covector.dn_t;
    sw.dh_expected = conditions::hamiltonian_jump_expected(problem.variant, sw.mu, ct, sw.dstar_t_zeta,
                                                           sw.dstar_t_v);
    sw.dh_measured =
        conditions::hamiltonian(mode, xm, pm, um, t_end) - conditions::hamiltonian(next, sw.x_plus, pp, up, t_end);
    if (!opts.eliminate_mu) ev.residual.hjumps[i] = sw.dh_measured - sw.dh_expected;
    ev.trajectory.switches.push_back(sw);
    x = problem.point(sw.x_plus);
    p = pp;
    t = t_end;
  }
  const Vec& xf = ev.trajectory.final_state();
  ev.residual.terminal = ev.adjoint.arcs.back().p.back() - problem.terminal_cost.gradient(xf);
  if (!ev.residual.stacked().allFinite()) throw NumericalError("shooting residual is not finite");
  return ev;
}

ResidualVector shooting_residual(const HybridProblem& problem, const ShootingState& z, const SolveOptions& opts) {
  return shoot(problem, z, opts).residual;
}

ShootingState default_guess(const HybridProblem& problem) {
  if (problem.default_guess) return *problem.default_guess;
  const int L = problem.num_switches();
  ShootingState z;
  z.p0 = Vec::Zero(problem.n);
  for (int i = 0; i < L; ++i) {
    z.switch_times.push_back(problem.t0 + (problem.tf - problem.t0) * (i + 1) / (L + 1));
  }
  z.mus.assign(L, 0.0);
  return z;
}

namespace {

SolveResult newton(const HybridProblem& problem, const ShootingState& guess, const SolveOptions& opts) {
  check_shape(problem, guess);
  if (!admissible(problem, guess)) {
    throw AdmissibilityError("initial guess: switching times must increase strictly inside (t0, tf)");
  }
  if (!(opts.tol > 0.0) || opts.max_iter < 0) throw ContractError("solver tolerances must be positive");

  ShootingState z = guess;
  Eigen::VectorXd v = pack(problem, z, opts);
  ShootingEvaluation ev = shoot(problem, z, opts);
  Eigen::VectorXd r = ev.residual.stacked();
  const int dim = static_cast<int>(v.size());
  SolveResult out;
  int it = 0;
  for (;; ++it) {
    out.residual_history.push_back(r.size() ? r.cwiseAbs().maxCoeff() : 0.0);
    if (out.residual_history.back() <= opts.tol) break;
    if (it >= opts.max_iter) {
      std::ostringstream msg;
      msg << "max-iterations: residual " << out.residual_history.back() << " after " << it << " iterations";
      throw MaxIterationsError(msg.str());
    }

    Eigen::MatrixXd jac(r.size(), dim);
    detail::parallel_for(dim, [&](int j) {
      double h = opts.fd_step * (1.0 + std::abs(v[j]));
      Eigen::VectorXd w = v;
      w[j] += h;
      ShootingState zj = unpack(problem, w, opts, z);
      if (!admissible(problem, zj)) {
        h = -h;
        w[j] = v[j] + h;
        zj = unpack(problem, w, opts, z);
      }
      jac.col(j) = (shooting_residual(problem, zj, opts).stacked() - r) / h;
    });
    if (!jac.allFinite()) throw SingularJacobianError("singular-jacobian: non-finite Jacobian entries");
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    if (qr.rank() < dim) {
      std::ostringstream msg;
      msg << "singular-jacobian: rank " << qr.rank() << " of " << dim << " at iteration " << it;
      throw SingularJacobianError(msg.str());
    }
    const Eigen::VectorXd d = qr.solve(-r);
    if (!d.allFinite()) throw SingularJacobianError("singular-jacobian: Newton step is not finite");

    const double phi = 0.5 * r.squaredNorm();
    double alpha = 1.0;
    while (true) {
      const Eigen::VectorXd w = v + alpha * d;
      const ShootingState zt = unpack(problem, w, opts, z);
      if (admissible(problem, zt)) {
        try {
          ShootingEvaluation et = shoot(problem, zt, opts);
          const Eigen::VectorXd rt = et.residual.stacked();
          if (0.5 * rt.squaredNorm() <= (1.0 - 2.0 * opts.armijo * alpha) * phi) {
            v = w;
            z = zt;
            r = rt;
            ev = std::move(et);
            break;
          }
        } catch (const NumericalError&) {
          // rejected trial point
        }
      }
      alpha *= 0.5;
      if (alpha < opts.min_alpha) {
        std::ostringstream msg;
        msg << "line-search-stall: no sufficient decrease at iteration " << it << " (residual "
            << out.residual_history.back() << ")";
        throw LineSearchStallError(msg.str());
      }
    }
  }
  if (opts.eliminate_mu) {
    for (std::size_t i = 0; i < ev.trajectory.switches.size(); ++i) z.mus[i] = ev.trajectory.switches[i].mu;
  }
  out.state = z;
  out.iterations = it;
  out.trajectory = std::move(ev.trajectory);
  out.adjoint = std::move(ev.adjoint);
  out.cost = problem.terminal_cost.value(out.trajectory.final_state());
  out.report = conditions::check_trajectory(problem, out.trajectory, out.adjoint, opts.check);
  return out;
}

}  // namespace

SolveResult solve(const HybridProblem& problem, const ShootingState& guess, const SolveOptions& opts) {
  if (!uses_value_differential(problem.variant) || !opts.value_differentials.empty() ||
      problem.num_switches() == 0) {
    return newton(problem, guess, opts);
  }
  // Two phases: the guard normal first, then the value differential sampled
  // around the crossings found.
  SolveResult first = newton(problem, guess, opts);
  SolveOptions second = opts;
  for (const auto& sw : first.trajectory.switches) {
    oracle::SurfaceGrid grid = opts.surface;
    grid.switch_index = sw.index;
    grid.center_x = sw.x_minus;
    grid.center_t = sw.t;
    if (grid.half_width < 1) grid.half_width = 1;
    const ValueSurface surf = oracle::value_surface_oracle(problem, grid, opts.surface_oracle);
    const DvEstimate dv = conditions::dv_covector(surf, Vec::Zero(surf.dim()));
    second.value_differentials.push_back(
        SpaceTimeCovector{CotangentVec{problem.point(sw.x_minus), dv.dv_x}, dv.dv_t});
  }
  SolveResult out = newton(problem, first.state, second);
  out.iterations += first.iterations;
  return out;
}

}  // namespace solver
}  // namespace hmp
