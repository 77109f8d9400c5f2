#include "hmp/conditions.hpp"

#include "hmp/errors.hpp"
#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace hmp {

const ValueSurface::Sample* ValueSurface::find(const std::vector<int>& index) const {
  for (const auto& s : samples) {
    if (s.index == index) return &s;
  }
  return nullptr;
}

namespace conditions {

namespace {

constexpr double kTangential = 1e-8;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Vec minimize_for(const Mode& mode, const Vec& x, const Vec& p, const ControlSet& set, double t) {
  if (mode.hamiltonian_minimizer) return set.clamp(mode.hamiltonian_minimizer(x, p, t, set));
  return minimize_hamiltonian(mode, x, p, set, t);
}

}  // namespace

double hamiltonian(const Mode& mode, const Vec& x, const Vec& p, const Vec& u, double t) {
  return p.dot(mode.f(x, u, t));
}

Vec minimize_hamiltonian(const Mode& mode, const Vec& x, const Vec& p, const ControlSet& set, double t) {
  const int m = set.dim();
  if (m == 0) return Vec(0);
  constexpr int kGrid = 21;
  auto h_of = [&](const Vec& u) { return hamiltonian(mode, x, p, u, t); };

  const Vec spacing = (set.upper - set.lower) / static_cast<double>(kGrid - 1);
  std::vector<int> idx(m, 0);
  Vec u(m);
  Vec best;
  double best_h = std::numeric_limits<double>::infinity();
  // Odometer with the first coordinate most significant, so strict < keeps the
  // lexicographically smallest minimizer.
  while (true) {
    for (int j = 0; j < m; ++j) u[j] = set.lower[j] + idx[j] * spacing[j];
    const double h = h_of(u);
    if (h < best_h) {
      best_h = h;
      best = u;
    }
    int j = m - 1;
    while (j >= 0 && ++idx[j] == kGrid) idx[j--] = 0;
    if (j < 0) break;
  }

  for (int j = 0; j < m; ++j) {
    if (!(spacing[j] > 0.0)) continue;
    const double a = std::max(set.lower[j], best[j] - spacing[j]);
    const double b = std::min(set.upper[j], best[j] + spacing[j]);
    Vec trial = best;
    const auto r = detail::golden_section(
        [&](double s) {
          trial[j] = s;
          return h_of(trial);
        },
        a, b, 1e-10);
    if (r.fx < best_h - 1e-14 * (1.0 + std::abs(best_h))) {
      best[j] = r.x;
      best_h = r.fx;
    }
  }
  return best;
}

double switching_time_sensitivity(const SpaceTimeCovector& dn, const TangentVec& f_minus,
                                  const TangentVec& propagated_delta) {
  const double den = pairing(dn.dn_x, f_minus) + dn.dn_t;
  if (std::abs(den) <= kTangential) {
    throw TangentialCrossingError("switching time sensitivity: flow is tangent to the guard");
  }
  return -pairing(dn.dn_x, propagated_delta) / den;
}

double hamiltonian_jump_expected(TheoremVariant variant, double mu, double dn_t, double dstar_t_zeta_p,
                                 double dstar_t_v) {
  constexpr double eps = 1e-12;
  switch (variant) {
    case TheoremVariant::TimeInvariant:
    case TheoremVariant::InteriorOptimal:
      if (std::abs(dn_t) > eps || std::abs(dstar_t_zeta_p) > eps || std::abs(dstar_t_v) > eps) {
        throw ContractError("time-invariant variant given time-dependent jump data");
      }
      return 0.0;
    case TheoremVariant::TimeVaryingGuard:
      if (std::abs(dstar_t_zeta_p) > eps) {
        throw ContractError("time-varying guard variant given a time-varying jump");
      }
      return -mu * dn_t;
    case TheoremVariant::TimeVaryingJump:
      return -dstar_t_zeta_p - mu * dn_t;
    case TheoremVariant::Combined:
      return -dstar_t_zeta_p - mu * dstar_t_v;
  }
  throw ContractError("unknown variant");
}

double compute_mu(TheoremVariant variant, const Mode& q_minus, const Mode& q_plus, const Jump& jump,
                  const Vec& x_minus, double t_s, const Vec& p_plus, const Vec& u_minus, const Vec& u_plus,
                  const SpaceTimeCovector& c) {
  const Vec x_plus = jump.apply(x_minus, t_s);
  const Mat dz = jump.jacobian(x_minus, t_s);
  const Vec f0 = q_minus.f(x_minus, u_minus, t_s);
  const double h1 = hamiltonian(q_plus, x_plus, p_plus, u_plus, t_s);
  double num = h1 - (dz.transpose() * p_plus).dot(f0);
  if (uses_jump_time_derivative(variant)) num -= p_plus.dot(jump.time_derivative(x_minus, t_s));
  double den = c.dn_x.comps.dot(f0);
  if (uses_time_normal(variant)) den += c.dn_t;
  if (std::abs(den) <= kTangential) {
    throw TangentialCrossingError("jump multiplier undefined: flow tangent to the switching covector");
  }
  return num / den;
}

CotangentVec adjoint_jump_backward(TheoremVariant, const CotangentVec& p_plus, const ChartPoint& x_minus,
                                   double t_s, const SpaceTimeCovector& c, const Jump& jump, double mu) {
  if (c.dn_x.comps.size() != x_minus.coords.size()) throw ContractError("covector dimension mismatch");
  CotangentVec p = geometry::pullback_jump(jump.jacobian(x_minus.coords, t_s), p_plus, x_minus);
  p.comps += mu * c.dn_x.comps;
  return p;
}

double condition_number(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s[s.size() - 1];
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return s[0] / lo;
}

ForwardJump adjoint_jump_forward(TheoremVariant variant, const CotangentVec& p_minus, double t_s,
                                 const SpaceTimeCovector& c, const Jump& jump, const Mode& q_minus,
                                 const Mode& q_plus, const Vec& u_minus, const ControlSet& set,
                                 const Vec* fixed_u_plus) {
  const Vec& x_minus = p_minus.base.coords;
  const Mat dz = jump.jacobian(x_minus, t_s);
  ForwardJump out;
  out.condition_number = condition_number(dz);
  if (!(out.condition_number < 1e12)) {
    throw NonInvertibleJumpError("jump Jacobian is numerically singular at t = " + fmt(t_s));
  }
  const auto lu = dz.partialPivLu();
  const Vec x_plus = jump.apply(x_minus, t_s);
  const Vec f0 = q_minus.f(x_minus, u_minus, t_s);
  const double h0 = p_minus.comps.dot(f0);
  Vec b = Vec::Zero(x_minus.size());
  if (uses_jump_time_derivative(variant)) b = lu.solve(jump.time_derivative(x_minus, t_s));
  const double ct = uses_time_normal(variant) ? c.dn_t : 0.0;
  const Vec& cx = c.dn_x.comps;

  auto solve_for = [&](const Vec& u_plus, double& mu) {
    const Vec a = lu.solve(q_plus.f(x_plus, u_plus, t_s));
    const double den = cx.dot(a - b) + ct;
    if (std::abs(den) <= kTangential) {
      throw TangentialCrossingError("forward costate jump: multiplier equation is degenerate");
    }
    mu = (p_minus.comps.dot(a - b) - h0) / den;
    return Vec(dz.transpose().partialPivLu().solve(p_minus.comps - mu * cx));
  };

  double mu = 0.0;
  Vec u_plus;
  Vec p_plus;
  if (fixed_u_plus) {
    u_plus = *fixed_u_plus;
    p_plus = solve_for(u_plus, mu);
  } else {
    const Vec p_guess = dz.transpose().partialPivLu().solve(p_minus.comps);
    u_plus = minimize_for(q_plus, x_plus, p_guess, set, t_s);
    for (int it = 0; it < 20; ++it) {
      p_plus = solve_for(u_plus, mu);
      const Vec u_new = minimize_for(q_plus, x_plus, p_plus, set, t_s);
      const bool same = inf_norm(u_new - u_plus) <= 1e-12;
      u_plus = u_new;
      if (same) break;
    }
    p_plus = solve_for(u_plus, mu);
  }
  out.p_plus = CotangentVec{ChartPoint{p_minus.base.chart, x_plus}, p_plus};
  out.mu = mu;
  out.u_plus = u_plus;
  return out;
}

AdjointTrajectory backward_adjoint(const HybridProblem& problem, HybridTrajectory& traj) {
  if (traj.arcs.empty() || traj.switches.size() + 1 != traj.arcs.size()) {
    throw ContractError("backward_adjoint: malformed trajectory");
  }
  AdjointTrajectory out;
  out.arcs.resize(traj.arcs.size());
  const Vec& xf = traj.final_state();
  CotangentVec p{problem.point(xf), problem.terminal_cost.gradient(xf)};
  for (std::size_t i = traj.arcs.size(); i-- > 0;) {
    const Arc& arc = traj.arcs[i];
    out.arcs[i] = flow::cotangent_flow(problem.modes[i], arc, p);
    if (i == 0) break;
    SwitchRecord& sw = traj.switches[i - 1];
    const Jump& jump = problem.jumps[i - 1];
    const Vec& p_plus = out.arcs[i].p.front();
    sw.mu = compute_mu(problem.variant, problem.modes[i - 1], problem.modes[i], jump, sw.x_minus, sw.t, p_plus,
                       sw.u_minus, sw.u_plus, sw.jump_covector);
    sw.dstar_t_zeta = jump.time_varying ? p_plus.dot(jump.time_derivative(sw.x_minus, sw.t)) : 0.0;
    if (problem.variant == TheoremVariant::Combined) sw.dstar_t_v = sw.jump_covector.dn_t;
    const double ct = uses_time_normal(problem.variant) ? sw.jump_covector.dn_t : 0.0;
    sw.dh_expected = hamiltonian_jump_expected(problem.variant, sw.mu, ct, sw.dstar_t_zeta,
                                               problem.variant == TheoremVariant::Combined ? ct : 0.0);
    p = adjoint_jump_backward(problem.variant, CotangentVec{problem.point(sw.x_plus), p_plus},
                              problem.point(sw.x_minus), sw.t, sw.jump_covector, jump, sw.mu);
    sw.dh_measured = hamiltonian(problem.modes[i - 1], sw.x_minus, p.comps, sw.u_minus, sw.t) -
                     hamiltonian(problem.modes[i], sw.x_plus, p_plus, sw.u_plus, sw.t);
  }
  return out;
}

HmpReport check_trajectory(const HybridProblem& problem, const HybridTrajectory& traj,
                           const AdjointTrajectory& adjoint, const Tolerances& tol) {
  if (traj.arcs.empty()) throw ContractError("empty trajectory");
  if (adjoint.arcs.size() != traj.arcs.size()) throw ContractError("costate arcs do not match state arcs");
  if (traj.switches.size() + 1 != traj.arcs.size()) throw ContractError("switch records do not match arcs");
  if (traj.arcs.size() > problem.modes.size()) throw ContractError("more arcs than modes");
  for (std::size_t i = 0; i < traj.arcs.size(); ++i) {
    const auto& arc = traj.arcs[i];
    const auto& adj = adjoint.arcs[i];
    if (adj.t.size() != arc.samples.size() || adj.p.size() != arc.samples.size()) {
      throw ContractError("costate samples misaligned with state samples on arc " + std::to_string(i));
    }
    for (std::size_t k = 0; k < adj.t.size(); ++k) {
      if (std::abs(adj.t[k] - arc.samples[k].t) > 1e-12 * (1.0 + std::abs(adj.t[k])) ||
          adj.p[k].size() != problem.n) {
        throw ContractError("costate samples misaligned with state samples on arc " + std::to_string(i));
      }
    }
  }

  HmpReport rep;
  rep.tolerances = tol;
  auto fail = [&](const std::string& msg) { rep.failures.push_back(msg); };

  for (const auto& adj : adjoint.arcs) {
    for (const auto& p : adj.p) rep.max_costate = std::max(rep.max_costate, inf_norm(p));
  }
  const double pscale = 1.0 + rep.max_costate;

  // Adjoint ODE: backward RK4 through the samples from the stored end value.
  for (std::size_t i = 0; i < traj.arcs.size(); ++i) {
    const auto& arc = traj.arcs[i];
    const Mode& mode = problem.modes[i];
    const auto& adj = adjoint.arcs[i];
    Vec lam = adj.p.back();
    double worst = 0.0;
    auto rhs = [&](double t, const Vec& l) {
      const Vec x = flow::state_at(mode, arc, t);
      const Vec u = flow::control_at(arc, t);
      return Vec(-(mode.dfdx(x, u, t).transpose() * l));
    };
    for (std::size_t k = arc.samples.size() - 1; k-- > 0;) {
      const double tb = arc.samples[k + 1].t;
      const double h = arc.samples[k].t - tb;  // negative
      const Vec k1 = rhs(tb, lam);
      const Vec k2 = rhs(tb + 0.5 * h, lam + 0.5 * h * k1);
      const Vec k3 = rhs(tb + 0.5 * h, lam + 0.5 * h * k2);
      const Vec k4 = rhs(tb + h, lam + h * k3);
      lam += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      worst = std::max(worst, inf_norm(lam - adj.p[k]));
    }
    rep.arc_ode_residual.push_back(worst);
    if (!(worst <= tol.ode * pscale)) {
      fail("adjoint ODE residual on arc " + std::to_string(i) + " is " + fmt(worst));
    }
  }

  // Pointwise minimization.
  for (std::size_t i = 0; i < traj.arcs.size(); ++i) {
    const auto& arc = traj.arcs[i];
    const Mode& mode = problem.modes[i];
    for (std::size_t k = 0; k < arc.samples.size(); ++k) {
      const auto& s = arc.samples[k];
      const Vec& p = adjoint.arcs[i].p[k];
      const Vec u_star = minimize_hamiltonian(mode, s.x, p, problem.control_set, s.t);
      const double h_star = hamiltonian(mode, s.x, p, u_star, s.t);
      const double gap = hamiltonian(mode, s.x, p, s.u, s.t) - h_star;
      rep.gap_times.push_back(s.t);
      rep.gaps.push_back(gap);
      rep.max_gap = std::max(rep.max_gap, gap);
    }
  }
  {
    double hscale = 1.0;
    for (std::size_t i = 0; i < traj.arcs.size(); ++i) {
      const auto& s = traj.arcs[i].samples.front();
      hscale = std::max(hscale, std::abs(hamiltonian(problem.modes[i], s.x, adjoint.arcs[i].p.front(), s.u, s.t)));
    }
    if (!(rep.max_gap <= tol.min_gap * hscale)) fail("Hamiltonian minimization gap " + fmt(rep.max_gap));
  }

  // Transversality.
  const Vec dh = problem.terminal_cost.gradient(traj.final_state());
  rep.transversality_residual = inf_norm(adjoint.arcs.back().p.back() - dh);
  if (!(rep.transversality_residual <= tol.transversality * (1.0 + inf_norm(dh)))) {
    fail("transversality residual " + fmt(rep.transversality_residual));
  }

  // Switches.
  for (std::size_t j = 0; j < traj.switches.size(); ++j) {
    const auto& sw = traj.switches[j];
    const auto& before = traj.arcs[j];
    const auto& after = traj.arcs[j + 1];
    const Mode& qm = problem.modes[j];
    const Mode& qp = problem.modes[j + 1];
    const Jump& jump = problem.jumps[j];
    const double t = before.t_end;
    const Vec& xm = before.samples.back().x;
    const Vec& xp = after.samples.front().x;
    const Vec& um = before.samples.back().u;
    const Vec& up = after.samples.front().u;
    const Vec& p_plus = adjoint.arcs[j + 1].p.front();
    const Vec& p_minus = adjoint.arcs[j].p.back();

    SwitchCheck sc;
    sc.index = static_cast<int>(j);
    sc.t = t;
    sc.mu = sw.mu;
    sc.guard_residual = std::abs(problem.guards[j].value(xm, t));
    sc.state_jump_residual = inf_norm(xp - jump.apply(xm, t));
    const Mat dz = jump.jacobian(xm, t);
    sc.jump_condition_number = condition_number(dz);
    const Vec p_recon = dz.transpose() * p_plus + sw.mu * sw.jump_covector.dn_x.comps;
    sc.adjoint_jump_residual = inf_norm(p_minus - p_recon);
    sc.dh_measured = hamiltonian(qm, xm, p_recon, um, t) - hamiltonian(qp, xp, p_plus, up, t);
    const double dstar = jump.time_varying ? p_plus.dot(jump.time_derivative(xm, t)) : 0.0;
    const double ct = uses_time_normal(problem.variant) ? sw.jump_covector.dn_t : 0.0;
    sc.dh_expected = hamiltonian_jump_expected(problem.variant, sw.mu, ct, dstar,
                                               problem.variant == TheoremVariant::Combined ? ct : 0.0);
    sc.dh_residual = std::abs(sc.dh_measured - sc.dh_expected);

    const std::string tag = "switch " + std::to_string(j) + ": ";
    if (!(sc.guard_residual <= tol.guard)) fail(tag + "guard residual " + fmt(sc.guard_residual));
    if (!(sc.state_jump_residual <= tol.jump * (1.0 + inf_norm(xp)))) {
      fail(tag + "state jump residual " + fmt(sc.state_jump_residual));
    }
    if (!(sc.adjoint_jump_residual <= tol.jump * pscale)) {
      fail(tag + "costate jump residual " + fmt(sc.adjoint_jump_residual));
    }
    const double hs = 1.0 + std::abs(hamiltonian(qp, xp, p_plus, up, t));
    if (!(sc.dh_residual <= tol.hamiltonian * hs)) {
      fail(tag + "Hamiltonian jump residual " + fmt(sc.dh_residual));
    }
    rep.switches.push_back(sc);
  }

  if (!(rep.max_costate > tol.nontrivial)) fail("costate vanishes identically");
  rep.pass = rep.failures.empty();
  return rep;
}

int validate_needle(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                    double margin) {
  if (spec.u1.size() != problem.m) throw ContractError("needle control has the wrong dimension");
  if (!problem.control_set.contains(spec.u1, 1e-12)) throw ContractError("needle control is not admissible");
  if (!(spec.epsilon >= 0.0)) throw ContractError("needle width must be non-negative");
  for (std::size_t i = 0; i < traj.arcs.size(); ++i) {
    const auto& arc = traj.arcs[i];
    if (spec.t1 > arc.t_start && spec.t1 < arc.t_end) {
      if (spec.t1 - spec.epsilon <= arc.t_start + margin || spec.t1 >= arc.t_end - margin) {
        throw ContractError("needle window overlaps a switching time or the horizon ends");
      }
      return static_cast<int>(i);
    }
  }
  throw ContractError("needle time is not interior to any arc");
}

TangentVec needle_terminal_variation(const HybridProblem& problem, const HybridTrajectory& traj,
                                     const NeedleSpec& spec) {
  const int i0 = validate_needle(problem, traj, spec, 0.0);
  const Arc& arc = traj.arcs[i0];
  const Mode& mode = problem.modes[i0];
  const Vec x1 = flow::state_at(mode, arc, spec.t1);
  const Vec u0 = flow::control_at(arc, spec.t1);
  TangentVec v{problem.point(x1), mode.f(x1, spec.u1, spec.t1) - mode.f(x1, u0, spec.t1)};

  auto shared = std::make_shared<const Arc>(arc);
  const ControlLaw replay = [shared](double t, const Vec&, const Vec*) { return flow::control_at(*shared, t); };
  FlowOptions opts;
  opts.step = arc.step > 0.0 ? arc.step : flow::default_step(problem.t0, problem.tf, 0.0);
  opts.control_bounds = problem.control_set;
  const Arc sub = flow::integrate_arc(mode, problem.point(x1), replay, spec.t1, arc.t_end, opts);
  v = flow::tangent_flow(mode, sub, v);

  for (std::size_t j = static_cast<std::size_t>(i0); j < traj.switches.size(); ++j) {
    const auto& sw = traj.switches[j];
    const Mode& qm = problem.modes[j];
    const Mode& qp = problem.modes[j + 1];
    const Jump& jump = problem.jumps[j];
    const TangentVec fm{problem.point(sw.x_minus), qm.f(sw.x_minus, sw.u_minus, sw.t)};
    const double dt = switching_time_sensitivity(sw.dn, fm, v);
    const Mat dz = jump.jacobian(sw.x_minus, sw.t);
    const Vec zt = jump.time_derivative(sw.x_minus, sw.t);
    const Vec fp = qp.f(sw.x_plus, sw.u_plus, sw.t);
    const Vec vp = dz * v.comps + dt * (dz * fm.comps + zt - fp);
    v = flow::tangent_flow(qp, traj.arcs[j + 1], TangentVec{problem.point(sw.x_plus), vp});
  }
  return v;
}

namespace {

Vec terminal_state_with(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                        double eps, bool perturbed) {
  std::vector<ControlLaw> laws = flow::replay_laws(traj);
  const int i0 = validate_needle(problem, traj, spec, 0.0);
  if (perturbed) {
    const ControlLaw base = laws[i0];
    const Vec u1 = spec.u1;
    const double a = spec.t1 - eps;
    const double b = spec.t1;
    laws[i0] = [base, u1, a, b](double t, const Vec& x, const Vec* p) {
      return (t >= a && t < b) ? u1 : base(t, x, p);
    };
  }
  while (laws.size() < problem.modes.size()) laws.push_back(laws.back());
  FlowOptions opts;
  opts.step = traj.arcs.front().step;
  opts.event_tol = 1e-13;
  opts.breakpoints = {spec.t1 - eps, spec.t1};
  const HybridTrajectory out =
      flow::hybrid_flow(problem, laws, static_cast<int>(traj.switches.size()), opts);
  if (out.switches.size() != traj.switches.size()) {
    throw NumericalError("needle re-simulation changed the number of switches");
  }
  return out.final_state();
}

}  // namespace

Vec needle_fd_variation(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                        double eps) {
  if (!(eps > 0.0)) throw ContractError("finite-difference needle width must be positive");
  NeedleSpec s = spec;
  s.epsilon = eps;
  validate_needle(problem, traj, s, 0.0);
  const Vec nominal = terminal_state_with(problem, traj, s, eps, false);
  const Vec varied = terminal_state_with(problem, traj, s, eps, true);
  return (varied - nominal) / eps;
}

Vec needle_fd_richardson(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                         double eps) {
  const Vec d1 = needle_fd_variation(problem, traj, spec, eps);
  const Vec d2 = needle_fd_variation(problem, traj, spec, eps / 10.0);
  return (10.0 * d2 - d1) / 9.0;
}

std::vector<NeedleSpec> random_needles(const HybridProblem& problem, const HybridTrajectory& traj, int count,
                                       std::uint64_t seed, double max_eps) {
  const double margin = 0.02 * (problem.tf - problem.t0);
  std::vector<double> lo;
  std::vector<double> len;
  double total = 0.0;
  for (const auto& arc : traj.arcs) {
    const double a = arc.t_start + margin + max_eps;
    const double b = arc.t_end - margin;
    lo.push_back(a);
    len.push_back(std::max(0.0, b - a));
    total += len.back();
  }
  if (!(total > 0.0)) throw ContractError("no arc is long enough to host a needle");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NeedleSpec> out;
  for (int k = 0; k < count; ++k) {
    double r = unit(rng) * total;
    std::size_t i = 0;
    while (i + 1 < len.size() && (r >= len[i] || len[i] == 0.0)) {
      r -= len[i];
      ++i;
    }
    NeedleSpec s;
    s.t1 = lo[i] + std::min(r, len[i]);
    s.epsilon = max_eps;
    s.u1.resize(problem.m);
    for (int j = 0; j < problem.m; ++j) {
      s.u1[j] = problem.control_set.lower[j] +
                unit(rng) * (problem.control_set.upper[j] - problem.control_set.lower[j]);
    }
    out.push_back(s);
  }
  return out;
}

ConeReport cone_nonnegativity(const HybridProblem& problem, const HybridTrajectory& traj,
                              const std::vector<NeedleSpec>& specs, double tol_cone) {
  ConeReport rep;
  const Vec& xf = traj.final_state();
  const CotangentVec dh{problem.point(xf), problem.terminal_cost.gradient(xf)};
  rep.min_pairing = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const double q = pairing(dh, needle_terminal_variation(problem, traj, specs[k]));
    rep.pairings.push_back(q);
    rep.min_pairing = std::min(rep.min_pairing, q);
    if (q < -tol_cone) rep.violations.push_back(static_cast<int>(k));
  }
  if (specs.empty()) rep.min_pairing = 0.0;
  rep.pass = rep.violations.empty();
  return rep;
}

DvEstimate dv_covector(const ValueSurface& surface, const Vec& y) {
  const int k = surface.dim();
  if (y.size() != k) throw ContractError("chart coordinate dimension mismatch");
  if (!(surface.spacing > 0.0)) throw ContractError("value surface spacing must be positive");
  std::vector<int> centre(k);
  for (int j = 0; j < k; ++j) {
    centre[j] = static_cast<int>(std::lround(y[j] / surface.spacing));
    centre[j] = std::clamp(centre[j], -surface.half_width, surface.half_width);
  }
  DvEstimate out;
  out.tangential.resize(k);
  for (int j = 0; j < k; ++j) {
    std::vector<int> ip = centre;
    std::vector<int> im = centre;
    ++ip[j];
    --im[j];
    const auto* sp = surface.find(ip);
    const auto* sm = surface.find(im);
    if (!sp || !sm || !sp->reachable || !sm->reachable) {
      throw ContractError("value surface lacks the neighbours needed for a central difference");
    }
    out.tangential[j] = (sp->value - sm->value) / (2.0 * surface.spacing);
  }
  out.tangential_norm = out.tangential.norm();
  Eigen::VectorXd w = surface.normal * out.normal;
  for (int j = 0; j < k; ++j) w += out.tangential[j] * surface.basis.col(j);
  out.dv_x = w.head(surface.n);
  out.dv_t = w[surface.n];
  return out;
}

}  // namespace conditions
}  // namespace hmp
