#include "hmp/integrate.hpp"

#include "hmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace hmp::flow {

namespace {

constexpr double kBlowUp = 1e100;

// One-sided evaluation window for control laws on steps that touch a breakpoint.
struct LawClock {
  bool one_sided = false;
  double lo = 0.0;
  double hi = 0.0;

  double operator()(double t) const {
    if (!one_sided) return t;
    const double tau = 1e-9 * (hi - lo);
    return std::min(std::max(t, lo + tau), hi - tau);
  }
};

Vec eval_law(const ControlLaw& law, double t, const Vec& x, const Vec* p, const FlowOptions& opts) {
  Vec u = law(t, x, p);
  if (opts.control_bounds) u = opts.control_bounds->clamp(u);
  return u;
}

void check_finite(const Vec& x, double t, const char* what) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowUp) {
    std::ostringstream msg;
    msg << what << " blew up at t = " << t;
    throw BlowUpError(msg.str(), t);
  }
}

struct StepOut {
  Vec x;
  Vec p;  // empty when uncoupled
  std::array<Vec, 4> us;
};

// Classical RK4 on x (and p when `p` is non-null), controls from the law.
StepOut rk4_law_step(const Mode& mode, const ControlLaw& law, double t, double h, const Vec& x,
                     const Vec* p, const FlowOptions& opts, const LawClock& clock) {
  StepOut out;
  const double ts[4] = {t, t + 0.5 * h, t + 0.5 * h, t + h};
  const double cs[4] = {0.0, 0.5 * h, 0.5 * h, h};
  Vec kx[4];
  Vec kp[4];
  for (int s = 0; s < 4; ++s) {
    Vec xs = x;
    Vec ps;
    if (s > 0) xs += cs[s] * kx[s - 1];
    if (p) {
      ps = *p;
      if (s > 0) ps += cs[s] * kp[s - 1];
    }
    out.us[s] = eval_law(law, clock(ts[s]), xs, p ? &ps : nullptr, opts);
    kx[s] = mode.f(xs, out.us[s], ts[s]);
    if (p) kp[s] = -(mode.dfdx(xs, out.us[s], ts[s]).transpose() * ps);
  }
  out.x = x + (h / 6.0) * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3]);
  if (p) out.p = *p + (h / 6.0) * (kp[0] + 2.0 * kp[1] + 2.0 * kp[2] + kp[3]);
  return out;
}

// Step end points on [t0, t1]: uniform from each breakpoint, last step shortened.
std::vector<double> step_grid(double t0, double t1, double h, const std::vector<double>& breakpoints) {
  std::vector<double> cuts{t0};
  std::vector<double> bps = breakpoints;
  std::sort(bps.begin(), bps.end());
  const double eps = 1e-12 * (1.0 + std::abs(t1));
  for (double b : bps) {
    if (b > t0 + eps && b < t1 - eps) cuts.push_back(b);
  }
  cuts.push_back(t1);
  std::vector<double> grid{t0};
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c];
    const double b = cuts[c + 1];
    if (!(b > a)) continue;
    for (long k = 1;; ++k) {
      const double tk = a + static_cast<double>(k) * h;
      if (tk >= b - 1e-9 * h) {
        grid.push_back(b);
        break;
      }
      grid.push_back(tk);
    }
  }
  return grid;
}

bool touches_breakpoint(double a, double b, const std::vector<double>& bps) {
  for (double bp : bps) {
    const double eps = 1e-12 * (1.0 + std::abs(bp));
    if (std::abs(a - bp) <= eps || std::abs(b - bp) <= eps) return true;
  }
  return false;
}

LawClock clock_for(double a, double b, const FlowOptions& opts) {
  LawClock c;
  c.one_sided = !opts.breakpoints.empty() && touches_breakpoint(a, b, opts.breakpoints);
  c.lo = a;
  c.hi = b;
  return c;
}

bool sign_change(double g0, double g1) { return (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0); }

Arc integrate_impl(const Mode& mode, const ChartPoint& x0, const Vec* p0, const ControlLaw& law,
                   double t0, double t1, const FlowOptions& opts, const Guard* monitor) {
  if (!(opts.step > 0.0) || !std::isfinite(opts.step)) {
    throw ContractError("integration step must be positive");
  }
  if (!(t1 >= t0)) throw ContractError("integration interval must satisfy t0 <= t1");
  if (!law) throw ContractError("control law missing");
  check_finite(x0.coords, t0, "state");

  Arc arc;
  arc.mode_id = mode.id;
  arc.t_start = t0;
  arc.step = opts.step;
  const auto grid = step_grid(t0, t1, opts.step, opts.breakpoints);
  arc.samples.reserve(grid.size());
  arc.stage_controls.reserve(grid.size());

  Vec x = x0.coords;
  Vec p;
  if (p0) {
    p = *p0;
    arc.costate.reserve(grid.size());
    arc.costate.push_back(p);
  }
  double g_prev = monitor ? monitor->value(x, t0) : 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const double h = grid[k + 1] - t;
    StepOut s = rk4_law_step(mode, law, t, h, x, p0 ? &p : nullptr, opts, clock_for(t, grid[k + 1], opts));
    arc.samples.push_back(ArcSample{t, x, s.us[0]});
    arc.stage_controls.push_back(s.us);
    x = s.x;
    check_finite(x, grid[k + 1], "state");
    if (p0) {
      p = s.p;
      check_finite(p, grid[k + 1], "costate");
      arc.costate.push_back(p);
    }
    if (monitor) {
      const double g = monitor->value(x, grid[k + 1]);
      if (sign_change(g_prev, g)) {
        arc.t_end = grid[k + 1];
        LawClock end_clock = clock_for(t, grid[k + 1], opts);
        arc.samples.push_back(ArcSample{arc.t_end, x, eval_law(law, end_clock(arc.t_end), x, p0 ? &p : nullptr, opts)});
        return arc;
      }
      g_prev = g;
    }
  }
  arc.t_end = grid.back();
  LawClock end_clock = grid.size() > 1 ? clock_for(grid[grid.size() - 2], grid.back(), opts) : LawClock{};
  arc.samples.push_back(ArcSample{arc.t_end, x, eval_law(law, end_clock(arc.t_end), x, p0 ? &p : nullptr, opts)});
  return arc;
}

struct StageStates {
  Vec x[4];
  double t[4];
};

// Re-runs a recorded step with frozen controls to recover the stage states.
StageStates stages_of(const Mode& mode, const Arc& arc, std::size_t k) {
  StageStates st;
  const double t = arc.samples[k].t;
  const double h = arc.samples[k + 1].t - t;
  const double cs[4] = {0.0, 0.5 * h, 0.5 * h, h};
  const auto& us = arc.stage_controls[k];
  Vec kx;
  for (int s = 0; s < 4; ++s) {
    st.t[s] = t + cs[s];
    st.x[s] = arc.samples[k].x;
    if (s > 0) st.x[s] += cs[s] * kx;
    kx = mode.f(st.x[s], us[s], st.t[s]);
  }
  return st;
}

}  // namespace

double default_step(double t0, double tf, double step) {
  if (step > 0.0) return step;
  return 1e-3 * (tf - t0);
}

Arc integrate_arc(const Mode& mode, const ChartPoint& x0, const ControlLaw& law, double t0, double t1,
                  const FlowOptions& opts, const Guard* monitor) {
  return integrate_impl(mode, x0, nullptr, law, t0, t1, opts, monitor);
}

Arc integrate_coupled(const Mode& mode, const ChartPoint& x0, const Vec& p0, const ControlLaw& law,
                      double t0, double t1, const FlowOptions& opts) {
  if (p0.size() != x0.coords.size()) throw ContractError("costate dimension mismatch");
  return integrate_impl(mode, x0, &p0, law, t0, t1, opts, nullptr);
}

EventResult locate_event(const Mode& mode, const ControlLaw& law, const Guard& guard, const Arc& arc,
                         const FlowOptions& opts) {
  EventResult ev;
  const bool coupled = !arc.costate.empty();
  std::size_t k = 0;
  double g0 = 0.0;
  double g1 = 0.0;
  bool bracketed = false;
  for (; k + 1 < arc.samples.size(); ++k) {
    g0 = guard.value(arc.samples[k].x, arc.samples[k].t);
    g1 = guard.value(arc.samples[k + 1].x, arc.samples[k + 1].t);
    if (sign_change(g0, g1)) {
      bracketed = true;
      break;
    }
  }
  if (!bracketed) return ev;

  const double ta = arc.samples[k].t;
  const double tb = arc.samples[k + 1].t;
  const Vec& xa = arc.samples[k].x;
  const Vec* pa = coupled ? &arc.costate[k] : nullptr;
  const LawClock clock = clock_for(ta, tb, opts);
  const double tol = opts.event_tol * (1.0 + std::max(std::abs(g0), std::abs(g1)));

  double lo = 0.0;
  double hi = tb - ta;
  double theta = hi;
  StepOut best;
  if (g1 == 0.0) {
    best = rk4_law_step(mode, law, ta, hi, xa, pa, opts, clock);
    best.x = arc.samples[k + 1].x;
    if (coupled) best.p = arc.costate[k + 1];
  } else {
    for (int it = 0; it < opts.event_max_iter; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      StepOut s = rk4_law_step(mode, law, ta, mid, xa, pa, opts, clock);
      const double gm = guard.value(s.x, ta + mid);
      theta = mid;
      best = std::move(s);
      if (std::abs(gm) <= tol) break;
      if (sign_change(g0, gm)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    if (best.x.size() == 0) {
      best = rk4_law_step(mode, law, ta, theta, xa, pa, opts, clock);
    }
  }

  ev.found = true;
  ev.interval = static_cast<int>(k);
  ev.t = ta + theta;
  ev.x_minus = best.x;
  if (coupled) ev.p_minus = best.p;
  ev.stage_controls = best.us;
  ev.u_minus = eval_law(law, clock(ev.t), ev.x_minus, coupled ? &ev.p_minus : nullptr, opts);

  const GuardGradient gg = guard.gradient(ev.x_minus, ev.t);
  const double rate = gg.dx.dot(mode.f(ev.x_minus, ev.u_minus, ev.t)) + gg.dt;
  if (std::abs(rate) < 1e-8) {
    std::ostringstream msg;
    msg << "tangential guard crossing at t = " << ev.t << " (d gamma/dt = " << rate << ")";
    throw TangentialCrossingError(msg.str());
  }
  return ev;
}

void truncate_at_event(Arc& arc, const EventResult& ev) {
  if (!ev.found) return;
  const std::size_t k = static_cast<std::size_t>(ev.interval);
  arc.samples.resize(k + 1);
  arc.stage_controls.resize(k);
  arc.samples.push_back(ArcSample{ev.t, ev.x_minus, ev.u_minus});
  arc.stage_controls.push_back(ev.stage_controls);
  if (!arc.costate.empty()) {
    arc.costate.resize(k + 1);
    arc.costate.push_back(ev.p_minus);
  }
  arc.t_end = ev.t;
}

TangentVec tangent_flow(const Mode& mode, const Arc& arc, const TangentVec& v0) {
  if (v0.comps.size() != arc.samples.front().x.size()) {
    throw ContractError("tangent_flow: vector dimension mismatch");
  }
  Vec v = v0.comps;
  for (std::size_t k = 0; k + 1 < arc.samples.size(); ++k) {
    const double h = arc.samples[k + 1].t - arc.samples[k].t;
    const StageStates st = stages_of(mode, arc, k);
    const auto& us = arc.stage_controls[k];
    const double cs[4] = {0.0, 0.5 * h, 0.5 * h, h};
    Vec kv[4];
    for (int s = 0; s < 4; ++s) {
      Vec vs = v;
      if (s > 0) vs += cs[s] * kv[s - 1];
      kv[s] = mode.dfdx(st.x[s], us[s], st.t[s]) * vs;
    }
    v += (h / 6.0) * (kv[0] + 2.0 * kv[1] + 2.0 * kv[2] + kv[3]);
    check_finite(v, arc.samples[k + 1].t, "tangent vector");
  }
  return TangentVec{ChartPoint{v0.base.chart, arc.x_end()}, v};
}

AdjointArc cotangent_flow(const Mode& mode, const Arc& arc, const CotangentVec& p_end) {
  const std::size_t n_samples = arc.samples.size();
  if (p_end.comps.size() != arc.samples.front().x.size()) {
    throw ContractError("cotangent_flow: covector dimension mismatch");
  }
  AdjointArc out;
  out.t.resize(n_samples);
  out.p.resize(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) out.t[k] = arc.samples[k].t;
  Vec lam = p_end.comps;
  out.p[n_samples - 1] = lam;
  const double w[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
  for (std::size_t k = n_samples - 1; k-- > 0;) {
    const double h = arc.samples[k + 1].t - arc.samples[k].t;
    const StageStates st = stages_of(mode, arc, k);
    const auto& us = arc.stage_controls[k];
    const double cs[4] = {0.0, 0.5 * h, 0.5 * h, h};
    // Reverse sweep through the stages of the tangent step.
    Vec acc = lam;
    Vec kbar = h * w[3] * lam;
    for (int s = 3; s >= 0; --s) {
      const Vec ybar = mode.dfdx(st.x[s], us[s], st.t[s]).transpose() * kbar;
      acc += ybar;
      if (s > 0) kbar = h * w[s - 1] * lam + cs[s] * ybar;
    }
    lam = acc;
    check_finite(lam, arc.samples[k].t, "costate");
    out.p[k] = lam;
  }
  return out;
}

HybridTrajectory hybrid_flow(const HybridProblem& problem, const std::vector<ControlLaw>& laws,
                             int max_switches, const FlowOptions& opts_in) {
  const int L = problem.num_switches();
  if (laws.size() != problem.modes.size() && laws.size() != 1) {
    throw ContractError("hybrid_flow: need one control law per mode");
  }
  FlowOptions opts = opts_in;
  opts.step = default_step(problem.t0, problem.tf, opts.step);
  if (!opts.control_bounds) opts.control_bounds = problem.control_set;
  const int allowed = std::min(L, std::max(0, max_switches));
  auto law_of = [&](int i) -> const ControlLaw& { return laws.size() == 1 ? laws[0] : laws[i]; };

  HybridTrajectory traj;
  ChartPoint x = problem.x0;
  double t = problem.t0;
  for (int i = 0;; ++i) {
    const Mode& mode = problem.modes[i];
    const Guard* guard = i < L ? &problem.guards[i] : nullptr;
    Arc arc = integrate_arc(mode, x, law_of(i), t, problem.tf, opts, guard);
    arc.mode = i;
    if (guard) {
      const EventResult ev = locate_event(mode, law_of(i), *guard, arc, opts);
      if (ev.found) {
        if (i >= allowed) {
          std::ostringstream msg;
          msg << "guard " << i << " crossed at t = " << ev.t << " but only " << allowed
              << " switchings are allowed";
          throw ScheduleViolationError(msg.str());
        }
        truncate_at_event(arc, ev);
        SwitchRecord sw;
        sw.index = i;
        sw.t = ev.t;
        sw.x_minus = ev.x_minus;
        sw.u_minus = ev.u_minus;
        sw.x_plus = problem.jumps[i].apply(ev.x_minus, ev.t);
        check_finite(sw.x_plus, ev.t, "post-jump state");
        sw.u_plus = eval_law(law_of(i + 1), ev.t, sw.x_plus, nullptr, opts);
        const GuardGradient gg = guard->gradient(ev.x_minus, ev.t);
        sw.dn = geometry::normal_covector(gg.dx, guard->time_varying ? gg.dt : 0.0, problem.metric,
                                          problem.point(ev.x_minus), false);
        sw.jump_covector = sw.dn;
        traj.arcs.push_back(std::move(arc));
        traj.switches.push_back(sw);
        x = problem.point(sw.x_plus);
        t = ev.t;
        continue;
      }
    }
    traj.arcs.push_back(std::move(arc));
    break;
  }
  return traj;
}

int interval_of(const Arc& arc, double t) {
  const auto& s = arc.samples;
  if (s.size() < 2) return 0;
  auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const ArcSample& a) { return v < a.t; });
  const long idx = static_cast<long>(it - s.begin()) - 1;
  return static_cast<int>(std::clamp<long>(idx, 0, static_cast<long>(s.size()) - 2));
}

Vec state_at(const Mode& mode, const Arc& arc, double t) {
  const auto& s = arc.samples;
  if (s.size() == 1) return s[0].x;
  const int k = interval_of(arc, t);
  const auto& a = s[k];
  const auto& b = s[k + 1];
  const double h = b.t - a.t;
  const double th = (t - a.t) / h;
  const Vec fa = mode.f(a.x, a.u, a.t);
  const Vec fb = mode.f(b.x, b.u, b.t);
  const double h00 = 2 * th * th * th - 3 * th * th + 1;
  const double h10 = th * th * th - 2 * th * th + th;
  const double h01 = -2 * th * th * th + 3 * th * th;
  const double h11 = th * th * th - th * th;
  return h00 * a.x + h10 * h * fa + h01 * b.x + h11 * h * fb;
}

Vec control_at(const Arc& arc, double t) {
  const auto& s = arc.samples;
  if (t <= s.front().t || s.size() == 1) return s.front().u;
  if (t >= s.back().t) return s.back().u;
  const int k = interval_of(arc, t);
  const double th = (t - s[k].t) / (s[k + 1].t - s[k].t);
  return (1.0 - th) * s[k].u + th * s[k + 1].u;
}

std::vector<ControlLaw> replay_laws(const HybridTrajectory& traj) {
  std::vector<ControlLaw> laws;
  for (const auto& arc : traj.arcs) {
    auto shared = std::make_shared<const Arc>(arc);
    laws.push_back([shared](double t, const Vec&, const Vec*) { return control_at(*shared, t); });
  }
  return laws;
}

}  // namespace hmp::flow
