#include "hmp/registry.hpp"

#include "hmp/errors.hpp"

#include <cmath>
#include <initializer_list>
#include <sstream>

namespace hmp {

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Vec filled(int n, double value) { return Vec::Constant(n, value); }

// argmin over [lo, hi] of 0.5 a u^2 + c u; ties go to the lower bound.
double separable_min(double c, double a, double lo, double hi) {
  if (a > 0.0) return std::min(hi, std::max(lo, -c / a));
  const double at_lo = 0.5 * a * lo * lo + c * lo;
  const double at_hi = 0.5 * a * hi * hi + c * hi;
  return at_hi < at_lo ? hi : lo;
}

HybridProblem base(const std::string& name, int n, int m, double t0, double tf) {
  HybridProblem p;
  p.name = name;
  p.n = n;
  p.m = m;
  p.t0 = t0;
  p.tf = tf;
  p.x0 = ChartPoint{"R^" + std::to_string(n), Vec::Zero(n)};
  p.metric = MetricField::euclidean(n);
  return p;
}

Guard static_level_guard(int coord, double level) {
  Guard g;
  g.fn = [coord, level](const Vec& x, double) { return x[coord] - level; };
  g.grad = [coord](const Vec& x, double) {
    GuardGradient d{Vec::Zero(x.size()), 0.0};
    d.dx[coord] = 1.0;
    return d;
  };
  return g;
}

Mat zero_jacobian(const Vec& x, const Vec&, double) { return Mat::Zero(x.size(), x.size()); }

// ---------------------------------------------------------------------------

// Energy-augmented shift jump: the crossing point is free along the guard, so
// the optimum lies in the interior of the switching surface.
HybridProblem ex1(const ParamMap& prm) {
  const double shift = prm.at("shift");
  const double target = prm.at("target_x1");
  const double umax = prm.at("u_max");
  HybridProblem p = base("EX1_shift_jump", 3, 1, 0.0, 2.0);
  p.control_set = {filled(1, -umax), filled(1, umax)};
  for (int q = 0; q < 2; ++q) {
    Mode mode;
    mode.id = "q" + std::to_string(q);
    mode.dynamics = [](const Vec&, const Vec& u, double) {
      return vec({u[0], 1.0, 0.5 * u[0] * u[0]});
    };
    mode.jacobian_x = zero_jacobian;
    mode.hamiltonian_minimizer = [](const Vec&, const Vec& pc, double, const ControlSet& s) {
      return filled(1, separable_min(pc[0], pc[2], s.lower[0], s.upper[0]));
    };
    p.modes.push_back(mode);
  }
  p.guards.push_back(static_level_guard(1, 1.0));
  Jump j;
  j.map = [shift](const Vec& x, double) {
    Vec y = x;
    y[0] += shift;
    return y;
  };
  j.jacobian_x = [](const Vec& x, double) -> Mat { return Mat::Identity(x.size(), x.size()); };
  p.jumps.push_back(j);
  p.terminal_cost.fn = [target](const Vec& x) { return x[2] + (x[0] - target) * (x[0] - target); };
  p.terminal_cost.grad = [target](const Vec& x) { return vec({2.0 * (x[0] - target), 0.0, 1.0}); };
  p.cost_accumulators = {2};
  p.box_lo = vec({-2.0, -0.5, 0.0});
  p.box_hi = vec({4.0, 3.0, 4.0});
  p.default_guess = ShootingState{vec({-0.5, 0.0, 1.0}), {0.8}, {0.0}};
  p.suboptimal_controls.assign(2, model::constant_law(filled(1, 0.0)));
  return p;
}

HybridProblem ex2(const ParamMap& prm) {
  const double tx1 = prm.at("target_x1");
  const double tx2 = prm.at("target_x2");
  const double rate = prm.at("rate1");
  HybridProblem p = base("EX2_rate_switch", 2, 1, 0.0, 2.0);
  p.control_set = {filled(1, -1.0), filled(1, 1.0)};
  const double rates[2] = {1.0, rate};
  for (int q = 0; q < 2; ++q) {
    Mode mode;
    mode.id = "q" + std::to_string(q);
    const double r = rates[q];
    mode.dynamics = [r](const Vec&, const Vec& u, double) { return vec({u[0], r}); };
    mode.jacobian_x = zero_jacobian;
    mode.hamiltonian_minimizer = [](const Vec&, const Vec& pc, double, const ControlSet& s) {
      return filled(1, separable_min(pc[0], 0.0, s.lower[0], s.upper[0]));
    };
    p.modes.push_back(mode);
  }
  p.guards.push_back(static_level_guard(1, 1.0));
  p.jumps.push_back(Jump::identity());
  p.terminal_cost.fn = [tx1, tx2](const Vec& x) {
    return (x[0] - tx1) * (x[0] - tx1) + (x[1] - tx2) * (x[1] - tx2);
  };
  p.terminal_cost.grad = [tx1, tx2](const Vec& x) {
    return vec({2.0 * (x[0] - tx1), 2.0 * (x[1] - tx2)});
  };
  p.box_lo = vec({-3.0, -1.0});
  p.box_hi = vec({4.0, 4.0});
  p.default_guess = ShootingState{vec({-1.0, 1.0}), {0.8}, {0.0}};
  p.suboptimal_controls.assign(2, model::constant_law(filled(1, -1.0)));
  return p;
}

// Moving guard with a two-dimensional control so the crossing time itself is
// steerable; running energy is accumulated in x3.
HybridProblem ex3(const ParamMap& prm) {
  const double tx1 = prm.at("target_x1");
  const double tx2 = prm.at("target_x2");
  const double slope = prm.at("guard_slope");
  const double umax = prm.at("u_max");
  HybridProblem p = base("EX3_moving_guard", 3, 2, 0.0, 2.0);
  p.control_set = {filled(2, -umax), filled(2, umax)};
  const double drift[2] = {1.0, 2.0};
  for (int q = 0; q < 2; ++q) {
    Mode mode;
    mode.id = "q" + std::to_string(q);
    const double d = drift[q];
    mode.dynamics = [d](const Vec&, const Vec& u, double) {
      return vec({u[0], d + u[1], 0.5 * u.squaredNorm()});
    };
    mode.jacobian_x = zero_jacobian;
    mode.hamiltonian_minimizer = [](const Vec&, const Vec& pc, double, const ControlSet& s) {
      return vec({separable_min(pc[0], pc[2], s.lower[0], s.upper[0]),
                  separable_min(pc[1], pc[2], s.lower[1], s.upper[1])});
    };
    p.modes.push_back(mode);
  }
  Guard g;
  g.time_varying = slope != 0.0;
  g.fn = [slope](const Vec& x, double t) { return x[1] - slope * t - (1.0 - slope); };
  g.grad = [slope](const Vec&, double) { return GuardGradient{vec({0.0, 1.0, 0.0}), -slope}; };
  p.guards.push_back(g);
  p.jumps.push_back(Jump::identity());
  p.terminal_cost.fn = [tx1, tx2](const Vec& x) {
    return x[2] + (x[0] - tx1) * (x[0] - tx1) + (x[1] - tx2) * (x[1] - tx2);
  };
  p.terminal_cost.grad = [tx1, tx2](const Vec& x) {
    return vec({2.0 * (x[0] - tx1), 2.0 * (x[1] - tx2), 1.0});
  };
  p.variant = g.time_varying ? TheoremVariant::TimeVaryingGuard : TheoremVariant::TimeInvariant;
  p.cost_accumulators = {2};
  p.box_lo = vec({-2.0, -0.5, 0.0});
  p.box_hi = vec({4.0, 4.0, 4.0});
  p.default_guess = ShootingState{vec({-1.0, 0.2, 1.0}), {1.5}, {0.0}};
  p.suboptimal_controls.assign(2, model::constant_law(vec({0.0, 0.0})));
  return p;
}

// EX2 with a time-stamped translation at the switch.
HybridProblem ex4(const ParamMap& prm) {
  const double rate = prm.at("jump_rate");
  const double guard_rate = prm.at("guard_rate");
  HybridProblem p = ex2({{"target_x1", 3.0 + rate}, {"target_x2", 2.0}, {"rate1", 2.0}});
  p.name = "EX4_timed_jump";
  Jump j;
  j.time_varying = rate != 0.0;
  j.map = [rate](const Vec& x, double t) { return vec({x[0] + rate * t, x[1]}); };
  j.jacobian_x = [](const Vec& x, double) -> Mat { return Mat::Identity(x.size(), x.size()); };
  j.d_t = [rate](const Vec&, double) { return vec({rate, 0.0}); };
  p.jumps[0] = j;
  // Rotating the guard about (x2, t) = (1, 1) keeps the nominal crossing at t = 1.
  Guard g;
  g.time_varying = guard_rate != 0.0;
  g.fn = [guard_rate](const Vec& x, double t) { return x[1] - 1.0 - guard_rate * (t - 1.0); };
  g.grad = [guard_rate](const Vec&, double) { return GuardGradient{vec({0.0, 1.0}), -guard_rate}; };
  p.guards[0] = g;
  if (j.time_varying) {
    p.variant = TheoremVariant::TimeVaryingJump;
  } else if (g.time_varying) {
    p.variant = TheoremVariant::TimeVaryingGuard;
  }
  return p;
}

HybridProblem ex5(const ParamMap& prm) {
  const double shear = prm.at("shear");
  HybridProblem p = base("EX5_three_mode", 2, 1, 0.0, prm.at("tf"));
  p.control_set = {filled(1, -1.0), filled(1, 1.0)};
  const double rates[3] = {1.0, 2.0, 1.0};
  for (int q = 0; q < 3; ++q) {
    Mode mode;
    mode.id = "q" + std::to_string(q);
    const double r = rates[q];
    mode.dynamics = [r](const Vec&, const Vec& u, double) { return vec({u[0], r}); };
    mode.jacobian_x = zero_jacobian;
    mode.hamiltonian_minimizer = [](const Vec&, const Vec& pc, double, const ControlSet& s) {
      return filled(1, separable_min(pc[0], 0.0, s.lower[0], s.upper[0]));
    };
    p.modes.push_back(mode);
  }
  p.guards.push_back(static_level_guard(1, 1.0));
  p.guards.push_back(static_level_guard(1, 2.0));
  p.jumps.push_back(Jump::identity());
  Jump j;
  j.map = [shear](const Vec& x, double) { return vec({x[0] + shear * x[1], x[1]}); };
  j.jacobian_x = [shear](const Vec&, double) -> Mat {
    Mat a(2, 2);
    a << 1.0, shear, 0.0, 1.0;
    return a;
  };
  p.jumps.push_back(j);
  p.terminal_cost.fn = [](const Vec& x) {
    return (x[0] - 4.0) * (x[0] - 4.0) + (x[1] - 2.0) * (x[1] - 2.0);
  };
  p.terminal_cost.grad = [](const Vec& x) { return vec({2.0 * (x[0] - 4.0), 2.0 * (x[1] - 2.0)}); };
  p.box_lo = vec({-3.0, -1.0});
  p.box_hi = vec({5.0, 4.0});
  p.default_guess = ShootingState{vec({-1.0, 1.0}), {0.8, 1.4}, {0.0, 0.0}};
  p.suboptimal_controls.assign(3, model::constant_law(filled(1, -1.0)));
  return p;
}

// Round sphere in stereographic coordinates: unit-speed drifts in the chart
// scaled by the conformal factor, a circular guard and a rotation jump.
HybridProblem ex6(const ParamMap& prm) {
  const double angle = prm.at("rotation");
  const double radius = prm.at("radius");
  HybridProblem p = base("EX6_sphere_chart", 2, 1, 0.0, 1.0);
  p.x0.chart = "S^2/stereo";
  p.metric = MetricField::stereographic_sphere(2);
  p.control_set = {filled(1, -1.0), filled(1, 1.0)};
  const double speeds[2] = {1.0, 1.5};
  for (int q = 0; q < 2; ++q) {
    Mode mode;
    mode.id = "q" + std::to_string(q);
    const double c = speeds[q];
    mode.dynamics = [c](const Vec& x, const Vec& u, double) {
      const double s = 0.5 * (1.0 + x.squaredNorm());
      return vec({s * u[0], s * c});
    };
    mode.jacobian_x = [c](const Vec& x, const Vec& u, double) -> Mat {
      Mat a(2, 2);
      a.row(0) = u[0] * x.transpose();
      a.row(1) = c * x.transpose();
      return a;
    };
    mode.hamiltonian_minimizer = [](const Vec& x, const Vec& pc, double, const ControlSet& s) {
      const double scale = 0.5 * (1.0 + x.squaredNorm());
      return filled(1, separable_min(scale * pc[0], 0.0, s.lower[0], s.upper[0]));
    };
    p.modes.push_back(mode);
  }
  const double r2 = radius * radius;
  Guard g;
  g.fn = [r2](const Vec& x, double) { return x.squaredNorm() - r2; };
  g.grad = [](const Vec& x, double) { return GuardGradient{2.0 * x, 0.0}; };
  p.guards.push_back(g);
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  Mat rot(2, 2);
  rot << ca, -sa, sa, ca;
  Jump j;
  j.map = [rot](const Vec& x, double) -> Vec { return rot * x; };
  j.jacobian_x = [rot](const Vec&, double) -> Mat { return rot; };
  p.jumps.push_back(j);
  p.terminal_cost.fn = [](const Vec& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + (x[1] - 1.0) * (x[1] - 1.0);
  };
  p.terminal_cost.grad = [](const Vec& x) { return vec({2.0 * (x[0] - 1.0), 2.0 * (x[1] - 1.0)}); };
  p.box_lo = vec({-1.5, -1.5});
  p.box_hi = vec({1.5, 1.5});
  p.default_guess = ShootingState{vec({-1.0, 1.0}), {0.4}, {0.0}};
  p.suboptimal_controls.assign(2, model::constant_law(filled(1, -1.0)));
  return p;
}

HybridProblem lqr1(const ParamMap& prm) {
  HybridProblem p = base("LQR1_single_mode", 1, 1, 0.0, prm.at("tf"));
  p.x0.coords = filled(1, prm.at("x0"));
  p.control_set = {filled(1, -1.0), filled(1, 1.0)};
  Mode mode;
  mode.id = "q0";
  mode.dynamics = [](const Vec&, const Vec& u, double) { return filled(1, u[0]); };
  mode.jacobian_x = zero_jacobian;
  mode.hamiltonian_minimizer = [](const Vec&, const Vec& pc, double, const ControlSet& s) {
    return filled(1, separable_min(pc[0], 0.0, s.lower[0], s.upper[0]));
  };
  p.modes.push_back(mode);
  p.terminal_cost.fn = [](const Vec& x) { return x[0] * x[0]; };
  p.terminal_cost.grad = [](const Vec& x) { return filled(1, 2.0 * x[0]); };
  p.box_lo = filled(1, -2.0);
  p.box_hi = filled(1, 3.0);
  p.default_guess = ShootingState{filled(1, 0.3), {}, {}};
  p.suboptimal_controls.assign(1, model::constant_law(filled(1, 1.0)));
  return p;
}

// Finite-time blow-up x' = x^2, used to exercise numerical-failure paths.
HybridProblem stress(const ParamMap& prm) {
  HybridProblem p = base("STRESS_blowup", 1, 1, 0.0, prm.at("tf"));
  p.x0.coords = filled(1, prm.at("x0"));
  p.control_set = {filled(1, -1.0), filled(1, 1.0)};
  Mode mode;
  mode.id = "q0";
  mode.dynamics = [](const Vec& x, const Vec&, double) { return filled(1, x[0] * x[0]); };
  mode.jacobian_x = [](const Vec& x, const Vec&, double) -> Mat { return Mat::Constant(1, 1, 2.0 * x[0]); };
  p.modes.push_back(mode);
  p.terminal_cost.fn = [](const Vec& x) { return x[0]; };
  p.terminal_cost.grad = [](const Vec&) { return filled(1, 1.0); };
  p.box_lo = filled(1, -1.0);
  p.box_hi = filled(1, 1.0);
  p.default_guess = ShootingState{filled(1, 1.0), {}, {}};
  return p;
}

std::vector<RegistryEntry> build_registry() {
  return {
      {"EX1_shift_jump",
       "x' = (u, 1, u^2/2) in both modes; guard x2 = 1; jump x1 += shift; h = x3 + (x1 - target_x1)^2",
       {{"shift", 0.5, -2.0, 2.0, "translation applied to x1 at the switch"},
        {"target_x1", 3.0, 0.0, 6.0, "terminal target for x1"},
        {"u_max", 2.0, 1.5, 10.0, "control bound |u| <= u_max"}},
       ex1},
      {"EX2_rate_switch",
       "x' = (u, 1) then (u, rate1); guard x2 = 1; identity jump; h = |x - target|^2",
       {{"target_x1", 3.0, 2.1, 6.0, "terminal target for x1"},
        {"target_x2", 2.0, -2.0, 6.0, "terminal target for x2"},
        {"rate1", 2.0, 0.5, 5.0, "x2 rate in the second mode"}},
       ex2},
      {"EX3_moving_guard",
       "x' = (u1, 1 + u2, |u|^2/2) then (u1, 2 + u2, |u|^2/2); guard x2 = slope t + 1 - slope",
       {{"target_x1", 2.5, 0.0, 5.0, "terminal target for x1"},
        {"target_x2", 2.0, 1.0, 4.0, "terminal target for x2"},
        {"guard_slope", 0.5, 0.0, 0.9, "guard velocity; zero gives a static guard"},
        {"u_max", 4.0, 2.0, 10.0, "control bound per component"}},
       ex3},
      {"EX4_timed_jump",
       "EX2 with jump x1 += jump_rate t and guard x2 = 1 + guard_rate (t - 1)",
       {{"jump_rate", 0.3, -1.0, 1.0, "time coefficient of the jump translation"},
        {"guard_rate", 0.0, -0.5, 0.5, "guard velocity; nonzero makes the guard time-varying"}},
       ex4},
      {"EX5_three_mode",
       "x' = (u, 1), (u, 2), (u, 1); guards x2 = 1 and x2 = 2; second jump is a shear",
       {{"shear", 0.2, -1.0, 1.0, "shear coefficient of the second jump"},
        {"tf", 2.5, 2.1, 4.0, "final time"}},
       ex5},
      {"EX6_sphere_chart",
       "stereographic sphere chart; x' = (1 + |x|^2)/2 (u, c_q); circular guard; rotation jump",
       {{"rotation", 0.3, -1.5, 1.5, "rotation angle of the jump in radians"},
        {"radius", 0.5, 0.2, 0.8, "chart radius of the circular guard"}},
       ex6},
      {"LQR1_single_mode",
       "x' = u, |u| <= 1, h = x^2",
       {{"x0", 1.0, 0.6, 2.0, "initial state"}, {"tf", 0.5, 0.1, 0.5, "final time"}},
       lqr1},
      {"STRESS_blowup",
       "x' = x^2, escapes to infinity at t = 1/x0",
       {{"x0", 1.0, 0.1, 10.0, "initial state"}, {"tf", 2.0, 0.5, 20.0, "final time"}},
       stress},
  };
}

}  // namespace

const std::vector<RegistryEntry>& registry() {
  static const std::vector<RegistryEntry> entries = build_registry();
  return entries;
}

HybridProblem registry_instantiate(const std::string& name, const ParamMap& params) {
  for (const auto& e : registry()) {
    if (e.name != name) continue;
    ParamMap resolved;
    for (const auto& spec : e.params) resolved[spec.name] = spec.default_value;
    for (const auto& [key, value] : params) {
      auto it = resolved.find(key);
      if (it == resolved.end()) {
        throw ParameterRangeError("problem " + name + " has no parameter '" + key + "'");
      }
      const ParamSpec* spec = nullptr;
      for (const auto& s : e.params) {
        if (s.name == key) spec = &s;
      }
      if (!std::isfinite(value) || value < spec->lo || value > spec->hi) {
        std::ostringstream msg;
        msg << "parameter " << key << " = " << value << " outside [" << spec->lo << ", " << spec->hi
            << "] for " << name;
        throw ParameterRangeError(msg.str());
      }
      it->second = value;
    }
    return e.build(resolved);
  }
  throw UnknownProblemError("unknown problem '" + name + "'");
}

}  // namespace hmp
