#include "hmp/errors.hpp"
#include "hmp/integrate.hpp"
#include "hmp/registry.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hmp;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mode linear_mode(const Mat& a) {
  Mode m;
  m.id = "lin";
  m.dynamics = [a](const Vec& x, const Vec&, double) -> Vec { return a * x; };
  m.jacobian_x = [a](const Vec&, const Vec&, double) -> Mat { return a; };
  return m;
}

Mode drift_mode(const Vec& c) {
  Mode m;
  m.id = "drift";
  m.dynamics = [c](const Vec&, const Vec&, double) { return c; };
  return m;
}

FlowOptions with_step(double h) {
  FlowOptions o;
  o.step = h;
  return o;
}

const ControlLaw kZeroLaw = [](double, const Vec&, const Vec*) { return Vec::Zero(1); };

Guard level_guard(double slope) {
  Guard g;
  g.time_varying = slope != 0.0;
  g.fn = [slope](const Vec& x, double t) { return x[1] - slope * t - (1.0 - slope); };
  return g;
}

}  // namespace

TEST(IntegrateArc, ConstantField) {
  const auto arc = flow::integrate_arc(drift_mode(v2(1, 0)), ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0,
                                       1.0, with_step(0.01));
  EXPECT_EQ(arc.samples.back().t, 1.0);
  EXPECT_NEAR(arc.x_end()[0], 1.0, 1e-12);
  EXPECT_NEAR(arc.x_end()[1], 0.0, 1e-12);
  for (std::size_t k = 1; k < arc.samples.size(); ++k) EXPECT_GT(arc.samples[k].t, arc.samples[k - 1].t);
}

TEST(IntegrateArc, ExponentialGrowth) {
  const auto arc = flow::integrate_arc(linear_mode(Mat::Identity(1, 1)), ChartPoint{"R", Vec::Ones(1)},
                                       kZeroLaw, 0.0, 1.0, with_step(1e-3));
  EXPECT_NEAR(arc.x_end()[0], std::exp(1.0), 1e-8);
}

TEST(IntegrateArc, LastStepShortened) {
  const auto arc = flow::integrate_arc(drift_mode(v2(1, 0)), ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0,
                                       1.0, with_step(0.3));
  ASSERT_EQ(arc.samples.size(), 5u);
  EXPECT_NEAR(arc.samples[3].t, 0.9, 1e-15);
  EXPECT_EQ(arc.samples[4].t, 1.0);
}

TEST(IntegrateArc, NonPositiveStepRejected) {
  EXPECT_THROW(flow::integrate_arc(drift_mode(v2(1, 0)), ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 1.0,
                                   with_step(0.0)),
               ContractError);
  EXPECT_THROW(flow::integrate_arc(drift_mode(v2(1, 0)), ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 1.0,
                                   with_step(-0.1)),
               ContractError);
}

TEST(IntegrateArc, BreakpointsSplitSteps) {
  FlowOptions o = with_step(0.3);
  o.breakpoints = {0.5};
  const ControlLaw law = [](double t, const Vec&, const Vec*) { return Vec::Constant(1, t < 0.5 ? -1.0 : 1.0); };
  Mode m;
  m.id = "u";
  m.dynamics = [](const Vec&, const Vec& u, double) { return u; };
  const auto arc = flow::integrate_arc(m, ChartPoint{"R", Vec::Zero(1)}, law, 0.0, 1.0, o);
  // Exact for piecewise constant control: -0.5 + 0.5.
  EXPECT_NEAR(arc.x_end()[0], 0.0, 1e-14);
  bool has_bp = false;
  for (const auto& s : arc.samples) has_bp = has_bp || s.t == 0.5;
  EXPECT_TRUE(has_bp);
}

TEST(LocateEvent, LinearCrossing) {
  const Mode m = drift_mode(v2(0, 1));
  const Guard g = level_guard(0.0);
  const FlowOptions o = with_step(0.013);
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 2.0, o, &g);
  const auto ev = flow::locate_event(m, kZeroLaw, g, arc, o);
  ASSERT_TRUE(ev.found);
  EXPECT_NEAR(ev.t, 1.0, 1e-10);
}

TEST(LocateEvent, MovingGuard) {
  const Mode m = drift_mode(v2(0, 1));
  const Guard g = level_guard(0.5);
  const FlowOptions o = with_step(0.013);
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 2.0, o);
  const auto ev = flow::locate_event(m, kZeroLaw, g, arc, o);
  ASSERT_TRUE(ev.found);
  EXPECT_NEAR(ev.t, 1.0, 1e-10);
}

TEST(LocateEvent, AbsentCrossing) {
  const Mode m = drift_mode(v2(0, 0.1));
  const Guard g = level_guard(0.0);
  const FlowOptions o = with_step(0.01);
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 2.0, o);
  EXPECT_FALSE(flow::locate_event(m, kZeroLaw, g, arc, o).found);
}

TEST(LocateEvent, TangentialCrossingRejected) {
  const Mode m = drift_mode(v2(0, 0));
  Guard g;
  g.time_varying = true;
  g.fn = [](const Vec& x, double t) { return x[1] - std::pow(t - 1.0, 3); };
  FlowOptions o = with_step(0.01);
  o.event_tol = 1e-300;
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 2.0, o);
  EXPECT_THROW(flow::locate_event(m, kZeroLaw, g, arc, o), TangentialCrossingError);
}

TEST(TangentFlow, DriftFieldLeavesVectorUnchanged) {
  const Mode m = drift_mode(v2(1, 1));
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 1.0, with_step(0.01));
  const auto v = flow::tangent_flow(m, arc, TangentVec{ChartPoint{"R^2", v2(0, 0)}, v2(0.3, -2)});
  EXPECT_EQ(v.comps, v2(0.3, -2));
}

TEST(TangentFlow, LinearSystemMatchesMatrixExponential) {
  Mat a(2, 2);
  a << -0.3, 1.2, -0.7, 0.1;
  const Mode m = linear_mode(a);
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(1, 0.5)}, kZeroLaw, 0.2, 1.7, with_step(1e-3));
  const Vec v0 = v2(0.4, -1.1);
  const auto v = flow::tangent_flow(m, arc, TangentVec{ChartPoint{"R^2", v2(1, 0.5)}, v0});
  const Eigen::VectorXd ref = reference::expm(Eigen::MatrixXd(a) * 1.5) * Eigen::VectorXd(v0);
  EXPECT_LE((Eigen::VectorXd(v.comps) - ref).cwiseAbs().maxCoeff(), 1e-8);
  const auto z = flow::tangent_flow(m, arc, TangentVec{ChartPoint{"R^2", v2(1, 0.5)}, Vec::Zero(2)});
  EXPECT_EQ(z.comps.norm(), 0.0);
}

TEST(CotangentFlow, DriftFreeAdjointIsConstant) {
  const Mode m = drift_mode(v2(1, 1));
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^2", v2(0, 0)}, kZeroLaw, 0.0, 1.0, with_step(0.01));
  const auto adj = flow::cotangent_flow(m, arc, CotangentVec{ChartPoint{"R^2", arc.x_end()}, v2(-2, 2)});
  for (const auto& p : adj.p) EXPECT_EQ(p, v2(-2, 2));
  ASSERT_EQ(adj.t.size(), arc.samples.size());
}

TEST(CotangentFlow, LinearSystemMatchesTransposedExponential) {
  Mat a(3, 3);
  a << 0.1, 0.5, 0, -0.5, 0.1, 0.2, 0.3, 0, -0.4;
  const Mode m = linear_mode(a);
  Vec x0(3);
  x0 << 1, 2, 3;
  const auto arc = flow::integrate_arc(m, ChartPoint{"R^3", x0}, kZeroLaw, 0.0, 2.0, with_step(1e-3));
  Vec pe(3);
  pe << 0.3, -1, 2;
  const auto adj = flow::cotangent_flow(m, arc, CotangentVec{ChartPoint{"R^3", arc.x_end()}, pe});
  for (std::size_t k = 0; k < adj.t.size(); k += 97) {
    const Eigen::VectorXd ref =
        reference::expm(Eigen::MatrixXd(a).transpose() * (2.0 - adj.t[k])) * Eigen::VectorXd(pe);
    EXPECT_LE((Eigen::VectorXd(adj.p[k]) - ref).cwiseAbs().maxCoeff(), 1e-8) << "t = " << adj.t[k];
  }
}

// Tangent/cotangent duality on 25 linear and 25 nonlinear random instances.
TEST(CotangentFlow, DualityWithTangentFlow) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    Mat a(n, n);
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        a(i, j) = 0.5 * nd(rng);
        b(i, j) = trial % 2 ? 0.2 * nd(rng) : 0.0;
      }
    Mode m;
    m.id = "rand";
    m.dynamics = [a, b](const Vec& x, const Vec& u, double t) -> Vec {
      return a * x + b * x.array().sin().matrix() + Vec::Constant(x.size(), u[0] * std::cos(t));
    };
    m.jacobian_x = [a, b](const Vec& x, const Vec&, double) -> Mat {
      return a + b * x.array().cos().matrix().asDiagonal();
    };
    const ControlLaw law = [](double t, const Vec& x, const Vec*) { return Vec::Constant(1, std::tanh(x.sum() + t)); };
    Vec x0(n), v0(n), pe(n);
    for (int i = 0; i < n; ++i) {
      x0[i] = nd(rng);
      v0[i] = nd(rng);
      pe[i] = nd(rng);
    }
    const auto arc = flow::integrate_arc(m, ChartPoint{"R", x0}, law, 0.0, 1.0, with_step(0.01));
    const auto v = flow::tangent_flow(m, arc, TangentVec{ChartPoint{"R", x0}, v0});
    const auto adj = flow::cotangent_flow(m, arc, CotangentVec{ChartPoint{"R", arc.x_end()}, pe});
    const double lhs = adj.p.front().dot(v0);
    const double rhs = pe.dot(v.comps);
    EXPECT_NEAR(lhs, rhs, 1e-8 * (1.0 + std::abs(rhs))) << "trial " << trial;
  }
}

TEST(HybridFlow, Ex2BangControl) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto traj = flow::hybrid_flow(p, {model::constant_law(Vec::Ones(1))}, 1, FlowOptions{});
  ASSERT_EQ(traj.switches.size(), 1u);
  const auto& sw = traj.switches[0];
  EXPECT_NEAR(sw.t, 1.0, 1e-10);
  EXPECT_LE((sw.x_minus - v2(1, 1)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((sw.x_plus - v2(1, 1)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(traj.final_time(), 2.0);
  EXPECT_LE((traj.final_state() - v2(2, 3)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(sw.dn.dn_x.comps, v2(0, 1));
  EXPECT_EQ(sw.dn.dn_t, 0.0);
}

TEST(HybridFlow, Ex1ShiftJump) {
  const auto p = registry_instantiate("EX1_shift_jump");
  const auto traj = flow::hybrid_flow(p, {model::constant_law(Vec::Ones(1))}, 1, FlowOptions{});
  ASSERT_EQ(traj.switches.size(), 1u);
  Vec xp(3), xf(3);
  xp << 1.5, 1.0, 0.5;
  xf << 2.5, 2.0, 1.0;
  EXPECT_LE((traj.switches[0].x_plus - xp).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((traj.final_state() - xf).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HybridFlow, SingleModeHasNoSwitches) {
  const auto p = registry_instantiate("LQR1_single_mode");
  const auto traj = flow::hybrid_flow(p, {model::constant_law(-Vec::Ones(1))}, 0, FlowOptions{});
  EXPECT_TRUE(traj.switches.empty());
  ASSERT_EQ(traj.arcs.size(), 1u);
  EXPECT_NEAR(traj.final_state()[0], 0.5, 1e-12);
}

TEST(HybridFlow, ExtraCrossingIsScheduleViolation) {
  const auto p = registry_instantiate("EX5_three_mode");
  EXPECT_THROW(flow::hybrid_flow(p, {model::constant_law(Vec::Ones(1))}, 1, FlowOptions{}),
               ScheduleViolationError);
  const auto traj = flow::hybrid_flow(p, {model::constant_law(Vec::Ones(1))}, 2, FlowOptions{});
  EXPECT_EQ(traj.switches.size(), 2u);
}

TEST(HybridFlow, BlowUpReportsTime) {
  const auto p = registry_instantiate("STRESS_blowup");
  try {
    flow::hybrid_flow(p, {model::constant_law(Vec::Zero(1))}, 0, FlowOptions{});
    FAIL() << "expected blow-up";
  } catch (const BlowUpError& e) {
    EXPECT_GT(e.time(), 0.99);
    EXPECT_LT(e.time(), 1.1);
  }
}

// TPhi against central differences of the flow map on every registry problem and mode.
TEST(TangentFlow, MatchesFiniteDifferencesOnRegistry) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (const auto& e : registry()) {
    if (e.name == "STRESS_blowup") continue;
    const auto p = registry_instantiate(e.name);
    const Vec u_mid = 0.5 * (p.control_set.lower + p.control_set.upper) +
                      0.3 * (p.control_set.upper - p.control_set.lower);
    const ControlLaw law = model::constant_law(u_mid);
    FlowOptions o;
    o.step = 1e-3 * (p.tf - p.t0);
    for (const auto& mode : p.modes) {
      Vec x0 = 0.5 * (p.box_lo + p.box_hi);
      if (e.name == "EX6_sphere_chart") x0 = v2(0.1, -0.2);
      Vec v(p.n);
      for (int i = 0; i < p.n; ++i) v[i] = nd(rng);
      const auto arc = flow::integrate_arc(mode, p.point(x0), law, p.t0, p.tf, o);
      const Vec tv = flow::tangent_flow(mode, arc, TangentVec{p.point(x0), v}).comps;
      auto phi = [&](const Vec& y) { return flow::integrate_arc(mode, p.point(y), law, p.t0, p.tf, o).x_end(); };
      const Vec fd = reference::directional_fd(phi, x0, v, 1e-5);
      EXPECT_LE((tv - fd).norm(), 1e-4 * v.norm()) << e.name << " mode " << mode.id;
    }
  }
}

// Halving the step shrinks the event-time change by about 2^4.
TEST(LocateEvent, FourthOrderEventTimeConvergence) {
  for (const char* name : {"EX1_shift_jump", "EX2_rate_switch", "EX3_moving_guard", "EX4_timed_jump",
                           "EX6_sphere_chart"}) {
    const auto p = registry_instantiate(name);
    const ControlLaw law = model::constant_law(p.control_set.upper * 0.5);
    double ts[3];
    for (int k = 0; k < 3; ++k) {
      FlowOptions o;
      o.step = 0.05 / std::ldexp(1.0, k);
      o.event_tol = 1e-16;
      const auto traj = flow::hybrid_flow(p, {law}, 1, o);
      ASSERT_EQ(traj.switches.size(), 1u) << name;
      ts[k] = traj.switches[0].t;
    }
    const double d1 = std::abs(ts[0] - ts[1]);
    const double d2 = std::abs(ts[1] - ts[2]);
    EXPECT_LE(d2, 4.0 * d1 / 16.0 + 1e-13) << name << " d1=" << d1 << " d2=" << d2;
    if (std::string(name) == "EX6_sphere_chart") {
      EXPECT_GT(d1, 1e-12);  // nonlinear dynamics: the discretization error is visible
    }
  }
}
