#include "hmp/conditions.hpp"
#include "hmp/errors.hpp"
#include "hmp/registry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hmp;
namespace cond = hmp::conditions;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

SpaceTimeCovector covector(const Vec& x, const Vec& dx, double dt) {
  return SpaceTimeCovector{CotangentVec{ChartPoint{"R^n", x}, dx}, dt};
}

HybridTrajectory simulate(const HybridProblem& p, const Vec& u, double step = 1e-3) {
  FlowOptions o;
  o.step = step;
  return flow::hybrid_flow(p, {model::constant_law(u)}, p.num_switches(), o);
}

double rel_err(const Vec& a, const Vec& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Hamiltonian, Examples) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const Vec x = v2(0.3, 0.5);
  EXPECT_DOUBLE_EQ(cond::hamiltonian(p.modes[0], x, v2(-2, 1), v1(1)), -1.0);
  EXPECT_DOUBLE_EQ(cond::hamiltonian(p.modes[0], x, v2(0, 0), v1(1)), 0.0);
  EXPECT_DOUBLE_EQ(cond::hamiltonian(p.modes[1], x, v2(-2, 2), v1(1)), 2.0);
}

TEST(MinimizeHamiltonian, BangControl) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const Vec u = cond::minimize_hamiltonian(p.modes[0], v2(0, 0), v2(-2, 1), p.control_set);
  EXPECT_DOUBLE_EQ(u[0], 1.0);
}

TEST(MinimizeHamiltonian, TieGoesToLowerBound) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const Vec u = cond::minimize_hamiltonian(p.modes[0], v2(0, 0), v2(0, 1), p.control_set);
  EXPECT_DOUBLE_EQ(u[0], -1.0);
}

TEST(MinimizeHamiltonian, InteriorQuadratic) {
  const auto p = registry_instantiate("EX3_moving_guard");
  const Vec u = cond::minimize_hamiltonian(p.modes[0], v3(0, 0, 0), v3(-0.3, 0, 1), p.control_set);
  EXPECT_NEAR(u[0], 0.3, 1e-8);
  EXPECT_NEAR(u[1], 0.0, 1e-8);
}

TEST(MinimizeHamiltonian, AgreesWithClosedFormMinimizers) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (const char* name : {"EX1_shift_jump", "EX3_moving_guard", "EX6_sphere_chart"}) {
    const auto p = registry_instantiate(name);
    for (int k = 0; k < 20; ++k) {
      Vec x(p.n);
      Vec pc(p.n);
      for (int i = 0; i < p.n; ++i) {
        x[i] = 0.5 * d(rng);
        pc[i] = d(rng);
      }
      if (p.n == 3) pc[2] = std::abs(pc[2]) + 0.1;
      const Mode& mode = p.modes[k % 2];
      const Vec a = cond::minimize_hamiltonian(mode, x, pc, p.control_set);
      const Vec b = mode.hamiltonian_minimizer(x, pc, 0.0, p.control_set);
      EXPECT_NEAR(cond::hamiltonian(mode, x, pc, a), cond::hamiltonian(mode, x, pc, b), 1e-12) << name;
    }
  }
}

TEST(SwitchingTimeSensitivity, Examples) {
  const Vec x = v2(0, 1);
  const auto dn = covector(x, v2(0, 1), 0.0);
  const TangentVec f{ChartPoint{"R^n", x}, v2(1, 1)};
  EXPECT_DOUBLE_EQ(cond::switching_time_sensitivity(dn, f, TangentVec{f.base, v2(1, 0)}), 0.0);
  EXPECT_DOUBLE_EQ(cond::switching_time_sensitivity(dn, f, TangentVec{f.base, v2(0, 1)}), -1.0);
  const TangentVec tangent{f.base, v2(1, 0)};
  EXPECT_THROW(cond::switching_time_sensitivity(dn, tangent, tangent), TangentialCrossingError);
}

TEST(HamiltonianJumpExpected, Examples) {
  EXPECT_DOUBLE_EQ(cond::hamiltonian_jump_expected(TheoremVariant::TimeInvariant, 2.0, 0.0, 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(cond::hamiltonian_jump_expected(TheoremVariant::TimeVaryingGuard, 2.0, -0.5, 0.0, 0.0), 1.0);
  EXPECT_NEAR(cond::hamiltonian_jump_expected(TheoremVariant::TimeVaryingJump, 2.6, 0.0, -0.6, 0.0), 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(cond::hamiltonian_jump_expected(TheoremVariant::Combined, 2.0, 0.0, -0.5, 0.25), 0.0);
}

TEST(HamiltonianJumpExpected, RejectsInconsistentData) {
  EXPECT_THROW(cond::hamiltonian_jump_expected(TheoremVariant::TimeInvariant, 1.0, 0.3, 0.0, 0.0), ContractError);
  EXPECT_THROW(cond::hamiltonian_jump_expected(TheoremVariant::TimeVaryingGuard, 1.0, 0.3, 0.2, 0.0),
               ContractError);
}

TEST(ComputeMu, RateSwitch) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto c = covector(v2(1, 1), v2(0, 1), 0.0);
  const double mu = cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], v2(1, 1), 1.0, v2(-2, 2),
                                     v1(1), v1(1), c);
  EXPECT_NEAR(mu, 2.0, 1e-14);
}

TEST(ComputeMu, UnchangedDynamicsGiveZero) {
  const auto p = registry_instantiate("EX1_shift_jump");
  const Vec x = v3(1, 1, 0.5);
  const auto c = covector(x, v3(0, 1, 0), 0.0);
  const double mu =
      cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], x, 1.0, v3(-1, 0, 1), v1(1), v1(1), c);
  EXPECT_NEAR(mu, 0.0, 1e-14);
}

TEST(ComputeMu, TimedJump) {
  const auto p = registry_instantiate("EX4_timed_jump");
  ASSERT_EQ(p.variant, TheoremVariant::TimeVaryingJump);
  const auto c = covector(v2(1, 1), v2(0, 1), 0.0);
  const double mu = cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], v2(1, 1), 1.0, v2(-2, 2),
                                     v1(1), v1(1), c);
  EXPECT_NEAR(mu, 2.6, 1e-14);
}

TEST(ComputeMu, ScalesWithCostateAndInverselyWithCovector) {
  const auto p = registry_instantiate("EX6_sphere_chart");
  const Vec x = v2(0.3, 0.4);
  const auto c = covector(x, 2.0 * x, 0.0);
  const Vec pp = v2(-0.7, 1.3);
  const double mu =
      cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], x, 0.4, pp, v1(1), v1(-1), c);
  const double mu_p =
      cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], x, 0.4, 3.0 * pp, v1(1), v1(-1), c);
  const auto c3 = covector(x, 6.0 * x, 0.0);
  const double mu_c =
      cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], x, 0.4, pp, v1(1), v1(-1), c3);
  EXPECT_NEAR(mu_p, 3.0 * mu, 1e-12);
  EXPECT_NEAR(mu_c, mu / 3.0, 1e-12);
}

TEST(ComputeMu, VariantsAgreeWhenTimeTermsVanish) {
  const auto p = registry_instantiate("EX4_timed_jump", {{"jump_rate", 0.0}});
  ASSERT_EQ(p.variant, TheoremVariant::TimeInvariant);
  const auto c = covector(v2(1, 1), v2(0, 1), 0.0);
  const double base = cond::compute_mu(TheoremVariant::TimeInvariant, p.modes[0], p.modes[1], p.jumps[0],
                                       v2(1, 1), 1.0, v2(-2, 2), v1(1), v1(1), c);
  for (auto v : {TheoremVariant::TimeVaryingGuard, TheoremVariant::TimeVaryingJump, TheoremVariant::Combined,
                 TheoremVariant::InteriorOptimal}) {
    EXPECT_DOUBLE_EQ(cond::compute_mu(v, p.modes[0], p.modes[1], p.jumps[0], v2(1, 1), 1.0, v2(-2, 2), v1(1),
                                      v1(1), c),
                     base);
    EXPECT_DOUBLE_EQ(cond::hamiltonian_jump_expected(v, base, 0.0, 0.0, 0.0), 0.0);
  }
}

TEST(ComputeMu, TangentialCovectorThrows) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto c = covector(v2(1, 1), v2(1, -1), 0.0);
  EXPECT_THROW(cond::compute_mu(p.variant, p.modes[0], p.modes[1], p.jumps[0], v2(1, 1), 1.0, v2(-2, 2),
                                v1(1), v1(1), c),
               TangentialCrossingError);
}

TEST(AdjointJumpBackward, Examples) {
  const auto p2 = registry_instantiate("EX2_rate_switch");
  const ChartPoint xm{"R^2", v2(1, 1)};
  const auto c = covector(xm.coords, v2(0, 1), 0.0);
  const auto pm = cond::adjoint_jump_backward(p2.variant, CotangentVec{xm, v2(-2, 2)}, xm, 1.0, c, p2.jumps[0], 2.0);
  EXPECT_NEAR(pm.comps[0], -2.0, 1e-15);
  EXPECT_NEAR(pm.comps[1], 4.0, 1e-15);

  const auto p4 = registry_instantiate("EX4_timed_jump");
  const auto pm4 =
      cond::adjoint_jump_backward(p4.variant, CotangentVec{xm, v2(-2, 2)}, xm, 1.0, c, p4.jumps[0], 2.6);
  EXPECT_NEAR(pm4.comps[0], -2.0, 1e-15);
  EXPECT_NEAR(pm4.comps[1], 4.6, 1e-15);
}

TEST(AdjointJumpForward, InvertsRateSwitch) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const ChartPoint xm{"R^2", v2(1, 1)};
  const auto c = covector(xm.coords, v2(0, 1), 0.0);
  const auto fj = cond::adjoint_jump_forward(p.variant, CotangentVec{xm, v2(-2, 4)}, 1.0, c, p.jumps[0],
                                             p.modes[0], p.modes[1], v1(1), p.control_set);
  EXPECT_NEAR(fj.mu, 2.0, 1e-12);
  EXPECT_NEAR(fj.p_plus.comps[0], -2.0, 1e-12);
  EXPECT_NEAR(fj.p_plus.comps[1], 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(fj.u_plus[0], 1.0);
  EXPECT_NEAR(fj.condition_number, 1.0, 1e-12);
}

TEST(AdjointJumpForward, IdentityWhenNothingChanges) {
  const auto p = registry_instantiate("EX1_shift_jump");
  const ChartPoint xm{"R^3", v3(1, 1, 0.5)};
  const auto c = covector(xm.coords, v3(0, 1, 0), 0.0);
  const Vec pm = v3(-1, 0.4, 1);
  const auto fj = cond::adjoint_jump_forward(p.variant, CotangentVec{xm, pm}, 1.0, c, p.jumps[0], p.modes[0],
                                             p.modes[1], v1(1), p.control_set);
  EXPECT_NEAR(fj.mu, 0.0, 1e-12);
  EXPECT_LT((fj.p_plus.comps - pm).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AdjointJumpForward, SingularJumpThrows) {
  auto p = registry_instantiate("EX2_rate_switch");
  Jump collapse;
  collapse.map = [](const Vec& x, double) -> Vec { return v2(x[0], 1.0); };
  collapse.jacobian_x = [](const Vec&, double) -> Mat {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 1.0;
    return a;
  };
  const ChartPoint xm{"R^2", v2(1, 1)};
  const auto c = covector(xm.coords, v2(0, 1), 0.0);
  EXPECT_THROW(cond::adjoint_jump_forward(p.variant, CotangentVec{xm, v2(-2, 4)}, 1.0, c, collapse, p.modes[0],
                                          p.modes[1], v1(1), p.control_set),
               NonInvertibleJumpError);
}

TEST(AdjointJumpForward, InvertsBackwardJumpOnRandomData) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  struct Case {
    const char* name;
    ParamMap params;
  };
  const Case cases[] = {{"EX4_timed_jump", {{"guard_rate", 0.3}}},
                        {"EX6_sphere_chart", {}},
                        {"EX5_three_mode", {}},
                        {"EX3_moving_guard", {}}};
  for (const auto& cs : cases) {
    const auto p = registry_instantiate(cs.name, cs.params);
    for (int k = 0; k < 25; ++k) {
      Vec x(p.n), pp(p.n), dn(p.n), um(p.m), up(p.m);
      for (int i = 0; i < p.n; ++i) {
        x[i] = 0.5 * d(rng);
        pp[i] = d(rng);
        dn[i] = d(rng);
      }
      for (int i = 0; i < p.m; ++i) {
        um[i] = d(rng);
        up[i] = d(rng);
      }
      um = p.control_set.clamp(um);
      up = p.control_set.clamp(up);
      const double t = 1.0 + 0.1 * d(rng);
      const int j = p.num_switches() - 1;
      const auto c = covector(x, dn, uses_time_normal(p.variant) ? d(rng) : 0.0);
      double mu = 0.0;
      try {
        mu = cond::compute_mu(p.variant, p.modes[j], p.modes[j + 1], p.jumps[j], x, t, pp, um, up, c);
      } catch (const TangentialCrossingError&) {
        continue;
      }
      const ChartPoint xm{p.x0.chart, x};
      const auto pm = cond::adjoint_jump_backward(p.variant, CotangentVec{xm, pp}, xm, t, c, p.jumps[j], mu);
      const auto fj = cond::adjoint_jump_forward(p.variant, pm, t, c, p.jumps[j], p.modes[j], p.modes[j + 1], um,
                                                 p.control_set, &up);
      EXPECT_NEAR(fj.mu, mu, 1e-9 * (1.0 + std::abs(mu))) << cs.name;
      EXPECT_LT(rel_err(fj.p_plus.comps, pp), 1e-9) << cs.name;
    }
  }
}

TEST(ConditionNumber, Examples) {
  EXPECT_DOUBLE_EQ(cond::condition_number(Mat::Identity(3, 3)), 1.0);
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 4.0;
  a(1, 1) = 0.5;
  EXPECT_NEAR(cond::condition_number(a), 8.0, 1e-12);
  EXPECT_TRUE(std::isinf(cond::condition_number(Mat::Zero(2, 2))));
}

TEST(CheckTrajectory, RateSwitchOptimumPasses) {
  const auto p = registry_instantiate("EX2_rate_switch");
  auto traj = simulate(p, v1(1));
  const auto adj = cond::backward_adjoint(p, traj);
  ASSERT_EQ(traj.switches.size(), 1u);
  EXPECT_NEAR(traj.switches[0].mu, 2.0, 1e-9);
  EXPECT_NEAR(adj.arcs[0].p.front()[0], -2.0, 1e-9);
  EXPECT_NEAR(adj.arcs[0].p.front()[1], 4.0, 1e-9);
  const auto rep = cond::check_trajectory(p, traj, adj);
  EXPECT_TRUE(rep.pass) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_LT(rep.max_gap, 1e-12);
  ASSERT_EQ(rep.switches.size(), 1u);
  EXPECT_LT(rep.switches[0].dh_residual, 1e-9);
}

TEST(CheckTrajectory, WrongMultiplierIsFlagged) {
  const auto p = registry_instantiate("EX2_rate_switch");
  auto traj = simulate(p, v1(1));
  const auto adj = cond::backward_adjoint(p, traj);
  traj.switches[0].mu += 0.1;
  const auto rep = cond::check_trajectory(p, traj, adj);
  EXPECT_FALSE(rep.pass);
  EXPECT_NEAR(rep.switches[0].adjoint_jump_residual, 0.1, 1e-9);
  EXPECT_NEAR(rep.switches[0].dh_residual, 0.1, 1e-9);
}

TEST(CheckTrajectory, ZeroCostateIsFlagged) {
  const auto p = registry_instantiate("EX2_rate_switch");
  auto traj = simulate(p, v1(1));
  auto adj = cond::backward_adjoint(p, traj);
  for (auto& arc : adj.arcs) {
    for (auto& v : arc.p) v.setZero();
  }
  traj.switches[0].mu = 0.0;
  const auto rep = cond::check_trajectory(p, traj, adj);
  EXPECT_FALSE(rep.pass);
  bool trivial = false;
  for (const auto& f : rep.failures) trivial |= f.find("vanishes") != std::string::npos;
  EXPECT_TRUE(trivial);
}

TEST(CheckTrajectory, SuboptimalControlFailsMinimization) {
  const auto p = registry_instantiate("EX2_rate_switch");
  auto traj = simulate(p, v1(-1));
  const auto adj = cond::backward_adjoint(p, traj);
  const auto rep = cond::check_trajectory(p, traj, adj);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.max_gap, 1.0);
}

TEST(CheckTrajectory, TimedJumpBalance) {
  const auto p = registry_instantiate("EX4_timed_jump");
  auto traj = simulate(p, v1(1));
  const auto adj = cond::backward_adjoint(p, traj);
  EXPECT_NEAR(traj.switches[0].mu, 2.6, 1e-9);
  const auto rep = cond::check_trajectory(p, traj, adj);
  EXPECT_TRUE(rep.pass) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_NEAR(rep.switches[0].dh_expected, 0.6, 1e-9);
  EXPECT_NEAR(rep.switches[0].dh_measured, 0.6, 1e-9);
}

TEST(CheckTrajectory, MisalignedCostateThrows) {
  const auto p = registry_instantiate("EX2_rate_switch");
  auto traj = simulate(p, v1(1));
  auto adj = cond::backward_adjoint(p, traj);
  adj.arcs[0].p.pop_back();
  adj.arcs[0].t.pop_back();
  EXPECT_THROW(cond::check_trajectory(p, traj, adj), ContractError);
}

TEST(JumpMultiplier, MatchesTerminalPairingForm) {
  // With p+ transported back from dh, mu equals <dh, TPhi (f+ - Dzeta f-)> / <dn, f->.
  for (const char* name : {"EX6_sphere_chart", "EX2_rate_switch", "EX4_timed_jump"}) {
    const auto p = registry_instantiate(name);
    auto traj = simulate(p, v1(1));
    ASSERT_EQ(traj.switches.size(), 1u) << name;
    const auto adj = cond::backward_adjoint(p, traj);
    const auto& sw = traj.switches[0];
    const Vec fm = p.modes[0].f(sw.x_minus, sw.u_minus, sw.t);
    const Vec fp = p.modes[1].f(sw.x_plus, sw.u_plus, sw.t);
    const Mat dz = p.jumps[0].jacobian(sw.x_minus, sw.t);
    const Vec w = fp - dz * fm - p.jumps[0].time_derivative(sw.x_minus, sw.t);
    const auto moved = flow::tangent_flow(p.modes[1], traj.arcs[1], TangentVec{p.point(sw.x_plus), w});
    const Vec dh = p.terminal_cost.gradient(traj.final_state());
    const double closed = dh.dot(moved.comps) / (sw.dn.dn_x.comps.dot(fm) + sw.dn.dn_t);
    EXPECT_NEAR(sw.mu, closed, 1e-10 * (1.0 + std::abs(closed))) << name;
  }
}

TEST(Needle, RateSwitchExample) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto traj = simulate(p, v1(1));
  const NeedleSpec s{0.5, v1(-1), 0.0};
  const auto v = cond::needle_terminal_variation(p, traj, s);
  EXPECT_NEAR(v.comps[0], -2.0, 1e-9);
  EXPECT_NEAR(v.comps[1], 0.0, 1e-9);
  const Vec fd = cond::needle_fd_richardson(p, traj, s, 1e-3);
  EXPECT_LT(rel_err(v.comps, fd), 1e-6);
}

TEST(Needle, SingleModeMatchesFiniteDifferences) {
  const auto p = registry_instantiate("LQR1_single_mode");
  const auto traj = simulate(p, v1(-0.5));
  const NeedleSpec s{0.25, v1(1), 0.0};
  const auto v = cond::needle_terminal_variation(p, traj, s);
  EXPECT_NEAR(v.comps[0], 1.5, 1e-9);
}

TEST(Needle, InvalidSpecsThrow) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto traj = simulate(p, v1(1));
  EXPECT_THROW(cond::needle_terminal_variation(p, traj, NeedleSpec{0.5, v1(2), 0.0}), ContractError);
  EXPECT_THROW(cond::needle_terminal_variation(p, traj, NeedleSpec{1.0, v1(0), 0.0}), ContractError);
  EXPECT_THROW(cond::needle_terminal_variation(p, traj, NeedleSpec{2.5, v1(0), 0.0}), ContractError);
  EXPECT_THROW(cond::validate_needle(p, traj, NeedleSpec{1.001, v1(0), 0.01}), ContractError);
}

TEST(Needle, RandomNeedlesMatchFiniteDifferencesAcrossRegistry) {
  for (const char* name : {"EX1_shift_jump", "EX2_rate_switch", "EX3_moving_guard", "EX4_timed_jump",
                           "EX5_three_mode", "EX6_sphere_chart"}) {
    const auto p = registry_instantiate(name);
    const Vec u = Vec::Constant(p.m, 0.5);
    const auto traj = simulate(p, u);
    const auto specs = cond::random_needles(p, traj, 4, 42);
    for (const auto& s : specs) {
      const Vec a = cond::needle_terminal_variation(p, traj, s).comps;
      const Vec fd = cond::needle_fd_richardson(p, traj, s, 1e-3);
      EXPECT_LE((a - fd).cwiseAbs().maxCoeff(), 1e-3 * std::max(a.cwiseAbs().maxCoeff(), 1.0))
          << name << " t1 = " << s.t1;
    }
  }
}

TEST(Needle, RandomNeedlesAreSeededAndAvoidSwitches) {
  const auto p = registry_instantiate("EX5_three_mode");
  const auto traj = simulate(p, v1(1));
  const auto a = cond::random_needles(p, traj, 30, 5);
  const auto b = cond::random_needles(p, traj, 30, 5);
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].t1, b[k].t1);
    EXPECT_EQ(a[k].u1[0], b[k].u1[0]);
    EXPECT_NO_THROW(cond::validate_needle(p, traj, a[k], 0.02 * (p.tf - p.t0)));
  }
}

TEST(Cone, OptimumPairsNonNegatively) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto traj = simulate(p, v1(1));
  const auto rep = cond::cone_nonnegativity(p, traj, {NeedleSpec{0.5, v1(-1), 0.0}, NeedleSpec{1.5, v1(1), 0.0}});
  ASSERT_EQ(rep.pairings.size(), 2u);
  EXPECT_NEAR(rep.pairings[0], 4.0, 1e-9);
  EXPECT_NEAR(rep.pairings[1], 0.0, 1e-12);
  EXPECT_TRUE(rep.pass);
}

TEST(Cone, SuboptimalControlIsFlagged) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto traj = simulate(p, v1(-1));
  const auto rep = cond::cone_nonnegativity(p, traj, {NeedleSpec{0.5, v1(1), 0.0}});
  EXPECT_FALSE(rep.pass);
  EXPECT_NEAR(rep.min_pairing, -20.0, 1e-8);
  ASSERT_EQ(rep.violations.size(), 1u);
}

namespace {

ValueSurface line_surface(const std::function<double(double)>& value) {
  ValueSurface s;
  s.n = 2;
  s.center_x = v2(0, 1);
  s.basis = Mat::Zero(3, 1);
  s.basis(0, 0) = 1.0;
  s.normal = Vec::Zero(3);
  s.normal[1] = 1.0;
  s.spacing = 0.1;
  s.half_width = 2;
  for (int k = -2; k <= 2; ++k) {
    ValueSurface::Sample smp;
    smp.index = {k};
    smp.y = v1(k * s.spacing);
    smp.x = v2(k * s.spacing, 1);
    smp.value = value(k * s.spacing);
    smp.reachable = true;
    s.samples.push_back(smp);
  }
  return s;
}

}  // namespace

TEST(DvCovector, QuadraticSurface) {
  const auto s = line_surface([](double y) { return y * y + 3.0 * y; });
  const auto dv = cond::dv_covector(s, v1(0.0));
  EXPECT_NEAR(dv.tangential[0], 3.0, 1e-12);
  EXPECT_NEAR(dv.dv_x[0], 3.0, 1e-12);
  EXPECT_NEAR(dv.dv_x[1], 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(dv.dv_t, 0.0);
  const auto off = cond::dv_covector(s, v1(0.1));
  EXPECT_NEAR(off.tangential[0], 3.2, 1e-12);
}

TEST(DvCovector, LinearSurfaceAndMissingNeighbours) {
  const auto s = line_surface([](double y) { return -2.0 * y + 1.0; });
  EXPECT_NEAR(cond::dv_covector(s, v1(-0.1)).tangential[0], -2.0, 1e-12);
  EXPECT_THROW(cond::dv_covector(s, v1(0.2)), ContractError);
  auto holed = s;
  holed.samples[1].reachable = false;
  EXPECT_THROW(cond::dv_covector(holed, v1(0.0)), ContractError);
}
