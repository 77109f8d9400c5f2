#include "hmp/errors.hpp"
#include "hmp/oracle.hpp"
#include "hmp/registry.hpp"
#include "hmp/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hmp;

TEST(PiecewiseControl, SegmentsAndRoundTrip) {
  PiecewiseControl c;
  c.segments = 4;
  c.t0 = 0.0;
  c.tf = 2.0;
  c.values.assign(2, Eigen::MatrixXd::Zero(4, 1));
  EXPECT_EQ(c.segment_of(0.0), 0);
  EXPECT_EQ(c.segment_of(0.49), 0);
  EXPECT_EQ(c.segment_of(0.5), 1);
  EXPECT_EQ(c.segment_of(2.0), 3);
  EXPECT_EQ(c.breakpoints(), (std::vector<double>{0.5, 1.0, 1.5}));
  Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(8, 0.0, 7.0);
  c.unflatten(z);
  EXPECT_EQ(c.flatten(), z);
  EXPECT_EQ(c.values[1](2, 0), 6.0);
}

TEST(DirectOracle, SingleModeExhaustive) {
  const auto p = registry_instantiate("LQR1_single_mode");
  const auto sol = oracle::direct_oracle(p, 4, 21);
  EXPECT_TRUE(sol.exhaustive);
  EXPECT_NEAR(sol.cost, 0.25, 1e-6);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(sol.control.values[0](k, 0), -1.0, 1e-9);
  EXPECT_NEAR(sol.cost_gradient_x0[0], 1.0, 5e-3);
}

TEST(DirectOracle, RateSwitchMatchesShooting) {
  const auto p = registry_instantiate("EX2_rate_switch");
  const auto sol = oracle::direct_oracle(p, 8, 21);
  EXPECT_FALSE(sol.exhaustive);
  EXPECT_NEAR(sol.cost, 2.0, 1e-4);
  // The costate at t0 is (-2, 4): moving x2(0) up shortens the slow mode.
  EXPECT_NEAR(sol.cost_gradient_x0[0], -2.0, 5e-3);
  EXPECT_NEAR(sol.cost_gradient_x0[1], 4.0, 5e-3);
  ASSERT_EQ(sol.trajectory.switches.size(), 1u);
}

TEST(DirectOracle, BudgetLimits) {
  const auto p = registry_instantiate("EX2_rate_switch");
  EXPECT_THROW(oracle::direct_oracle(p, 100, 21), ContractError);
  EXPECT_THROW(oracle::direct_oracle(p, 8, 30), ContractError);
  EXPECT_THROW(oracle::direct_oracle(p, 0, 21), ContractError);
}

TEST(DirectOracle, DeterministicForSeed) {
  const auto p = registry_instantiate("EX6_sphere_chart");
  OracleOptions o;
  o.gradient = false;
  o.seed = 9;
  const auto a = oracle::direct_oracle(p, 4, 11, o);
  const auto b = oracle::direct_oracle(p, 4, 11, o);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(a.control.flatten(), b.control.flatten());
}

TEST(DirectOracle, FailingFlowsCostInfinity) {
  const auto p = registry_instantiate("STRESS_blowup");
  PiecewiseControl c;
  c.segments = 1;
  c.t0 = p.t0;
  c.tf = p.tf;
  c.values.assign(1, Eigen::MatrixXd::Zero(1, 1));
  EXPECT_TRUE(std::isinf(oracle::evaluate(p, c, 0.0)));
}

TEST(ValueSurface, ShiftJumpSweepMinimisedAtOptimalCrossing) {
  const auto p = registry_instantiate("EX1_shift_jump");
  oracle::SurfaceGrid g;
  g.center_x = Vec::Zero(3);
  g.center_x << 1.0, 1.0, 0.5;
  g.center_t = 1.0;
  g.spacing = 0.1;
  g.half_width = 4;
  const auto s = oracle::value_surface_oracle(p, g);
  ASSERT_EQ(s.samples.size(), 9u);
  ASSERT_EQ(s.dim(), 1);
  const ValueSurface::Sample* best = nullptr;
  for (const auto& smp : s.samples) {
    EXPECT_TRUE(smp.reachable);
    const double y = smp.x[0];
    EXPECT_NEAR(smp.value, 0.5 * y * y + (2.5 - y) * (2.5 - y) / 3.0, 1e-5) << "x1 = " << y;
    if (!best || smp.value < best->value) best = &smp;
  }
  EXPECT_NEAR(best->x[0], 1.0, 1e-12);
  EXPECT_LE(conditions::dv_covector(s, Vec::Zero(1)).tangential_norm, 5e-3);
}

TEST(ValueSurface, CentreIsProjectedOntoGuard) {
  const auto p = registry_instantiate("EX1_shift_jump");
  oracle::SurfaceGrid g;
  g.center_x = Vec::Zero(3);
  g.center_x << 1.0, 1.05, 0.5;
  g.center_t = 1.0;
  g.half_width = 0;
  const auto s = oracle::value_surface_oracle(p, g);
  ASSERT_EQ(s.samples.size(), 1u);
  EXPECT_LE(std::abs(p.guards[0].value(s.samples[0].x, s.samples[0].t)), 1e-10);
  EXPECT_THROW(conditions::dv_covector(s, Vec::Zero(1)), ContractError);
}

TEST(ValueSurface, MovingGuardTangentialGradientVanishesAtOptimum) {
  const auto p = registry_instantiate("EX3_moving_guard");
  const auto res = solver::solve(p, solver::default_guess(p));
  oracle::SurfaceGrid g;
  g.center_x = res.trajectory.switches[0].x_minus;
  g.center_t = res.trajectory.switches[0].t;
  g.spacing = 0.0125;
  g.half_width = 1;
  const auto s = oracle::value_surface_oracle(p, g);
  EXPECT_TRUE(s.time_varying);
  EXPECT_EQ(s.dim(), 2);
  EXPECT_NEAR(s.basis.col(0).dot(s.normal), 0.0, 1e-14);
  EXPECT_NEAR(s.basis.col(1).dot(s.normal), 0.0, 1e-14);
  EXPECT_LE(conditions::dv_covector(s, Vec::Zero(2)).tangential_norm, 5e-3);
}

TEST(ValueSurface, RejectsBadGrids) {
  const auto p = registry_instantiate("EX1_shift_jump");
  oracle::SurfaceGrid g;
  g.center_x = Vec::Zero(3);
  g.switch_index = 1;
  EXPECT_THROW(oracle::value_surface_oracle(p, g), ContractError);
  g.switch_index = 0;
  g.spacing = 0.0;
  EXPECT_THROW(oracle::value_surface_oracle(p, g), ContractError);
}
