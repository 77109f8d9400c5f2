#include "hmp/conditions.hpp"
#include "hmp/integrate.hpp"
#include "hmp/oracle.hpp"
#include "hmp/registry.hpp"
#include "hmp/solver.hpp"

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

using namespace hmp;

namespace {

const std::vector<std::string>& problems() {
  static const std::vector<std::string> names = {"EX1_shift_jump", "EX2_rate_switch", "EX3_moving_guard",
                                                 "EX4_timed_jump", "EX5_three_mode", "EX6_sphere_chart",
                                                 "LQR1_single_mode"};
  return names;
}

void BM_HybridFlow(benchmark::State& state) {
  const auto p = registry_instantiate("EX6_sphere_chart");
  const ControlLaw law = model::constant_law(p.control_set.upper * 0.5);
  FlowOptions o;
  o.step = (p.tf - p.t0) / static_cast<double>(state.range(0));
  for (auto _ : state) {
    auto traj = flow::hybrid_flow(p, {law}, p.num_switches(), o);
    benchmark::DoNotOptimize(traj.final_state());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HybridFlow)->Arg(1000)->Arg(10000);

void BM_Solve(benchmark::State& state) {
  const auto& name = problems()[static_cast<std::size_t>(state.range(0))];
  const auto p = registry_instantiate(name);
  const auto guess = solver::default_guess(p);
  for (auto _ : state) {
    auto res = solver::solve(p, guess);
    benchmark::DoNotOptimize(res.cost);
  }
  state.SetLabel(name);
}
BENCHMARK(BM_Solve)->DenseRange(0, 6)->Unit(benchmark::kMillisecond);

void BM_CheckTrajectory(benchmark::State& state) {
  const auto p = registry_instantiate("EX5_three_mode");
  const auto res = solver::solve(p, solver::default_guess(p));
  for (auto _ : state) {
    auto rep = conditions::check_trajectory(p, res.trajectory, res.adjoint);
    benchmark::DoNotOptimize(rep.pass);
  }
}
BENCHMARK(BM_CheckTrajectory)->Unit(benchmark::kMillisecond);

void BM_NeedleVariation(benchmark::State& state) {
  const auto p = registry_instantiate("EX3_moving_guard");
  const auto res = solver::solve(p, solver::default_guess(p));
  const auto specs = conditions::random_needles(p, res.trajectory, 64, 1);
  std::size_t k = 0;
  for (auto _ : state) {
    auto v = conditions::needle_terminal_variation(p, res.trajectory, specs[k++ % specs.size()]);
    benchmark::DoNotOptimize(v.comps);
  }
}
BENCHMARK(BM_NeedleVariation)->Unit(benchmark::kMicrosecond);

void BM_DirectOracle(benchmark::State& state) {
  const auto p = registry_instantiate("EX2_rate_switch");
  OracleOptions o;
  o.gradient = false;
  for (auto _ : state) {
    auto sol = oracle::direct_oracle(p, static_cast<int>(state.range(0)), 11, o);
    benchmark::DoNotOptimize(sol.cost);
    state.counters["evaluations"] = static_cast<double>(sol.evaluations);
  }
}
BENCHMARK(BM_DirectOracle)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ValueSurface(benchmark::State& state) {
  const auto p = registry_instantiate("EX1_shift_jump");
  oracle::SurfaceGrid g;
  g.center_x = Vec::Zero(3);
  g.center_x << 1.0, 1.0, 0.5;
  g.center_t = 1.0;
  g.spacing = 0.05;
  g.half_width = 1;
  for (auto _ : state) {
    auto s = oracle::value_surface_oracle(p, g);
    benchmark::DoNotOptimize(s.samples.front().value);
  }
}
BENCHMARK(BM_ValueSurface)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
