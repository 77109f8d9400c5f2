#pragma once

// Declarative impulsive hybrid optimal control problems in Mayer form.

#include "hmp/geometry.hpp"
#include "hmp/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hmp {

struct ControlSet {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Vec clamp(const Vec& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Vec& u, double tol = 0.0) const;
};

using DynamicsFn = std::function<Vec(const Vec& x, const Vec& u, double t)>;
using DynamicsJacobianFn = std::function<Mat(const Vec& x, const Vec& u, double t)>;
/// Closed-form argmin over the control set of <p, f(x, u, t)>.
using MinimizerFn = std::function<Vec(const Vec& x, const Vec& p, double t, const ControlSet& set)>;

/// Control law evaluated at every integrator stage. `p` is null when no
/// costate is propagated alongside the state.
using ControlLaw = std::function<Vec(double t, const Vec& x, const Vec* p)>;

struct Mode {
  std::string id;
  DynamicsFn dynamics;
  DynamicsJacobianFn jacobian_x;     // optional; finite differences otherwise
  MinimizerFn hamiltonian_minimizer;  // optional fast path for the shooting integrator

  Vec f(const Vec& x, const Vec& u, double t) const { return dynamics(x, u, t); }
  Mat dfdx(const Vec& x, const Vec& u, double t) const;
};

struct GuardGradient {
  Vec dx;
  double dt = 0.0;
};

/// Codimension-one switching surface {gamma(x, t) = 0}.
struct Guard {
  std::function<double(const Vec& x, double t)> fn;
  std::function<GuardGradient(const Vec& x, double t)> grad;  // optional
  bool time_varying = false;

  double value(const Vec& x, double t) const { return fn(x, t); }
  GuardGradient gradient(const Vec& x, double t) const;
};

/// State reset x+ = zeta(x-, t).
struct Jump {
  std::function<Vec(const Vec& x, double t)> map;
  std::function<Mat(const Vec& x, double t)> jacobian_x;  // optional
  std::function<Vec(const Vec& x, double t)> d_t;         // optional
  bool time_varying = false;

  Vec apply(const Vec& x, double t) const { return map(x, t); }
  Mat jacobian(const Vec& x, double t) const;
  /// Zero for time-invariant jumps.
  Vec time_derivative(const Vec& x, double t) const;

  static Jump identity();
};

struct TerminalCost {
  std::function<double(const Vec& x)> fn;
  std::function<Vec(const Vec& x)> grad;  // optional

  double value(const Vec& x) const { return fn(x); }
  Vec gradient(const Vec& x) const;
};

/// Unknowns of the indirect shooting problem: initial costate, switching
/// times and jump multipliers.
struct ShootingState {
  Vec p0;
  std::vector<double> switch_times;
  std::vector<double> mus;
};

struct HybridProblem {
  std::string name;
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  std::vector<Mode> modes;    // q_0 .. q_L
  std::vector<Guard> guards;  // guard i separates mode i from mode i+1
  std::vector<Jump> jumps;
  ControlSet control_set;
  TerminalCost terminal_cost;
  ChartPoint x0;
  double t0 = 0.0;
  double tf = 1.0;
  MetricField metric;
  TheoremVariant variant = TheoremVariant::TimeInvariant;

  /// Indices of augmented running-cost states. They are excluded from the
  /// switching-surface charts used for value-function sampling.
  std::vector<int> cost_accumulators;
  /// Box used by smoothness probes.
  Vec box_lo;
  Vec box_hi;

  std::optional<ShootingState> default_guess;
  /// Per-mode control laws of a deliberately suboptimal policy, when the
  /// registry entry documents one.
  std::vector<ControlLaw> suboptimal_controls;

  int num_switches() const { return static_cast<int>(guards.size()); }
  ChartPoint point(const Vec& coords) const { return ChartPoint{x0.chart, coords}; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

namespace model {

/// Structural checks, finite-difference smoothness probes of registered
/// derivatives, and theorem-variant consistency. Never throws for a bad
/// problem; the report carries every violation found.
ValidationReport validate(const HybridProblem& problem);

/// Control law returning a constant control for every mode.
ControlLaw constant_law(const Vec& u);

}  // namespace model
}  // namespace hmp
