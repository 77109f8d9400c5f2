#pragma once

// Direct-transcription oracles: piecewise-constant controls searched by brute
// force, used as independent evidence of optimality and to sample the value
// function on a switching surface.

#include "hmp/conditions.hpp"
#include "hmp/integrate.hpp"
#include "hmp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace hmp {

/// One control function per mode, constant on `segments` uniform pieces of
/// [t0, tf]. The mode active at time t uses its own function, so the control
/// on an arc does not depend on where the switching times fall.
struct PiecewiseControl {
  int segments = 1;
  double t0 = 0.0;
  double tf = 1.0;
  std::vector<Eigen::MatrixXd> values;  // per mode: segments x m

  int segment_of(double t) const;
  std::vector<double> breakpoints() const;
  std::vector<ControlLaw> laws() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& z);
};

struct OracleOptions {
  std::uint64_t seed = 0;
  int restarts = 3;
  double step = 0.0;          // <= 0 selects 5e-3 (tf - t0)
  bool polish = true;         // quasi-Newton polish after the grid search
  bool gradient = true;       // finite-difference gradient of the optimal cost in x0
  double fd_step_x0 = 1e-5;
};

struct OracleSolution {
  int segments = 0;
  int grid_points = 0;
  bool exhaustive = false;
  PiecewiseControl control;
  double cost = 0.0;
  Vec cost_gradient_x0;
  HybridTrajectory trajectory;
  long evaluations = 0;
};

namespace oracle {

inline constexpr int kMaxSegments = 8;
inline constexpr int kMaxGridPoints = 21;
inline constexpr int kMaxControlDim = 2;

/// Terminal cost of the natural hybrid flow under `control`; +inf when the
/// flow fails or does not traverse the full mode sequence.
double evaluate(const HybridProblem& problem, const PiecewiseControl& control, double step,
                HybridTrajectory* out = nullptr);

/// Grid search (exhaustive up to 1e6 combinations, coordinate descent with
/// restarts above), golden-section refinement per coordinate, then a polish.
/// Throws ContractError when N, G or m exceed the documented limits.
OracleSolution direct_oracle(const HybridProblem& problem, int segments, int grid_points,
                             const OracleOptions& opts = {});

struct SurfaceGrid {
  int switch_index = 0;
  Vec center_x;
  double center_t = 0.0;
  double spacing = 0.02;
  int half_width = 2;
  int segments = 2;  // control pieces per mode for the penalised solves
};

/// Samples v(y, tau) on a chart of guard `switch_index` around the centre:
/// the best terminal cost over controls whose crossing lands on the grid
/// point, reachability imposed by a 1e6-weighted penalty. Accumulator
/// coordinates are left free, and so is the crossing time for static guards.
ValueSurface value_surface_oracle(const HybridProblem& problem, const SurfaceGrid& grid,
                                  const OracleOptions& opts = {});

}  // namespace oracle
}  // namespace hmp
