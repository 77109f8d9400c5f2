#pragma once

// Indirect shooting for the boundary-value problem closing the necessary
// conditions: unknowns are the initial costate, the switching times and the
// jump multipliers.

#include "hmp/conditions.hpp"
#include "hmp/integrate.hpp"
#include "hmp/model.hpp"
#include "hmp/oracle.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace hmp {

struct ResidualVector {
  Eigen::VectorXd terminal;  // p(tf) - dh(x(tf))
  Eigen::VectorXd guards;    // gamma_i(x(t_i-), t_i)
  Eigen::VectorXd hjumps;    // dH measured - dH expected (empty when mu is eliminated)

  Eigen::VectorXd stacked() const;
  double inf_norm() const;
};

struct SolveOptions {
  double step = 0.0;  // <= 0 selects 1e-3 (tf - t0)
  double tol = 1e-8;
  int max_iter = 200;
  double fd_step = 1e-7;
  double armijo = 1e-4;
  double min_alpha = 1e-14;
  /// Recompute mu from the jump equation on every pass instead of carrying it
  /// as an unknown; the system shrinks to n + L.
  bool eliminate_mu = false;
  /// Scale guard normals to unit cometric norm (changes mu, not the solution).
  bool normalize_normals = false;
  /// Covectors replacing dN in the costate jump for the value-differential
  /// variants. Estimated from oracle value surfaces when left empty.
  std::vector<SpaceTimeCovector> value_differentials;
  oracle::SurfaceGrid surface;  // spacing/half_width/segments for those surfaces
  OracleOptions surface_oracle;
  Tolerances check;
};

struct ShootingEvaluation {
  ResidualVector residual;
  HybridTrajectory trajectory;
  AdjointTrajectory adjoint;
};

struct SolveResult {
  ShootingState state;
  HybridTrajectory trajectory;
  AdjointTrajectory adjoint;
  HmpReport report;
  double cost = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
};

namespace solver {

/// True when switching times are finite and t0 < t_1 < ... < t_L < tf.
bool admissible(const HybridProblem& problem, const ShootingState& z);

/// Coupled state/costate integration over the given schedule with the
/// pointwise-minimizing control, applying each jump with the given mu.
ShootingEvaluation shoot(const HybridProblem& problem, const ShootingState& z, const SolveOptions& opts = {});

ResidualVector shooting_residual(const HybridProblem& problem, const ShootingState& z,
                                 const SolveOptions& opts = {});

/// Damped Newton with a forward-difference Jacobian. Throws AdmissibilityError,
/// MaxIterationsError, LineSearchStallError or SingularJacobianError.
SolveResult solve(const HybridProblem& problem, const ShootingState& guess, const SolveOptions& opts = {});

/// The registry default guess, or zeros with evenly spaced switching times.
ShootingState default_guess(const HybridProblem& problem);

}  // namespace solver
}  // namespace hmp
