#pragma once

// Necessary conditions as executable checks: pointwise Hamiltonian
// minimization, jump multipliers, costate jumps, Hamiltonian jump laws, needle
// variations, the terminal cone test and value-differential estimates.

#include "hmp/integrate.hpp"
#include "hmp/model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hmp {

struct Tolerances {
  double min_gap = 1e-6;          // H(u) - min H
  double ode = 1e-6;              // adjoint re-integration
  double transversality = 1e-8;   // |p(tf) - dh|
  double hamiltonian = 1e-6;      // |dH measured - dH expected|
  double guard = 1e-8;            // |gamma(x-, t)|
  double jump = 1e-8;             // |x+ - zeta(x-, t)| and costate jump reconstruction
  double nontrivial = 1e-12;      // max |p| must exceed this
  double cone = 1e-6;             // needle pairings must be >= -cone
};

struct SwitchCheck {
  int index = 0;
  double t = 0.0;
  double mu = 0.0;
  double guard_residual = 0.0;
  double state_jump_residual = 0.0;
  double adjoint_jump_residual = 0.0;
  double dh_expected = 0.0;
  double dh_measured = 0.0;
  double dh_residual = 0.0;
  double jump_condition_number = 1.0;
};

struct HmpReport {
  std::vector<double> arc_ode_residual;
  std::vector<double> gap_times;
  std::vector<double> gaps;  // H(u sampled) - H(grid minimizer), one per sample
  double max_gap = 0.0;
  double transversality_residual = 0.0;
  std::vector<SwitchCheck> switches;
  double max_costate = 0.0;
  std::vector<std::string> failures;
  Tolerances tolerances;
  bool pass = false;
};

struct NeedleSpec {
  double t1 = 0.0;
  Vec u1;
  double epsilon = 0.0;
};

struct ConeReport {
  std::vector<double> pairings;
  std::vector<int> violations;
  double min_pairing = 0.0;
  bool pass = true;
};

/// Sampled value function on a chart of the switching surface around a
/// reference crossing. The chart is affine: point(y) = center + basis y in
/// space-time coordinates (x components, then t), projected onto the guard.
struct ValueSurface {
  struct Sample {
    std::vector<int> index;  // grid multi-index, offsets from the centre
    Vec y;                   // chart parameters
    Vec x;                   // projected point on the guard
    double t = 0.0;          // crossing time (grid coordinate when time-varying)
    double value = 0.0;
    double residual = 0.0;   // reachability residual of the penalised solve
    bool reachable = false;
  };

  int n = 0;                 // state dimension
  bool time_varying = false;
  Vec center_x;
  double center_t = 0.0;
  Mat basis;                 // (n + 1) x k, orthonormal, zero rows for excluded coordinates
  Vec normal;                // (n + 1), unit space-time normal of the guard
  double spacing = 0.0;
  int half_width = 0;        // grid nodes per side
  std::vector<Sample> samples;

  int dim() const { return static_cast<int>(basis.cols()); }
  const Sample* find(const std::vector<int>& index) const;
};

struct DvEstimate {
  Vec tangential;      // dv along the chart directions
  double tangential_norm = 0.0;
  Vec dv_x;            // space part of the estimated differential
  double dv_t = 0.0;   // D*_t v
  double normal = 1.0; // normal component (fixed to one; mu absorbs the scale)
};

namespace conditions {

double hamiltonian(const Mode& mode, const Vec& x, const Vec& p, const Vec& u, double t = 0.0);

/// Grid of 21 points per control dimension, then golden-section refinement
/// per coordinate to 1e-10. Ties resolve to the lexicographically smallest u.
Vec minimize_hamiltonian(const Mode& mode, const Vec& x, const Vec& p, const ControlSet& set,
                         double t = 0.0);

/// d t_s / d eps = -<dN_x, delta> / (<dN_x, f-> + dN_t).
double switching_time_sensitivity(const SpaceTimeCovector& dn, const TangentVec& f_minus,
                                  const TangentVec& propagated_delta);

/// Predicted H_{q_i}(t-) - H_{q_{i+1}}(t+) for the variant.
double hamiltonian_jump_expected(TheoremVariant variant, double mu, double dn_t, double dstar_t_zeta_p,
                                 double dstar_t_v);

/// Multiplier solving the variant's Hamiltonian jump equation. `c` is the
/// guard normal, or the value-differential covector for InteriorOptimal and
/// Combined.
double compute_mu(TheoremVariant variant, const Mode& q_minus, const Mode& q_plus, const Jump& jump,
                  const Vec& x_minus, double t_s, const Vec& p_plus, const Vec& u_minus,
                  const Vec& u_plus, const SpaceTimeCovector& c);

/// p- = D zeta^T p+ + mu c_x.
CotangentVec adjoint_jump_backward(TheoremVariant variant, const CotangentVec& p_plus,
                                   const ChartPoint& x_minus, double t_s, const SpaceTimeCovector& c,
                                   const Jump& jump, double mu);

struct ForwardJump {
  CotangentVec p_plus;
  double mu = 0.0;
  Vec u_plus;
  double condition_number = 1.0;
};

/// Inverts the backward jump. u+ is the q_plus Hamiltonian minimizer at the
/// returned p+ (fixed point, at most 20 iterations) unless `fixed_u_plus` is
/// given. Throws NonInvertibleJumpError or TangentialCrossingError.
ForwardJump adjoint_jump_forward(TheoremVariant variant, const CotangentVec& p_minus, double t_s,
                                 const SpaceTimeCovector& c, const Jump& jump, const Mode& q_minus,
                                 const Mode& q_plus, const Vec& u_minus, const ControlSet& set,
                                 const Vec* fixed_u_plus = nullptr);

/// Costate of a recorded trajectory obtained by sweeping backwards from the
/// transversality condition through every arc and jump. Fills in each
/// switch's mu (and the jump data derived from it) along the way.
AdjointTrajectory backward_adjoint(const HybridProblem& problem, HybridTrajectory& traj);

/// Condition number of a jump Jacobian (2-norm, via SVD).
double condition_number(const Mat& a);

/// Evaluates every condition on a trajectory / costate pair using only the
/// sampled data, so a trajectory read back from disk checks identically.
HmpReport check_trajectory(const HybridProblem& problem, const HybridTrajectory& traj,
                           const AdjointTrajectory& adjoint, const Tolerances& tol = {});

/// Throws ContractError unless the needle time lies strictly inside an arc,
/// away from switches by `margin`, and u1 is admissible.
int validate_needle(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                    double margin = 0.0);

/// First-order terminal effect of a needle: tangent flows, jump pushforwards
/// and switching-time corrections through every downstream switch.
TangentVec needle_terminal_variation(const HybridProblem& problem, const HybridTrajectory& traj,
                                     const NeedleSpec& spec);

/// (x_eps(tf) - x(tf)) / eps by re-simulation with the replayed controls and
/// u1 on [t1 - eps, t1].
Vec needle_fd_variation(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                        double eps);

/// Richardson combination (10 D(eps/10) - D(eps)) / 9.
Vec needle_fd_richardson(const HybridProblem& problem, const HybridTrajectory& traj, const NeedleSpec& spec,
                         double eps);

/// Seeded random needle specs whose windows [t1 - max_eps, t1] avoid switches.
std::vector<NeedleSpec> random_needles(const HybridProblem& problem, const HybridTrajectory& traj, int count,
                                       std::uint64_t seed, double max_eps = 1e-3);

ConeReport cone_nonnegativity(const HybridProblem& problem, const HybridTrajectory& traj,
                              const std::vector<NeedleSpec>& specs, double tol_cone = 1e-6);

/// Central-difference differential of the sampled value at the node nearest
/// `y`. Throws ContractError when the neighbouring nodes are missing.
DvEstimate dv_covector(const ValueSurface& surface, const Vec& y);

}  // namespace conditions
}  // namespace hmp
