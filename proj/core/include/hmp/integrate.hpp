#pragma once

// Fixed-step RK4 flows: hybrid state integration with guard events and jumps,
// and the variational (tangent) and adjoint (cotangent) flows along recorded arcs.

#include "hmp/geometry.hpp"
#include "hmp/model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace hmp {

struct FlowOptions {
  double step = 0.0;         // <= 0 selects 1e-3 (tf - t0) where a horizon is known
  double event_tol = 1e-10;  // |gamma| <= event_tol (1 + |gamma| scale)
  int event_max_iter = 80;
  /// Times at which the control law may jump. Steps never straddle them and
  /// the law is evaluated one-sidedly there.
  std::vector<double> breakpoints;
  /// Controls returned by a law are clamped into this box when present.
  std::optional<ControlSet> control_bounds;
};

struct ArcSample {
  double t = 0.0;
  Vec x;
  Vec u;
};

struct Arc {
  int mode = 0;
  std::string mode_id;
  double t_start = 0.0;
  double t_end = 0.0;
  double step = 0.0;
  std::vector<ArcSample> samples;
  /// Controls used at the four RK stages of each step (samples.size() - 1 entries).
  std::vector<std::array<Vec, 4>> stage_controls;
  /// Costate at each sample when integrated as a coupled Hamiltonian system.
  std::vector<Vec> costate;

  const Vec& x_end() const { return samples.back().x; }
};

struct SwitchRecord {
  int index = 0;
  double t = 0.0;
  Vec x_minus;
  Vec x_plus;
  Vec u_minus;
  Vec u_plus;
  SpaceTimeCovector dn;
  /// Covector multiplying mu in the costate jump: dn, or the estimated value
  /// differential for the InteriorOptimal and Combined variants.
  SpaceTimeCovector jump_covector;
  double mu = 0.0;
  double dstar_t_zeta = 0.0;  // <p+, D_t zeta>
  double dstar_t_v = 0.0;     // time part of the value differential (Combined only)
  double dh_expected = 0.0;
  double dh_measured = 0.0;
};

struct HybridTrajectory {
  std::vector<Arc> arcs;
  std::vector<SwitchRecord> switches;

  const Vec& final_state() const { return arcs.back().x_end(); }
  double final_time() const { return arcs.back().t_end; }
};

struct AdjointArc {
  std::vector<double> t;
  std::vector<Vec> p;
};

struct AdjointTrajectory {
  std::vector<AdjointArc> arcs;
};

struct EventResult {
  bool found = false;
  double t = 0.0;
  Vec x_minus;
  Vec u_minus;
  Vec p_minus;           // only for coupled arcs
  int interval = -1;     // index of the bracketing sample
  std::array<Vec, 4> stage_controls;  // of the partial step reaching t
};

namespace flow {

/// Resolves the default step for a horizon.
double default_step(double t0, double tf, double step);

/// RK4 from t0 to t1 (last step shortened). When `monitor` is given the
/// integration stops after the first step across which the guard changes sign.
/// Throws ContractError for step <= 0 and BlowUpError for non-finite states.
Arc integrate_arc(const Mode& mode, const ChartPoint& x0, const ControlLaw& law, double t0,
                  double t1, const FlowOptions& opts, const Guard* monitor = nullptr);

/// Same, for the coupled system x' = f, p' = -(df/dx)^T p with u = law(t, x, p).
Arc integrate_coupled(const Mode& mode, const ChartPoint& x0, const Vec& p0, const ControlLaw& law,
                      double t0, double t1, const FlowOptions& opts);

/// First sign change of the guard along the arc, refined by bisection on a
/// partial RK4 step from the bracketing sample. Throws TangentialCrossingError
/// when |d gamma / dt| along the flow is below 1e-8 at the root.
EventResult locate_event(const Mode& mode, const ControlLaw& law, const Guard& guard,
                         const Arc& arc, const FlowOptions& opts);

/// Cuts the arc at a located event (replacing the samples after it).
void truncate_at_event(Arc& arc, const EventResult& ev);

/// Variational flow V' = (df/dx) V along the recorded arc with the recorded
/// stage controls; exact derivative of the discrete RK4 map.
TangentVec tangent_flow(const Mode& mode, const Arc& arc, const TangentVec& v0);

/// Adjoint flow p' = -(df/dx)^T p backwards along the arc. Implemented as the
/// transpose of the discrete tangent map, so pairing duality is exact.
AdjointArc cotangent_flow(const Mode& mode, const Arc& arc, const CotangentVec& p_end);

/// Composes arcs, event location and jumps along the fixed mode sequence.
/// Throws ScheduleViolationError on more than min(L, max_switches) crossings.
HybridTrajectory hybrid_flow(const HybridProblem& problem, const std::vector<ControlLaw>& laws,
                             int max_switches, const FlowOptions& opts);

/// Cubic Hermite state interpolation between samples.
Vec state_at(const Mode& mode, const Arc& arc, double t);

/// Piecewise-linear interpolation of the sampled controls, held constant
/// outside the arc.
Vec control_at(const Arc& arc, double t);

/// Replays a recorded trajectory's controls, one law per arc.
std::vector<ControlLaw> replay_laws(const HybridTrajectory& traj);

/// Index of the sample interval containing t (clamped to the arc).
int interval_of(const Arc& arc, double t);

}  // namespace flow
}  // namespace hmp
