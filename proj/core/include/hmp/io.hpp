#pragma once

// Trajectory CSV: one row per sample, columns t, mode, x1..xn, u1..um,
// p1..pn, H. A switch shows up as two rows sharing t, the pre-jump row in
// the old mode followed by the post-jump row in the new one.

#include "hmp/integrate.hpp"
#include "hmp/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace hmp::io {

/// 17 significant digits, enough for any double to round-trip exactly.
std::string format_double(double v);

/// Throws FormatError unless the whole string is a finite decimal number.
double parse_double(const std::string& text);

/// With `adjoint` the p and H columns are filled, otherwise left blank.
void write_trajectory_csv(std::ostream& out, const HybridProblem& problem, const HybridTrajectory& traj,
                          const AdjointTrajectory* adjoint = nullptr);

struct LoadedTrajectory {
  /// Switch records carry times, states, controls and guard normals only.
  /// Stage controls are rebuilt by linear interpolation of the samples.
  HybridTrajectory trajectory;
  std::optional<AdjointTrajectory> adjoint;
};

/// Throws FormatError on any deviation from the schema: wrong header, wrong
/// column count, row count differing from the declared one, unsorted times,
/// modes out of order.
LoadedTrajectory read_trajectory_csv(std::istream& in, const HybridProblem& problem);

}  // namespace hmp::io
