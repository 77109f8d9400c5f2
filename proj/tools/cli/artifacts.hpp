#pragma once

// JSON artifacts written next to the trajectory CSV.

#include "hmp/conditions.hpp"
#include "hmp/integrate.hpp"
#include "hmp/oracle.hpp"
#include "hmp/solver.hpp"

#include <json.hpp>

#include <string>

namespace hmp::cli {

using nlohmann::json;

json to_json(const Vec& v);
Vec vec_from_json(const json& j, int size, const std::string& where);

/// [{i, t_i, x_minus, x_plus}], plus multipliers and jump covectors when `with_mu`.
json switches_json(const HybridTrajectory& traj, bool with_mu);

/// Copies mu and the jump covector of each record into `traj`, whose switch
/// times must agree. Throws FormatError on schema violations.
void apply_switches_json(const json& j, HybridTrajectory& traj);

json report_json(const HmpReport& report);
json solver_json(const SolveResult& result);

/// Stable text: two-space indent and a trailing newline.
std::string dump(const json& j);

}  // namespace hmp::cli
