#pragma once

// Run configuration: a JSON document naming a registry problem plus numeric
// overrides and per-command blocks. Unknown keys anywhere are an error.

#include "hmp/conditions.hpp"
#include "hmp/errors.hpp"
#include "hmp/oracle.hpp"
#include "hmp/registry.hpp"
#include "hmp/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hmp::cli {

/// Usage or configuration problems; exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SimulateBlock {
  std::optional<Vec> control;  // constant control for every mode
  bool suboptimal = false;     // registry's documented suboptimal policy
  double step = 0.0;
};

struct NeedleBlock {
  int count = 200;               // random specs when `specs` is empty
  std::vector<NeedleSpec> specs;
  double max_epsilon = 1e-3;     // window reserved in front of random needle times
  double fd_epsilon = 1e-3;      // Richardson pair fd_epsilon, fd_epsilon / 10
  double fd_tol = 1e-3;          // relative gap, unit floor
};

struct SurfaceBlock {
  int switch_index = 0;
  std::optional<Vec> center_x;   // defaults to the solved crossing
  std::optional<double> center_t;
  double spacing = 0.02;
  int half_width = 2;
  int segments = 2;
};

struct OracleBlock {
  int segments = 8;
  int grid_points = 21;
  int restarts = 3;
  bool gradient = true;
  std::optional<SurfaceBlock> surface;
};

struct RunConfig {
  std::string problem;
  ParamMap params;
  std::optional<TheoremVariant> variant;
  std::optional<double> t0;
  std::optional<double> tf;
  std::uint64_t seed = 0;
  SolveOptions solver;
  std::optional<ShootingState> guess;
  SimulateBlock simulate;
  NeedleBlock needle;
  OracleBlock oracle;
  std::optional<std::string> out;
  std::optional<std::string> bundle;
  std::string canonical;  // normalised JSON text, hashed into provenance
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Registry instance with overrides applied; throws ConfigError listing
/// every validation violation.
HybridProblem build_problem(const RunConfig& cfg);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace hmp::cli
