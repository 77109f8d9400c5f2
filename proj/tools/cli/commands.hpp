#pragma once

// The hmp command-line front end. `run` is the whole program minus
// process exit, so tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace hmp::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Version string recorded in provenance.
const char* tool_version();

}  // namespace hmp::cli
