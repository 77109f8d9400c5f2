#pragma once

// Built-in problem catalogue. Dynamics live in code; callers only pick a
// name and override numeric parameters.

#include "hmp/model.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace hmp {

using ParamMap = std::map<std::string, double>;

struct ParamSpec {
  std::string name;
  double default_value;
  double lo;
  double hi;
  std::string doc;
};

struct RegistryEntry {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  std::function<HybridProblem(const ParamMap&)> build;  // receives every parameter resolved
};

const std::vector<RegistryEntry>& registry();

/// Throws UnknownProblemError for an unknown name and ParameterRangeError for
/// unknown or out-of-range parameters.
HybridProblem registry_instantiate(const std::string& name, const ParamMap& params = {});

}  // namespace hmp
