#include "artifacts.hpp"

#include "hmp/errors.hpp"

#include <cmath>

namespace hmp::cli {

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& j, int size, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != size) {
    throw FormatError(where + " must be an array of " + std::to_string(size) + " numbers");
  }
  Vec v(size);
  for (int i = 0; i < size; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw FormatError(where + " must hold numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

json switches_json(const HybridTrajectory& traj, bool with_mu) {
  json a = json::array();
  for (const auto& sw : traj.switches) {
    json e = {{"i", sw.index}, {"t_i", sw.t}, {"x_minus", to_json(sw.x_minus)}, {"x_plus", to_json(sw.x_plus)}};
    if (with_mu) {
      e["mu"] = sw.mu;
      e["jump_covector_x"] = to_json(sw.jump_covector.dn_x.comps);
      e["jump_covector_t"] = sw.jump_covector.dn_t;
      e["dh_expected"] = sw.dh_expected;
      e["dh_measured"] = sw.dh_measured;
    }
    a.push_back(std::move(e));
  }
  return a;
}

void apply_switches_json(const json& j, HybridTrajectory& traj) {
  if (!j.is_array()) throw FormatError("switches file must hold an array");
  if (j.size() != traj.switches.size()) {
    throw FormatError("switches file lists " + std::to_string(j.size()) + " switches, trajectory has " +
                      std::to_string(traj.switches.size()));
  }
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& e = j[k];
    const std::string where = "switches[" + std::to_string(k) + "]";
    for (const char* key : {"i", "t_i", "mu", "jump_covector_x", "jump_covector_t"}) {
      if (!e.is_object() || !e.contains(key)) throw FormatError(where + " lacks '" + key + "'");
    }
    auto& sw = traj.switches[k];
    if (!e["i"].is_number_integer() || e["i"].get<int>() != sw.index) throw FormatError(where + ": index mismatch");
    if (!e["t_i"].is_number() || e["t_i"].get<double>() != sw.t) {
      throw FormatError(where + ": switching time differs from the trajectory");
    }
    if (!e["mu"].is_number() || !e["jump_covector_t"].is_number()) throw FormatError(where + ": bad multiplier");
    sw.mu = e["mu"].get<double>();
    sw.jump_covector.dn_x.base = sw.dn.dn_x.base;
    sw.jump_covector.dn_x.comps = vec_from_json(e["jump_covector_x"], static_cast<int>(sw.x_minus.size()),
                                                where + ".jump_covector_x");
    sw.jump_covector.dn_t = e["jump_covector_t"].get<double>();
  }
}

json report_json(const HmpReport& r) {
  json sw = json::array();
  for (const auto& s : r.switches) {
    sw.push_back({{"index", s.index},
                  {"t", s.t},
                  {"mu", s.mu},
                  {"guard_residual", s.guard_residual},
                  {"state_jump_residual", s.state_jump_residual},
                  {"adjoint_jump_residual", s.adjoint_jump_residual},
                  {"dh_expected", s.dh_expected},
                  {"dh_measured", s.dh_measured},
                  {"dh_residual", s.dh_residual},
                  {"jump_condition_number", s.jump_condition_number}});
  }
  const auto& t = r.tolerances;
  return {{"pass", r.pass},
          {"failures", r.failures},
          {"arc_ode_residual", r.arc_ode_residual},
          {"max_gap", r.max_gap},
          {"transversality_residual", r.transversality_residual},
          {"max_costate", r.max_costate},
          {"switches", sw},
          {"tolerances",
           {{"min_gap", t.min_gap},
            {"ode", t.ode},
            {"transversality", t.transversality},
            {"hamiltonian", t.hamiltonian},
            {"guard", t.guard},
            {"jump", t.jump},
            {"nontrivial", t.nontrivial},
            {"cone", t.cone}}}};
}

json solver_json(const SolveResult& res) {
  return {{"iterations", res.iterations},
          {"cost", res.cost},
          {"p0", to_json(res.state.p0)},
          {"switch_times", res.state.switch_times},
          {"mus", res.state.mus},
          {"residual_history", res.residual_history}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hmp::cli
