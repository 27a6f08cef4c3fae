#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridopt/network.hpp"
#include "gridopt/version.hpp"

namespace gridopt {

enum class SolveStatus { optimal, infeasible, unbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    default: return "unbounded";
  }
}

struct BindingLine {
  std::size_t line = 0;  // index into Network::lines
  bool forward = true;   // true: from->to direction at its limit
  double shadow_price = 0.0;
};

/// Unified solve report for economic dispatch and both DC-OPF formulations.
/// Power in MW, angles in rad, prices in currency/MWh, objective in
/// currency/h (always unscaled, whatever --obj-scale the solver ran with).
struct DispatchResult {
  SolveStatus status = SolveStatus::optimal;
  std::string formulation;        // "angle" | "ptdf" | "ed"
  int slack_bus = -1;             // resolved slack id; -1 for copperplate
  std::vector<double> p_g_mw;     // per generator, file order
  std::vector<double> theta_rad;  // per bus; empty unless angle formulation
  std::vector<double> flow_mw;    // per line; empty for copperplate
  std::vector<double> lmp;        // per bus
  std::vector<BindingLine> binding_lines;
  double objective_per_h = 0.0;
  double solver_objective = 0.0;     // raw scaled p.u. objective seen by the LP
  int marginal_generators = 0;       // units strictly inside their bounds
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// Units dispatched strictly between p_min and p_max. More than one of them
/// goes hand in hand with congestion.
inline int count_marginal_generators(const Network& net, const std::vector<double>& p_g_mw) {
  const double base = net.normalized ? net.base_mva : 1.0;
  int count = 0;
  for (std::size_t g = 0; g < p_g_mw.size(); ++g) {
    const double lo = net.generators[g].p_min * base;
    const double hi = net.generators[g].p_max * base;
    if (p_g_mw[g] > lo + 1e-6 && p_g_mw[g] < hi - 1e-6) ++count;
  }
  return count;
}

inline nlohmann::json report_to_json(const DispatchResult& r, const Network& net) {
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["status"] = to_string(r.status);
  doc["formulation"] = r.formulation;
  doc["slack"] = r.slack_bus;
  doc["objective_per_h"] = r.objective_per_h;

  doc["dispatch"] = nlohmann::json::array();
  for (std::size_t g = 0; g < r.p_g_mw.size(); ++g)
    doc["dispatch"].push_back({{"gen", g + 1},
                               {"bus", net.generators[g].bus},
                               {"p_mw", r.p_g_mw[g]}});

  if (!r.theta_rad.empty()) doc["theta_rad"] = r.theta_rad;

  const std::vector<std::string> keys = net.line_keys();
  doc["flows"] = nlohmann::json::array();
  for (std::size_t l = 0; l < r.flow_mw.size(); ++l) {
    nlohmann::json jf{{"line", keys[l]}, {"p_mw", r.flow_mw[l]}, {"binding", false}};
    if (net.lines[l].rating) {
      const double limit = *net.lines[l].rating * (net.normalized ? net.base_mva : 1.0);
      jf["limit_mw"] = limit;
    }
    for (const BindingLine& b : r.binding_lines)
      if (b.line == l) jf["binding"] = true;
    doc["flows"].push_back(jf);
  }

  doc["lmp"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.lmp.size(); ++i)
    doc["lmp"].push_back({{"bus", net.buses[i].id}, {"price", r.lmp[i]}});

  doc["marginal_generators"] = r.marginal_generators;
  doc["warnings"] = r.warnings;
  return doc;
}

}  // namespace gridopt
