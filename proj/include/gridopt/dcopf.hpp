#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridopt/dispatch.hpp"
#include "gridopt/lp.hpp"
#include "gridopt/network.hpp"
#include "gridopt/result.hpp"
#include "gridopt/system_matrices.hpp"

namespace gridopt {

inline constexpr double kBindingTol = 1e-7;      // smallest shadow price treated as binding
inline constexpr double kSmallAngleRad = M_PI / 6.0;

struct DcopfOptions {
  std::optional<int> slack_override;
  double obj_scale = 1.0;  // internal objective scaling; reports stay unscaled
};

namespace detail {

inline int resolve_slack(const Network& net, const DcopfOptions& opt) {
  if (opt.slack_override) {
    net.bus_pos(*opt.slack_override);
    return *opt.slack_override;
  }
  if (auto s = net.slack_bus()) return *s;
  throw std::invalid_argument("no slack bus designated (case file or --slack)");
}

inline void require_solvable(const Network& net, const DcopfOptions& opt) {
  if (opt.obj_scale <= 0.0) throw std::invalid_argument("objective scale must be positive");
  if (net.generators.empty()) throw std::invalid_argument("network has no generators");
  Network probe = with_slack(net, resolve_slack(net, opt));
  for (const Diagnostic& d : validate_network(probe))
    if (d.code == "disconnected")
      throw std::invalid_argument("network validation failed: " + d.message);
}

inline std::vector<double> load_per_bus_pu(const Network& net_pu) {
  std::vector<double> d(net_pu.buses.size(), 0.0);
  for (const Load& l : net_pu.loads) d[net_pu.bus_pos(l.bus)] += l.p;
  return d;
}

inline SolveStatus from_lp(LpStatus s) {
  return s == LpStatus::infeasible ? SolveStatus::infeasible : SolveStatus::unbounded;
}

}  // namespace detail

/// Angle-formulation DC-OPF: variables (P_G, delta), all N nodal balance
/// equalities plus an explicit delta_slack = 0 pin, line limits as two-sided
/// flow inequalities on (delta_i - delta_j)/x. The nodal duals are the LMPs,
/// sign-normalized so lmp_i = d f* / d P_D,i.
inline DispatchResult solve_dcopf_angle(const Network& net_in, const DcopfOptions& opt = {}) {
  detail::require_solvable(net_in, opt);
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const int slack_id = detail::resolve_slack(net, opt);
  const std::size_t slack_pos = net.bus_pos(slack_id);
  const std::size_t n = net.buses.size();
  const std::size_t ng = net.generators.size();
  const std::size_t nl = net.lines.size();
  const double k = opt.obj_scale;

  const Matrix b_bus = build_b_bus(net);
  const Matrix b_line = build_b_line(net);
  const std::vector<double> demand = detail::load_per_bus_pu(net);

  LpProblem p;
  const std::size_t nv = ng + n;  // generators then angles
  p.c.assign(nv, 0.0);
  p.lb.assign(nv, -kLpInf);
  p.ub.assign(nv, kLpInf);
  for (std::size_t g = 0; g < ng; ++g) {
    p.c[g] = net.generators[g].cost * k;
    p.lb[g] = net.generators[g].p_min;
    p.ub[g] = net.generators[g].p_max;
  }

  p.a_eq = Matrix(n + 1, nv);
  p.b_eq.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < ng; ++g)
      if (net.bus_pos(net.generators[g].bus) == i) p.a_eq(i, g) = 1.0;
    for (std::size_t j = 0; j < n; ++j) p.a_eq(i, ng + j) = -b_bus(i, j);
    p.b_eq[i] = demand[i];
  }
  p.a_eq(n, ng + slack_pos) = 1.0;  // delta_slack = 0

  std::vector<std::size_t> rated;
  for (std::size_t l = 0; l < nl; ++l)
    if (net.lines[l].rating) rated.push_back(l);
  p.a_ub = Matrix(2 * rated.size(), nv);
  p.b_ub.assign(2 * rated.size(), 0.0);
  for (std::size_t r = 0; r < rated.size(); ++r) {
    const std::size_t l = rated[r];
    const double cap = *net.lines[l].rating;
    for (std::size_t j = 0; j < n; ++j) {
      p.a_ub(2 * r, ng + j) = b_line(l, j);
      p.a_ub(2 * r + 1, ng + j) = -b_line(l, j);
    }
    p.b_ub[2 * r] = cap;
    p.b_ub[2 * r + 1] = cap;
  }

  const LpSolution s = solve_lp(p);

  DispatchResult out;
  out.formulation = "angle";
  out.slack_bus = slack_id;
  out.degenerate = s.degenerate;
  if (s.status != LpStatus::optimal) {
    out.status = detail::from_lp(s.status);
    return out;
  }
  out.status = SolveStatus::optimal;
  out.solver_objective = s.objective;

  out.p_g_mw.resize(ng);
  double cost_pu = 0.0;
  for (std::size_t g = 0; g < ng; ++g) {
    out.p_g_mw[g] = s.x[g] * net.base_mva;
    cost_pu += net.generators[g].cost * s.x[g];
  }
  out.objective_per_h = cost_pu * net.base_mva;

  out.theta_rad.assign(s.x.begin() + static_cast<std::ptrdiff_t>(ng), s.x.end());
  // Re-reference: flows depend on differences only, and the pin row leaves
  // roundoff dust on a basic slack angle.
  const double shift = out.theta_rad[slack_pos];
  for (double& t : out.theta_rad) t -= shift;
  out.theta_rad[slack_pos] = 0.0;
  const std::vector<double> flow_pu = b_line * out.theta_rad;
  out.flow_mw.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) out.flow_mw[l] = flow_pu[l] * net.base_mva;

  out.lmp.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.lmp[i] = s.duals_eq[i] / k;

  for (std::size_t r = 0; r < rated.size(); ++r) {
    const double lf = s.duals_ub[2 * r] / k;
    const double lr = s.duals_ub[2 * r + 1] / k;
    if (lf > kBindingTol) out.binding_lines.push_back({rated[r], true, lf});
    if (lr > kBindingTol) out.binding_lines.push_back({rated[r], false, lr});
  }

  const std::vector<std::string> keys = net.line_keys();
  for (std::size_t l = 0; l < nl; ++l) {
    const double dtheta = out.theta_rad[net.bus_pos(net.lines[l].from_bus)] -
                          out.theta_rad[net.bus_pos(net.lines[l].to_bus)];
    if (std::abs(dtheta) > kSmallAngleRad)
      out.warnings.push_back("approx_warning: |dtheta| = " + format_number(std::abs(dtheta)) +
                             " rad exceeds pi/6 on line " + keys[l]);
  }
  out.marginal_generators = count_marginal_generators(net, out.p_g_mw);
  if (s.degenerate) out.warnings.push_back("degenerate_duals");
  return out;
}

/// PTDF-formulation DC-OPF: variables P_G only, one total balance equality,
/// line limits through PTDF rows. LMPs are reconstructed from the balance
/// dual and the line shadow prices:
///   lmp_i = nu + sum_l (lambda_l^rev - lambda_l^fwd) * PTDF_{l,i}
inline DispatchResult solve_dcopf_ptdf(const Network& net_in, const DcopfOptions& opt = {}) {
  detail::require_solvable(net_in, opt);
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const int slack_id = detail::resolve_slack(net, opt);
  const std::size_t n = net.buses.size();
  const std::size_t ng = net.generators.size();
  const std::size_t nl = net.lines.size();
  const double k = opt.obj_scale;

  const PtdfMatrix ptdf = build_ptdf(net, SlackChoice{slack_id});
  const std::vector<double> demand = detail::load_per_bus_pu(net);
  double total_demand = 0.0;
  for (double d : demand) total_demand += d;

  // Per-line load offset: flow_l = sum_g K(l, bus(g)) P_g - (K * demand)_l.
  const std::vector<double> flow_offset = ptdf.values * demand;

  LpProblem p;
  p.c.resize(ng);
  p.lb.resize(ng);
  p.ub.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    p.c[g] = net.generators[g].cost * k;
    p.lb[g] = net.generators[g].p_min;
    p.ub[g] = net.generators[g].p_max;
  }
  p.a_eq = Matrix(1, ng, 1.0);
  p.b_eq = {total_demand};

  std::vector<std::size_t> rated;
  for (std::size_t l = 0; l < nl; ++l)
    if (net.lines[l].rating) rated.push_back(l);
  p.a_ub = Matrix(2 * rated.size(), ng);
  p.b_ub.assign(2 * rated.size(), 0.0);
  for (std::size_t r = 0; r < rated.size(); ++r) {
    const std::size_t l = rated[r];
    const double cap = *net.lines[l].rating;
    for (std::size_t g = 0; g < ng; ++g) {
      const double coef = ptdf.values(l, net.bus_pos(net.generators[g].bus));
      p.a_ub(2 * r, g) = coef;
      p.a_ub(2 * r + 1, g) = -coef;
    }
    p.b_ub[2 * r] = cap + flow_offset[l];
    p.b_ub[2 * r + 1] = cap - flow_offset[l];
  }

  const LpSolution s = solve_lp(p);

  DispatchResult out;
  out.formulation = "ptdf";
  out.slack_bus = slack_id;
  out.degenerate = s.degenerate;
  if (s.status != LpStatus::optimal) {
    out.status = detail::from_lp(s.status);
    return out;
  }
  out.status = SolveStatus::optimal;
  out.solver_objective = s.objective;

  out.p_g_mw.resize(ng);
  double cost_pu = 0.0;
  std::vector<double> injection(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) injection[i] = -demand[i];
  for (std::size_t g = 0; g < ng; ++g) {
    out.p_g_mw[g] = s.x[g] * net.base_mva;
    cost_pu += net.generators[g].cost * s.x[g];
    injection[net.bus_pos(net.generators[g].bus)] += s.x[g];
  }
  out.objective_per_h = cost_pu * net.base_mva;

  const std::vector<double> flow_pu = ptdf.values * injection;
  out.flow_mw.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) out.flow_mw[l] = flow_pu[l] * net.base_mva;

  for (std::size_t r = 0; r < rated.size(); ++r) {
    const double lf = s.duals_ub[2 * r] / k;
    const double lr = s.duals_ub[2 * r + 1] / k;
    if (lf > kBindingTol) out.binding_lines.push_back({rated[r], true, lf});
    if (lr > kBindingTol) out.binding_lines.push_back({rated[r], false, lr});
  }

  out.lmp.assign(n, s.duals_eq[0] / k);
  for (std::size_t r = 0; r < rated.size(); ++r) {
    const std::size_t l = rated[r];
    const double net_lambda = s.duals_ub[2 * r + 1] / k - s.duals_ub[2 * r] / k;
    if (net_lambda == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out.lmp[i] += net_lambda * ptdf.values(l, i);
  }

  out.marginal_generators = count_marginal_generators(net, out.p_g_mw);
  if (s.degenerate) out.warnings.push_back("degenerate_duals");
  return out;
}

/// Split every LMP into the uniform energy component and the
/// congestion component carried by the binding-line shadow prices.
struct LmpDecomposition {
  std::vector<double> energy;
  std::vector<double> congestion;
};

inline LmpDecomposition lmp_decompose(const DispatchResult& r, const PtdfMatrix& ptdf) {
  if (r.status != SolveStatus::optimal) throw std::invalid_argument("result is not optimal");
  if (r.slack_bus != ptdf.slack.bus)
    throw std::invalid_argument("PTDF slack does not match the result's slack");
  const std::size_t n = ptdf.buses();
  if (r.lmp.size() != n) throw std::invalid_argument("result/PTDF bus count mismatch");

  LmpDecomposition d;
  d.congestion.assign(n, 0.0);
  for (const BindingLine& b : r.binding_lines) {
    const double signed_lambda = b.forward ? -b.shadow_price : b.shadow_price;
    for (std::size_t i = 0; i < n; ++i)
      d.congestion[i] += signed_lambda * ptdf.values(b.line, i);
  }
  d.energy.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.energy[i] = r.lmp[i] - d.congestion[i];
  return d;
}

/// One bus of the finite-difference LMP check.
struct FdBusReport {
  int bus = 0;
  double fd_price = 0.0;  // (f*(load_i + eps) - f*) / eps
  double lmp = 0.0;
  double rel_gap = 0.0;
  bool pass = false;
  bool active_set_changed = false;
  bool resolve_failed = false;
};

namespace detail {

inline std::set<std::pair<std::size_t, bool>> binding_set(const DispatchResult& r) {
  std::set<std::pair<std::size_t, bool>> s;
  for (const BindingLine& b : r.binding_lines) s.insert({b.line, b.forward});
  return s;
}

inline std::set<std::pair<std::size_t, int>> bound_set(const DispatchResult& r,
                                                       const Network& net_phys) {
  std::set<std::pair<std::size_t, int>> s;
  for (std::size_t g = 0; g < r.p_g_mw.size(); ++g) {
    const Generator& gen = net_phys.generators[g];
    if (std::abs(r.p_g_mw[g] - gen.p_min) < 1e-5) s.insert({g, -1});
    if (std::abs(r.p_g_mw[g] - gen.p_max) < 1e-5) s.insert({g, +1});
  }
  return s;
}

inline DispatchResult resolve(const Network& net, const DispatchResult& like) {
  DcopfOptions opt;
  if (like.slack_bus >= 0) opt.slack_override = like.slack_bus;
  if (like.formulation == "angle") return solve_dcopf_angle(net, opt);
  if (like.formulation == "ptdf") return solve_dcopf_ptdf(net, opt);
  return economic_dispatch_lp(net);
}

}  // namespace detail

/// Perturb each bus load by eps (p.u.), re-solve, and compare the objective
/// change against the reported LMP. A changed active set is flagged instead
/// of failed: the one-sided difference is then measuring a different vertex.
inline std::vector<FdBusReport> verify_lmp_fd(const Network& net_in, const DispatchResult& r,
                                              double eps = 1e-5) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  if (r.status != SolveStatus::optimal) throw std::invalid_argument("result is not optimal");
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const Network net_phys = detail::physical_view(net);
  const double base_obj = r.objective_per_h / net.base_mva;
  const auto base_binding = detail::binding_set(r);
  const auto base_bounds = detail::bound_set(r, net_phys);

  std::vector<FdBusReport> out;
  out.reserve(net.buses.size());
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    FdBusReport rep;
    rep.bus = net.buses[i].id;
    rep.lmp = r.lmp.empty() ? 0.0 : r.lmp[i];

    Network bumped = net;
    bumped.loads.push_back({net.buses[i].id, eps, 0.0});
    const DispatchResult r2 = detail::resolve(bumped, r);
    if (r2.status != SolveStatus::optimal) {
      rep.resolve_failed = true;
      out.push_back(rep);
      continue;
    }
    rep.fd_price = (r2.objective_per_h / net.base_mva - base_obj) / eps;
    rep.rel_gap = std::abs(rep.fd_price - rep.lmp) / std::max(1.0, std::abs(rep.lmp));
    rep.active_set_changed = detail::binding_set(r2) != base_binding ||
                             detail::bound_set(r2, net_phys) != base_bounds;
    rep.pass = rep.rel_gap <= 1e-3 || rep.active_set_changed;
    out.push_back(rep);
  }
  return out;
}

}  // namespace gridopt
