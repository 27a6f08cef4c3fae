#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridopt/lp.hpp"
#include "gridopt/network.hpp"
#include "gridopt/result.hpp"

namespace gridopt {

struct CurvePoint {
  double cum_capacity_mw = 0.0;
  double price = 0.0;
};

/// Merit-order dispatch: generators stacked cheapest first along the
/// cumulative-capacity axis, the marginal one covering the last MWh.
struct MeritOrderResult {
  std::vector<std::size_t> order;      // generator indices, ascending (cost, index)
  std::vector<double> breakpoints_mw;  // cumulative capacity after each stacked unit
  std::vector<double> dispatch_mw;     // per generator, file order
  double demand_mw = 0.0;
  double smp = 0.0;                    // system marginal price, currency/MWh
  std::optional<std::size_t> marginal_gen;
  double total_cost_per_h = 0.0;
  std::vector<CurvePoint> curve_points;
  bool degenerate = false;             // zero demand: smp reported as the cheapest cost
  bool breakpoint_degenerate = false;  // demand exactly on a breakpoint
};

namespace detail {

// Approximate-or-relative comparison used where costs/powers mix magnitudes.
inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline Network physical_view(const Network& net) {
  if (!net.normalized) return net;
  Network out = net;
  for (Line& l : out.lines)
    if (l.rating) l.rating = *l.rating * out.base_mva;
  for (Generator& g : out.generators) {
    g.p_min *= out.base_mva;
    g.p_max *= out.base_mva;
  }
  for (Load& l : out.loads) {
    l.p *= out.base_mva;
    l.q *= out.base_mva;
  }
  out.normalized = false;
  return out;
}

}  // namespace detail

inline MeritOrderResult merit_order(const Network& net_in,
                                    std::optional<double> demand_override_mw = std::nullopt) {
  const Network net = detail::physical_view(net_in);
  if (net.generators.empty()) throw std::invalid_argument("merit order needs generators");
  for (const Generator& g : net.generators)
    if (g.p_min > 0.0)
      throw std::invalid_argument(
          "the graphical merit order assumes p_min = 0; use the LP dispatch instead");

  MeritOrderResult r;
  r.demand_mw = demand_override_mw.value_or(net.total_load_p());
  if (r.demand_mw < 0.0) throw std::invalid_argument("demand must be non-negative");

  r.order.resize(net.generators.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&net](std::size_t a, std::size_t b) {
    return net.generators[a].cost < net.generators[b].cost;
  });

  double cum = 0.0;
  for (std::size_t g : r.order) {
    const double cost = net.generators[g].cost;
    r.curve_points.push_back({cum, cost});
    cum += net.generators[g].p_max;
    r.curve_points.push_back({cum, cost});
    r.breakpoints_mw.push_back(cum);
  }
  if (r.demand_mw > cum)
    throw std::invalid_argument("demand exceeds total generation capacity");

  r.dispatch_mw.assign(net.generators.size(), 0.0);
  double remaining = r.demand_mw;
  for (std::size_t g : r.order) {
    const double take = std::min(remaining, net.generators[g].p_max);
    r.dispatch_mw[g] = take;
    remaining -= take;
    r.total_cost_per_h += take * net.generators[g].cost;
    if (take > 0.0) r.marginal_gen = g;
    if (remaining <= 0.0) break;
  }

  if (r.demand_mw == 0.0) {
    r.degenerate = true;
    r.smp = net.generators[r.order.front()].cost;
    r.marginal_gen.reset();
  } else {
    r.smp = net.generators[*r.marginal_gen].cost;
    for (double bp : r.breakpoints_mw)
      if (detail::close(bp, r.demand_mw, 1e-12)) r.breakpoint_degenerate = true;
  }
  return r;
}

/// Step polyline "cum_capacity_mw,price" for plotting the merit-order curve.
inline std::string curve_csv(const MeritOrderResult& r) {
  std::string out = "cum_capacity_mw,price\n";
  for (const CurvePoint& p : r.curve_points)
    out += format_number(p.cum_capacity_mw) + "," + format_number(p.price) + "\n";
  return out;
}

/// Copperplate economic dispatch: min c'P_G with a single balance equality.
/// No network matrices involved; every bus sees the system marginal price.
inline DispatchResult economic_dispatch_lp(const Network& net_in, double obj_scale = 1.0) {
  if (obj_scale <= 0.0) throw std::invalid_argument("objective scale must be positive");
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const std::size_t ng = net.generators.size();
  if (ng == 0) throw std::invalid_argument("dispatch needs generators");

  LpProblem p;
  p.c.resize(ng);
  p.lb.resize(ng);
  p.ub.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    p.c[g] = net.generators[g].cost * obj_scale;
    p.lb[g] = net.generators[g].p_min;
    p.ub[g] = net.generators[g].p_max;
  }
  p.a_eq = Matrix(1, ng, 1.0);
  p.b_eq = {net.total_load_p()};

  const LpSolution s = solve_lp(p);

  DispatchResult r;
  r.formulation = "ed";
  r.degenerate = s.degenerate;
  if (s.status != LpStatus::optimal) {
    r.status = s.status == LpStatus::infeasible ? SolveStatus::infeasible : SolveStatus::unbounded;
    return r;
  }
  r.status = SolveStatus::optimal;
  r.solver_objective = s.objective;
  r.p_g_mw.resize(ng);
  double cost = 0.0;
  for (std::size_t g = 0; g < ng; ++g) {
    r.p_g_mw[g] = s.x[g] * net.base_mva;
    cost += net.generators[g].cost * s.x[g];
  }
  r.objective_per_h = cost * net.base_mva;
  const double smp = s.duals_eq[0] / obj_scale;
  r.lmp.assign(net.buses.size(), smp);
  r.marginal_generators = count_marginal_generators(net, r.p_g_mw);
  if (s.degenerate) r.warnings.push_back("degenerate_duals");
  return r;
}

}  // namespace gridopt
