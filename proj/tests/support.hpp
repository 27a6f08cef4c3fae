#pragma once

// Shared helpers for the unit and acceptance suites: fixture loading, random
// network generation, and solver-independent LP oracles.

#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridopt/gridopt.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
  return std::string(GRIDOPT_CASES_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline gridopt::Network load_case(const std::string& name) {
  return gridopt::parse_case(read_file(fixture_path(name)));
}

/// Parse the CSV matrix format emitted by to_csv (labels + %.6g values).
inline gridopt::Matrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_labels, col_labels;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header) {
      col_labels.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    row_labels.push_back(cells[0]);
    std::vector<double> vals;
    for (std::size_t i = 1; i < cells.size(); ++i) vals.push_back(std::stod(cells[i]));
    rows.push_back(vals);
  }
  gridopt::Matrix m(rows.size(), col_labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < col_labels.size(); ++j) m(i, j) = rows[i][j];
  m.row_labels = row_labels;
  m.col_labels = col_labels;
  return m;
}

/// Connected random network, 3-8 buses, x in [0.05, 1], pairwise-distinct
/// generator costs, capacity margin over load. When attempt_congestion is
/// set, the most loaded line of the unconstrained solve gets a rating below
/// its natural flow (backed off if that turns the case infeasible).
inline gridopt::Network random_network(std::mt19937& rng, bool attempt_congestion) {
  using namespace gridopt;
  std::uniform_int_distribution<int> nbus_dist(3, 8);
  std::uniform_real_distribution<double> x_dist(0.05, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Network net;
  net.base_mva = 100.0;
  const int n = nbus_dist(rng);
  for (int i = 1; i <= n; ++i) net.buses.push_back({i, i == 1});

  for (int i = 2; i <= n; ++i) {
    std::uniform_int_distribution<int> prev(1, i - 1);
    net.lines.push_back({prev(rng), i, 0.0, x_dist(rng), 0.0, std::nullopt});
  }
  const int extra = std::uniform_int_distribution<int>(0, n - 2)(rng);
  for (int e = 0; e < extra; ++e) {
    std::uniform_int_distribution<int> pick(1, n);
    const int a = pick(rng);
    int b = pick(rng);
    if (a == b) b = a == n ? 1 : a + 1;
    net.lines.push_back({std::min(a, b), std::max(a, b), 0.0, x_dist(rng), 0.0, std::nullopt});
  }

  double total_load = 0.0;
  for (int i = 1; i <= n; ++i) {
    if (unit(rng) < 0.6) {
      const double p = std::uniform_real_distribution<double>(10.0, 100.0)(rng);
      net.loads.push_back({i, p, 0.0});
      total_load += p;
    }
  }
  if (net.loads.empty()) {
    net.loads.push_back({n, 50.0, 0.0});
    total_load = 50.0;
  }

  const int ng = std::uniform_int_distribution<int>(2, 4)(rng);
  double total_cap = 0.0;
  for (int g = 0; g < ng; ++g) {
    Generator gen;
    gen.bus = std::uniform_int_distribution<int>(1, n)(rng);
    gen.cost = 5.0 + 12.0 * g + unit(rng) * 8.0;  // strictly increasing: distinct
    gen.p_max = std::uniform_real_distribution<double>(50.0, 200.0)(rng);
    net.generators.push_back(gen);
    total_cap += gen.p_max;
  }
  if (total_cap < 1.3 * total_load) {
    const double scale = 1.3 * total_load / total_cap;
    for (Generator& g : net.generators) g.p_max *= scale;
  }

  if (attempt_congestion) {
    const DispatchResult base = solve_dcopf_angle(net);
    if (base.status == SolveStatus::optimal) {
      std::size_t target = 0;
      double best = 0.0;
      for (std::size_t l = 0; l < base.flow_mw.size(); ++l)
        if (std::abs(base.flow_mw[l]) > best) {
          best = std::abs(base.flow_mw[l]);
          target = l;
        }
      if (best > 5.0) {
        double rating = best * std::uniform_real_distribution<double>(0.55, 0.85)(rng);
        for (int attempt = 0; attempt < 5; ++attempt) {
          net.lines[target].rating = rating;
          if (solve_dcopf_angle(net).status == SolveStatus::optimal) break;
          rating *= 1.3;
          net.lines[target].rating.reset();
        }
        if (net.lines[target].rating &&
            solve_dcopf_angle(net).status != SolveStatus::optimal)
          net.lines[target].rating.reset();
      }
    }
  }
  return net;
}

/// Brute-force vertex enumeration for small LPs: every square active set of
/// {equalities} + subsets of {inequalities, finite bounds}, feasibility
/// filtered. Independent of the simplex path.
inline std::optional<double> enumerate_min_objective(const gridopt::LpProblem& p) {
  using namespace gridopt;
  const std::size_t n = p.num_vars();
  const std::size_t me = p.b_eq.size();

  struct Row {
    std::vector<double> a;
    double b;
  };
  std::vector<Row> optional_rows;
  for (std::size_t i = 0; i < p.b_ub.size(); ++i) {
    Row r;
    r.a.resize(n);
    for (std::size_t j = 0; j < n; ++j) r.a[j] = p.a_ub(i, j);
    r.b = p.b_ub[i];
    optional_rows.push_back(r);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (p.lb[j] > -kLpInf) {
      Row r;
      r.a.assign(n, 0.0);
      r.a[j] = 1.0;
      r.b = p.lb[j];
      optional_rows.push_back(r);
    }
    if (p.ub[j] < kLpInf) {
      Row r;
      r.a.assign(n, 0.0);
      r.a[j] = 1.0;
      r.b = p.ub[j];
      optional_rows.push_back(r);
    }
  }
  if (me > n) return std::nullopt;
  const std::size_t need = n - me;
  if (need > optional_rows.size()) return std::nullopt;

  std::optional<double> best;
  std::vector<std::size_t> pick(need);
  auto feasible = [&](const std::vector<double>& x) {
    for (std::size_t i = 0; i < me; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += p.a_eq(i, j) * x[j];
      if (std::abs(lhs - p.b_eq[i]) > 1e-7) return false;
    }
    for (std::size_t i = 0; i < p.b_ub.size(); ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += p.a_ub(i, j) * x[j];
      if (lhs > p.b_ub[i] + 1e-7) return false;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < p.lb[j] - 1e-7 || x[j] > p.ub[j] + 1e-7) return false;
    return true;
  };

  auto evaluate_pick = [&]() {
    gridopt::Matrix a(n, n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < me; ++i) {
      for (std::size_t j = 0; j < n; ++j) a(i, j) = p.a_eq(i, j);
      b[i] = p.b_eq[i];
    }
    for (std::size_t k = 0; k < need; ++k) {
      const Row& r = optional_rows[pick[k]];
      for (std::size_t j = 0; j < n; ++j) a(me + k, j) = r.a[j];
      b[me + k] = r.b;
    }
    std::vector<double> x;
    try {
      x = lu_solve(lu_factor(a), b);
    } catch (const NumericalError&) {
      return;
    }
    if (!feasible(x)) return;
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += p.c[j] * x[j];
    if (!best || obj < *best) best = obj;
  };

  // Iterate over all size-`need` combinations of optional rows.
  std::vector<std::size_t> idx(need);
  for (std::size_t k = 0; k < need; ++k) idx[k] = k;
  if (need == 0) {
    pick.clear();
    evaluate_pick();
    return best;
  }
  for (;;) {
    pick = idx;
    evaluate_pick();
    std::size_t k = need;
    while (k-- > 0) {
      if (idx[k] + (need - k) < optional_rows.size()) {
        ++idx[k];
        for (std::size_t t = k + 1; t < need; ++t) idx[t] = idx[t - 1] + 1;
        break;
      }
      if (k == 0) return best;
    }
  }
}

/// Random LP whose optimum is known from its own KKT construction: pick the
/// optimal point and multipliers first, then derive costs and right-hand
/// sides around them.
struct KnownLp {
  gridopt::LpProblem problem;
  double optimum = 0.0;
};

inline KnownLp known_optimum_lp(std::mt19937& rng, std::size_t n, std::size_t me,
                                std::size_t mu) {
  using namespace gridopt;
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  KnownLp out;
  LpProblem& p = out.problem;
  p.lb.assign(n, 0.0);
  p.ub.resize(n);
  std::vector<double> xstar(n);
  std::vector<int> where(n);  // -1 at lb, 0 interior, +1 at ub
  for (std::size_t j = 0; j < n; ++j) {
    p.ub[j] = 1.0 + 4.0 * unit(rng);
    const double u = unit(rng);
    where[j] = u < 0.3 ? -1 : (u < 0.6 ? +1 : 0);
    xstar[j] = where[j] == -1 ? 0.0 : (where[j] == +1 ? p.ub[j] : p.ub[j] * (0.2 + 0.6 * unit(rng)));
  }

  p.a_eq = Matrix(me, n);
  p.b_eq.resize(me);
  std::vector<double> nu(me);
  for (std::size_t i = 0; i < me; ++i) {
    double row_dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p.a_eq(i, j) = coef(rng);
      row_dot += p.a_eq(i, j) * xstar[j];
    }
    p.b_eq[i] = row_dot;
    nu[i] = coef(rng);
  }

  p.a_ub = Matrix(mu, n);
  p.b_ub.resize(mu);
  std::vector<double> lambda(mu, 0.0);
  for (std::size_t i = 0; i < mu; ++i) {
    double row_dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p.a_ub(i, j) = coef(rng);
      row_dot += p.a_ub(i, j) * xstar[j];
    }
    const bool active = unit(rng) < 0.5;
    if (active) {
      lambda[i] = 0.2 + 2.0 * unit(rng);
      p.b_ub[i] = row_dot;
    } else {
      p.b_ub[i] = row_dot + 0.5 + 2.0 * unit(rng);
    }
  }

  // Stationarity: c = -A_eq' nu - A_ub' lambda, shifted outward at bounds.
  p.c.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < me; ++i) v -= p.a_eq(i, j) * nu[i];
    for (std::size_t i = 0; i < mu; ++i) v -= p.a_ub(i, j) * lambda[i];
    if (where[j] == -1) v += 0.1 + 2.0 * unit(rng);
    if (where[j] == +1) v -= 0.1 + 2.0 * unit(rng);
    p.c[j] = v;
  }

  out.optimum = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.optimum += p.c[j] * xstar[j];
  return out;
}

}  // namespace testsupport
