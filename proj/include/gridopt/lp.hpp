#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridopt/matrix.hpp"

namespace gridopt {

/// Solver tolerances, kept in one place.
inline constexpr double kLpFeasTol = 1e-8;   // primal feasibility / phase-1 exit
inline constexpr double kLpOptTol = 1e-9;    // reduced-cost optimality
inline constexpr double kLpPivotTol = 1e-9;  // smallest usable pivot element
inline constexpr double kLpRatioTol = 1e-10; // ratio-test steps below this count as zero
inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

enum class LpStatus { optimal, infeasible, unbounded };

/// min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub.
/// Either bound may be +-inf.
struct LpProblem {
  std::vector<double> c;
  Matrix a_eq;
  std::vector<double> b_eq;
  Matrix a_ub;
  std::vector<double> b_ub;
  std::vector<double> lb;
  std::vector<double> ub;

  std::size_t num_vars() const { return c.size(); }
};

/// Dual conventions:
///   duals_eq[i]     = d f* / d b_eq[i]
///   duals_ub[k]     >= 0, the shadow price of row k (f* falls by
///                     duals_ub[k] per unit of slack added to the row)
///   duals_bounds[j] = reduced cost of variable j when it sits at a bound
///                     (> 0 at the lower bound, < 0 at the upper), else 0
struct LpSolution {
  LpStatus status = LpStatus::optimal;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> duals_eq;
  std::vector<double> duals_ub;
  std::vector<double> duals_bounds;
  bool degenerate = false;  // some basic variable sits exactly at a bound
  int iterations = 0;
};

namespace lp_detail {

enum class VarStatus { basic, at_lower, at_upper, free_at_zero, fixed };

struct Tableau {
  std::size_t rows = 0;
  std::size_t cols = 0;       // structural + slack + artificial
  std::size_t n_struct = 0;
  std::size_t n_slack = 0;
  Matrix t;                   // rows x cols constraint matrix
  std::vector<double> rhs;
  std::vector<double> lo, hi;
  std::vector<double> cost;   // current phase costs
  std::vector<int> basis;     // one column per row
  std::vector<VarStatus> stat;
  std::vector<double> x;
  int iterations = 0;

  std::size_t art_start() const { return n_struct + n_slack; }

  Matrix basis_matrix() const {
    Matrix b(rows, rows);
    for (std::size_t k = 0; k < rows; ++k)
      for (std::size_t i = 0; i < rows; ++i) b(i, k) = t(i, static_cast<std::size_t>(basis[k]));
    return b;
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(rows);
    for (std::size_t i = 0; i < rows; ++i) c[i] = t(i, j);
    return c;
  }

  void refresh_basic_values(const LuFactors& f) {
    std::vector<double> r = rhs;
    for (std::size_t j = 0; j < cols; ++j) {
      if (stat[j] == VarStatus::basic || x[j] == 0.0) continue;
      for (std::size_t i = 0; i < rows; ++i) r[i] -= t(i, j) * x[j];
    }
    const std::vector<double> xb = f.solve(r);
    for (std::size_t k = 0; k < rows; ++k) x[static_cast<std::size_t>(basis[k])] = xb[k];
  }

  std::vector<double> dual_prices(const LuFactors& f) const {
    std::vector<double> cb(rows);
    for (std::size_t k = 0; k < rows; ++k) cb[k] = cost[static_cast<std::size_t>(basis[k])];
    return f.solve_transposed(cb);
  }

  double reduced_cost(const std::vector<double>& y, std::size_t j) const {
    double d = cost[j];
    for (std::size_t i = 0; i < rows; ++i) d -= y[i] * t(i, j);
    return d;
  }
};

enum class IterateResult { optimal, unbounded };

/// Bounded-variable primal simplex with Bland's rule (lowest index entering,
/// lowest basis index on ratio ties). The basis is refactorized every
/// iteration; problem sizes here make that cheaper than staying honest about
/// an updated inverse.
inline IterateResult iterate(Tableau& tab, int max_iter) {
  for (;;) {
    if (++tab.iterations > max_iter) throw NumericalError("simplex iteration limit exceeded");

    const LuFactors f = lu_factor(tab.basis_matrix());
    tab.refresh_basic_values(f);
    const std::vector<double> y = tab.dual_prices(f);

    // Pricing, Bland: first eligible column wins.
    std::size_t q = tab.cols;
    int dir = 0;
    for (std::size_t j = 0; j < tab.cols; ++j) {
      const VarStatus s = tab.stat[j];
      if (s == VarStatus::basic || s == VarStatus::fixed) continue;
      const double d = tab.reduced_cost(y, j);
      if ((s == VarStatus::at_lower || s == VarStatus::free_at_zero) && d < -kLpOptTol) {
        q = j;
        dir = +1;
        break;
      }
      if ((s == VarStatus::at_upper || s == VarStatus::free_at_zero) && d > kLpOptTol) {
        q = j;
        dir = -1;
        break;
      }
    }
    if (q == tab.cols) return IterateResult::optimal;

    const std::vector<double> w = f.solve(tab.column(q));

    // Ratio test over basic variables plus the entering variable's own span.
    double t_best = kLpInf;
    std::size_t leave_row = tab.rows;
    bool leave_to_upper = false;
    for (std::size_t k = 0; k < tab.rows; ++k) {
      const double delta = -dir * w[k];
      const std::size_t bk = static_cast<std::size_t>(tab.basis[k]);
      double tk;
      bool to_upper;
      if (delta > kLpPivotTol) {
        if (tab.hi[bk] == kLpInf) continue;
        tk = (tab.hi[bk] - tab.x[bk]) / delta;
        to_upper = true;
      } else if (delta < -kLpPivotTol) {
        if (tab.lo[bk] == -kLpInf) continue;
        tk = (tab.lo[bk] - tab.x[bk]) / delta;
        to_upper = false;
      } else {
        continue;
      }
      // Degenerate steps are exact ties in exact arithmetic; snap them so
      // Bland's smallest-index tie-breaking actually sees the tie. Without
      // this, roundoff-sized ratio differences pick the leaving row and the
      // anti-cycling guarantee is lost.
      tk = std::max(tk, 0.0);
      if (tk < kLpRatioTol) tk = 0.0;
      if (tk < t_best ||
          (tk == t_best && leave_row < tab.rows &&
           bk < static_cast<std::size_t>(tab.basis[leave_row]))) {
        t_best = tk;
        leave_row = k;
        leave_to_upper = to_upper;
      }
    }

    double t_flip = kLpInf;
    if (tab.stat[q] != VarStatus::free_at_zero && tab.lo[q] > -kLpInf && tab.hi[q] < kLpInf)
      t_flip = tab.hi[q] - tab.lo[q];

    if (t_best == kLpInf && t_flip == kLpInf) return IterateResult::unbounded;

    if (t_flip <= t_best) {
      // Bound flip: the entering variable crosses to its other bound.
      if (tab.stat[q] == VarStatus::at_lower) {
        tab.stat[q] = VarStatus::at_upper;
        tab.x[q] = tab.hi[q];
      } else {
        tab.stat[q] = VarStatus::at_lower;
        tab.x[q] = tab.lo[q];
      }
      continue;
    }

    const std::size_t lv = static_cast<std::size_t>(tab.basis[leave_row]);
    tab.stat[lv] = leave_to_upper ? VarStatus::at_upper : VarStatus::at_lower;
    tab.x[lv] = leave_to_upper ? tab.hi[lv] : tab.lo[lv];
    tab.x[q] += dir * t_best;
    tab.stat[q] = VarStatus::basic;
    tab.basis[leave_row] = static_cast<int>(q);
  }
}

}  // namespace lp_detail

inline LpSolution solve_lp(const LpProblem& p) {
  using lp_detail::VarStatus;

  const std::size_t n = p.num_vars();
  const std::size_t me = p.b_eq.size();
  const std::size_t mu = p.b_ub.size();
  if ((me > 0 && (p.a_eq.rows() != me || p.a_eq.cols() != n)) ||
      (mu > 0 && (p.a_ub.rows() != mu || p.a_ub.cols() != n)))
    throw std::invalid_argument("LP constraint matrix dimensions mismatch");
  if (p.lb.size() != n || p.ub.size() != n)
    throw std::invalid_argument("LP bound vectors must cover every variable");
  for (std::size_t j = 0; j < n; ++j)
    if (p.lb[j] > p.ub[j]) throw std::invalid_argument("LP bounds inverted (lb > ub)");

  const std::size_t m = me + mu;
  lp_detail::Tableau tab;
  tab.rows = m;
  tab.n_struct = n;
  tab.n_slack = mu;
  tab.cols = n + mu + m;
  tab.t = Matrix(m, tab.cols);
  tab.rhs.resize(m);
  for (std::size_t i = 0; i < me; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.t(i, j) = p.a_eq(i, j);
    tab.rhs[i] = p.b_eq[i];
  }
  for (std::size_t i = 0; i < mu; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.t(me + i, j) = p.a_ub(i, j);
    tab.t(me + i, n + i) = 1.0;  // slack
    tab.rhs[me + i] = p.b_ub[i];
  }
  tab.lo.assign(tab.cols, 0.0);
  tab.hi.assign(tab.cols, kLpInf);
  for (std::size_t j = 0; j < n; ++j) {
    tab.lo[j] = p.lb[j];
    tab.hi[j] = p.ub[j];
  }

  // Nonbasic placement: nearest finite bound, free variables at zero.
  tab.stat.assign(tab.cols, VarStatus::at_lower);
  tab.x.assign(tab.cols, 0.0);
  for (std::size_t j = 0; j < n + mu; ++j) {
    if (tab.lo[j] == tab.hi[j]) {
      tab.stat[j] = VarStatus::fixed;
      tab.x[j] = tab.lo[j];
    } else if (tab.lo[j] > -kLpInf) {
      tab.stat[j] = VarStatus::at_lower;
      tab.x[j] = tab.lo[j];
    } else if (tab.hi[j] < kLpInf) {
      tab.stat[j] = VarStatus::at_upper;
      tab.x[j] = tab.hi[j];
    } else {
      tab.stat[j] = VarStatus::free_at_zero;
      tab.x[j] = 0.0;
    }
  }

  // Phase 1: one artificial per row, oriented so it starts feasible.
  tab.basis.resize(m);
  tab.cost.assign(tab.cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double resid = tab.rhs[i];
    for (std::size_t j = 0; j < n + mu; ++j) resid -= tab.t(i, j) * tab.x[j];
    const std::size_t aj = tab.art_start() + i;
    tab.t(i, aj) = resid >= 0.0 ? 1.0 : -1.0;
    tab.x[aj] = std::abs(resid);
    tab.stat[aj] = VarStatus::basic;
    tab.basis[i] = static_cast<int>(aj);
    tab.cost[aj] = 1.0;
  }

  const int max_iter = 2000 + 200 * static_cast<int>(m + tab.cols);

  LpSolution sol;
  if (m > 0) {
    lp_detail::iterate(tab, max_iter);  // phase-1 objective is bounded below
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i) infeas += tab.x[tab.art_start() + i];
    if (infeas > kLpFeasTol) {
      sol.status = LpStatus::infeasible;
      sol.iterations = tab.iterations;
      return sol;
    }

    // Drive leftover artificials out of the basis where a usable pivot
    // exists; rows without one are redundant and keep a zero artificial.
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t bk = static_cast<std::size_t>(tab.basis[k]);
      if (bk < tab.art_start()) continue;
      const LuFactors f = lu_factor(tab.basis_matrix());
      std::vector<double> e(m, 0.0);
      e[k] = 1.0;
      const std::vector<double> rho = f.solve_transposed(e);
      for (std::size_t j = 0; j < tab.art_start(); ++j) {
        if (tab.stat[j] == VarStatus::basic) continue;
        double pivot = 0.0;
        for (std::size_t i = 0; i < m; ++i) pivot += rho[i] * tab.t(i, j);
        if (std::abs(pivot) > kLpPivotTol) {
          tab.stat[bk] = VarStatus::at_lower;
          tab.x[bk] = 0.0;
          tab.stat[j] = VarStatus::basic;
          tab.basis[k] = static_cast<int>(j);
          break;
        }
      }
    }
  }

  // Phase 2: real costs; artificials are pinned at zero and never priced.
  for (std::size_t j = 0; j < tab.cols; ++j) tab.cost[j] = j < n ? p.c[j] : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t aj = tab.art_start() + i;
    tab.lo[aj] = tab.hi[aj] = 0.0;
    if (tab.stat[aj] != VarStatus::basic) tab.stat[aj] = VarStatus::fixed;
  }

  if (lp_detail::iterate(tab, max_iter) == lp_detail::IterateResult::unbounded) {
    sol.status = LpStatus::unbounded;
    sol.iterations = tab.iterations;
    return sol;
  }

  // Final duals from the optimal basis.
  const LuFactors f = lu_factor(tab.basis_matrix());
  tab.refresh_basic_values(f);
  const std::vector<double> y = tab.dual_prices(f);

  sol.status = LpStatus::optimal;
  sol.iterations = tab.iterations;
  sol.x.assign(tab.x.begin(), tab.x.begin() + static_cast<std::ptrdiff_t>(n));
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += p.c[j] * sol.x[j];

  sol.duals_eq.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(me));
  sol.duals_ub.resize(mu);
  for (std::size_t k = 0; k < mu; ++k) {
    double v = -y[me + k];
    if (v < 0.0 && v > -1e-7) v = 0.0;  // roundoff on an inactive row
    sol.duals_ub[k] = v;
  }
  sol.duals_bounds.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const VarStatus s = tab.stat[j];
    if (s == VarStatus::at_lower || s == VarStatus::at_upper || s == VarStatus::fixed)
      sol.duals_bounds[j] = tab.reduced_cost(y, j);
  }

  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t bk = static_cast<std::size_t>(tab.basis[k]);
    if (bk >= tab.art_start()) continue;
    const bool at_lo = tab.lo[bk] > -kLpInf && std::abs(tab.x[bk] - tab.lo[bk]) < 1e-9;
    const bool at_hi = tab.hi[bk] < kLpInf && std::abs(tab.x[bk] - tab.hi[bk]) < 1e-9;
    if (at_lo || at_hi) sol.degenerate = true;
  }

  return sol;
}

}  // namespace gridopt
