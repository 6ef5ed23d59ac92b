#pragma once

// Dense two-phase simplex for the small master programs the offline oracle
// assembles over collected per-arm plans. Maximizes c'x subject to
// A_le x <= b_le, A_eq x = b_eq, x >= 0, with all right-hand sides
// nonnegative. Bland's rule keeps it cycle-free; duals of the <= rows are
// read off the slack columns.

#include <cmath>
#include <cstddef>
#include <vector>

#include "armab/model.hpp"

namespace armab {
namespace detail {

struct SimplexResult {
  bool ok = false;
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> le_duals;
};

inline SimplexResult simplex_solve(
    const std::vector<std::vector<double>>& le_rows,
    const std::vector<double>& le_rhs,
    const std::vector<std::vector<double>>& eq_rows,
    const std::vector<double>& eq_rhs, const std::vector<double>& objective) {
  constexpr double kEps = 1e-9;
  const int n = static_cast<int>(objective.size());
  const int L = static_cast<int>(le_rows.size());
  const int E = static_cast<int>(eq_rows.size());
  const int m = L + E;
  const int width = n + L + E + 1; // structural, slacks, artificials, rhs
  SimplexResult res;

  std::vector<double> tab(static_cast<std::size_t>(m + 1) * width, 0.0);
  auto row = [&](int i) { return tab.data() + static_cast<std::size_t>(i) * width; };
  std::vector<int> basis(m, -1);

  for (int i = 0; i < L; ++i) {
    if (le_rhs[i] < 0.0) return res;
    double* r = row(i);
    for (int j = 0; j < n; ++j) r[j] = le_rows[i][j];
    r[n + i] = 1.0;
    r[width - 1] = le_rhs[i];
    basis[i] = n + i;
  }
  for (int i = 0; i < E; ++i) {
    if (eq_rhs[i] < 0.0) return res;
    double* r = row(L + i);
    for (int j = 0; j < n; ++j) r[j] = eq_rows[i][j];
    r[n + L + i] = 1.0;
    r[width - 1] = eq_rhs[i];
    basis[L + i] = n + L + i;
  }

  const int ncols = n + L + E;
  auto pivot = [&](int pr, int pc) {
    double* prow = row(pr);
    const double inv = 1.0 / prow[pc];
    for (int j = 0; j < width; ++j) prow[j] *= inv;
    for (int i = 0; i <= m; ++i) {
      if (i == pr) continue;
      double* r = row(i);
      const double f = r[pc];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) r[j] -= f * prow[j];
    }
    if (pr < m) basis[pr] = pc;
  };
  auto run = [&](int col_limit) -> bool {
    double* obj = row(m);
    for (int guard = 0; guard < 200000; ++guard) {
      // steepest reduced cost normally; Bland's rule once a degenerate
      // stretch suggests cycling
      const bool bland = guard >= 10000;
      int pc = -1;
      double best_rc = kEps;
      for (int j = 0; j < col_limit; ++j) {
        if (obj[j] > best_rc) {
          pc = j;
          best_rc = obj[j];
          if (bland) break;
        }
      }
      if (pc < 0) return true;
      int pr = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        const double a = row(i)[pc];
        if (a <= kEps) continue;
        const double ratio = row(i)[width - 1] / a;
        if (pr < 0 || ratio < best - 1e-12 ||
            (ratio < best + 1e-12 && basis[i] < basis[pr])) {
          pr = i;
          best = ratio;
        }
      }
      if (pr < 0) return false; // unbounded
      pivot(pr, pc);
    }
    return false;
  };

  if (E > 0) {
    // phase 1: drive the artificials out
    double* obj = row(m);
    std::fill(obj, obj + width, 0.0);
    for (int i = L; i < m; ++i) {
      const double* r = row(i);
      for (int j = 0; j < n + L; ++j) obj[j] += r[j];
      obj[width - 1] += r[width - 1];
    }
    if (!run(n + L)) return res;
    if (std::abs(row(m)[width - 1]) > 1e-7) return res; // infeasible
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + L) continue;
      int pc = -1;
      for (int j = 0; j < n + L; ++j)
        if (std::abs(row(i)[j]) > kEps) { pc = j; break; }
      if (pc >= 0) pivot(i, pc);
    }
    for (int i = 0; i <= m; ++i)
      for (int j = n + L; j < ncols; ++j) row(i)[j] = 0.0;
  }

  {
    double* obj = row(m);
    std::fill(obj, obj + width, 0.0);
    for (int j = 0; j < n; ++j) obj[j] = objective[j];
    for (int i = 0; i < m; ++i) {
      if (basis[i] >= n + L) continue; // leftover artificial on redundant row
      const double c = (basis[i] < n) ? objective[basis[i]] : 0.0;
      if (c == 0.0) continue;
      const double* r = row(i);
      for (int j = 0; j < width; ++j) obj[j] -= c * r[j];
    }
    if (!run(n + L)) return res;
  }

  res.ok = true;
  res.value = -row(m)[width - 1];
  res.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] >= 0 && basis[i] < n) res.x[basis[i]] = row(i)[width - 1];
  res.le_duals.assign(L, 0.0);
  for (int i = 0; i < L; ++i)
    res.le_duals[i] = std::max(0.0, -row(m)[n + i]);
  return res;
}

} // namespace detail
} // namespace armab
