#pragma once

// Exact reference solvers for tiny planning instances: a two-phase dense
// tableau simplex (Bland's rule) over the raw occupancy variables, and a
// brute-force enumeration of deterministic epoch-dependent policies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "armab/model.hpp"

namespace testsupport {

struct LinearProgram {
  int n = 0; // variables, all >= 0
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<std::vector<double>> le_rows;
  std::vector<double> le_rhs;
  std::vector<double> objective; // maximized
};

namespace detail {

class Tableau {
 public:
  Tableau(const LinearProgram& lp) {
    const int m_eq = static_cast<int>(lp.eq_rows.size());
    const int m_le = static_cast<int>(lp.le_rows.size());
    m_ = m_eq + m_le;
    n_struct_ = lp.n;
    n_slack_ = m_le;
    n_art_ = m_eq;
    cols_ = n_struct_ + n_slack_ + n_art_ + 1;
    t_.assign(static_cast<std::size_t>(m_ + 1) * cols_, 0.0);
    basis_.assign(m_, -1);

    int r = 0;
    for (int i = 0; i < m_le; ++i, ++r) {
      double sign = lp.le_rhs[i] < 0.0 ? -1.0 : 1.0;
      if (sign < 0.0)
        throw std::runtime_error("tiny_lp: negative <= rhs unsupported");
      for (int j = 0; j < n_struct_; ++j) at(r, j) = lp.le_rows[i][j];
      at(r, n_struct_ + i) = 1.0;
      rhs(r) = lp.le_rhs[i];
      basis_[r] = n_struct_ + i;
    }
    for (int i = 0; i < m_eq; ++i, ++r) {
      const double sign = lp.eq_rhs[i] < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n_struct_; ++j) at(r, j) = sign * lp.eq_rows[i][j];
      at(r, n_struct_ + n_slack_ + i) = 1.0;
      rhs(r) = sign * lp.eq_rhs[i];
      basis_[r] = n_struct_ + n_slack_ + i;
    }
  }

  double maximize(const std::vector<double>& structural_obj) {
    // phase 1: drive artificials to zero
    std::vector<double> phase1(cols_ - 1, 0.0);
    for (int j = n_struct_ + n_slack_; j < cols_ - 1; ++j) phase1[j] = -1.0;
    load_objective(phase1);
    run();
    if (objective_value() < -1e-7)
      throw std::runtime_error("tiny_lp: infeasible");
    for (int r = 0; r < m_; ++r)
      if (basis_[r] >= n_struct_ + n_slack_) evict_artificial(r);
    for (int rr = m_; rr >= 0; --rr)
      for (int j = n_struct_ + n_slack_; j < cols_ - 1; ++j)
        t_[static_cast<std::size_t>(rr) * cols_ + j] = 0.0;

    std::vector<double> full(cols_ - 1, 0.0);
    for (int j = 0; j < n_struct_; ++j) full[j] = structural_obj[j];
    load_objective(full);
    run();
    return objective_value();
  }

  double solution(int j) const {
    for (int r = 0; r < m_; ++r)
      if (basis_[r] == j) return t_[static_cast<std::size_t>(r) * cols_ + cols_ - 1];
    return 0.0;
  }

 private:
  double& at(int r, int c) { return t_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& rhs(int r) { return at(r, cols_ - 1); }
  double objective_value() { return -at(m_, cols_ - 1); }

  void load_objective(const std::vector<double>& c) {
    for (int j = 0; j < cols_ - 1; ++j) at(m_, j) = c[j];
    rhs(m_) = 0.0;
    for (int r = 0; r < m_; ++r) {
      const double coef = at(m_, basis_[r]);
      if (coef != 0.0)
        for (int j = 0; j < cols_; ++j) at(m_, j) -= coef * at(r, j);
    }
  }

  void pivot(int pr, int pc) {
    const double piv = at(pr, pc);
    for (int j = 0; j < cols_; ++j) at(pr, j) /= piv;
    for (int r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int j = 0; j < cols_; ++j) at(r, j) -= f * at(pr, j);
    }
    basis_[pr] = pc;
  }

  void evict_artificial(int r) {
    for (int j = 0; j < n_struct_ + n_slack_; ++j)
      if (std::abs(at(r, j)) > 1e-9) {
        pivot(r, j);
        return;
      }
    // redundant row: leave the zero-valued artificial basic
  }

  void run() {
    for (int guard = 0; guard < 200000; ++guard) {
      int pc = -1;
      for (int j = 0; j < cols_ - 1; ++j)
        if (at(m_, j) > 1e-9) {
          pc = j;
          break;
        }
      if (pc < 0) return;
      int pr = -1;
      double best = 0.0;
      for (int r = 0; r < m_; ++r) {
        if (at(r, pc) <= 1e-11) continue;
        const double ratio = rhs(r) / at(r, pc);
        if (pr < 0 || ratio < best - 1e-12 ||
            (ratio < best + 1e-12 && basis_[r] < basis_[pr])) {
          pr = r;
          best = ratio;
        }
      }
      if (pr < 0) throw std::runtime_error("tiny_lp: unbounded");
      pivot(pr, pc);
    }
    throw std::runtime_error("tiny_lp: pivot limit");
  }

  int m_ = 0, n_struct_ = 0, n_slack_ = 0, n_art_ = 0, cols_ = 0;
  std::vector<double> t_;
  std::vector<int> basis_;
};

} // namespace detail

inline double simplex_max(const LinearProgram& lp,
                          std::vector<double>* solution = nullptr) {
  detail::Tableau tab(lp);
  const double v = tab.maximize(lp.objective);
  if (solution != nullptr) {
    solution->assign(lp.n, 0.0);
    for (int j = 0; j < lp.n; ++j) (*solution)[j] = tab.solution(j);
  }
  return v;
}

// Budget-relaxed planning value over occupancy variables mu[n][h][s][a],
// built directly from the scenario's kernels and an explicit reward slice.
inline double relaxed_lp_value(const armab::Scenario& sc,
                               const std::vector<std::vector<double>>& rew) {
  const int N = sc.num_arms(), H = sc.horizon, S = sc.num_states();
  LinearProgram lp;
  lp.n = N * H * S * 2;
  auto vidx = [&](int n, int h, int s, int a) {
    return ((n * H + h) * S + s) * 2 + a;
  };

  for (int n = 0; n < N; ++n)
    for (int s = 0; s < S; ++s) {
      std::vector<double> row(lp.n, 0.0);
      for (int a = 0; a < 2; ++a) row[vidx(n, 0, s, a)] = 1.0;
      lp.eq_rows.push_back(std::move(row));
      lp.eq_rhs.push_back(s == sc.arms[n].initial_state ? 1.0 : 0.0);
    }
  for (int n = 0; n < N; ++n)
    for (int h = 1; h < H; ++h)
      for (int s = 0; s < S; ++s) {
        std::vector<double> row(lp.n, 0.0);
        for (int a = 0; a < 2; ++a) row[vidx(n, h, s, a)] = 1.0;
        for (int sp = 0; sp < S; ++sp)
          for (int ap = 0; ap < 2; ++ap)
            row[vidx(n, h - 1, sp, ap)] -= sc.arms[n].row(ap, sp)[s];
        lp.eq_rows.push_back(std::move(row));
        lp.eq_rhs.push_back(0.0);
      }
  for (int h = 0; h < H; ++h) {
    std::vector<double> row(lp.n, 0.0);
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s) row[vidx(n, h, s, 1)] = 1.0;
    lp.le_rows.push_back(std::move(row));
    lp.le_rhs.push_back(static_cast<double>(sc.budget));
  }

  lp.objective.assign(lp.n, 0.0);
  for (int n = 0; n < N; ++n)
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < 2; ++a)
          lp.objective[vidx(n, h, s, a)] = rew[n][s * 2 + a];
  return simplex_max(lp);
}

// Best value over all deterministic epoch-dependent single-arm policies for
// reward r(s,a) - lambda(h)*a, by exhaustive enumeration and exact rolling.
inline double enumerate_best_policy_value(const armab::ArmModel& arm,
                                          const std::vector<double>& reward_sa,
                                          const std::vector<double>& lambda) {
  const int S = arm.num_states;
  const int H = static_cast<int>(lambda.size());
  const int bits = S * H;
  if (bits > 20) throw std::runtime_error("enumeration too large");
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> d(S), dn(S);
  for (std::uint32_t mask = 0; mask < (1u << bits); ++mask) {
    std::fill(d.begin(), d.end(), 0.0);
    d[arm.initial_state] = 1.0;
    double total = 0.0;
    for (int h = 0; h < H; ++h) {
      std::fill(dn.begin(), dn.end(), 0.0);
      for (int s = 0; s < S; ++s) {
        if (d[s] == 0.0) continue;
        const int a = (mask >> (h * S + s)) & 1u;
        total += d[s] * (reward_sa[s * 2 + a] - lambda[h] * a);
        const double* row = arm.row(a, s);
        for (int s2 = 0; s2 < S; ++s2) dn[s2] += d[s] * row[s2];
      }
      d.swap(dn);
    }
    best = std::max(best, total);
  }
  return best;
}

} // namespace testsupport
