#pragma once

// Visit counts, empirical transition estimates, and Hoeffding confidence
// widths. The width for a pair with C past visits at episode t is
//   delta = min(1, sqrt( ln(4|S||A|N(t-1)H / eps) / (2 max(C,1)) )),
// with delta = 1 at t = 1 (no data). Pairs never visited estimate a uniform
// kernel row.

#include <cmath>
#include <cstdint>
#include <vector>

#include "armab/model.hpp"

namespace armab {

struct Counts {
  int num_arms = 0;
  int num_states = 0;
  std::vector<std::int64_t> visits;      // [n][s][a]
  std::vector<std::int64_t> transitions; // [n][s][a][s']

  Counts() = default;
  Counts(int N, int S)
      : num_arms(N), num_states(S),
        visits(static_cast<std::size_t>(N) * S * kNumActions, 0),
        transitions(static_cast<std::size_t>(N) * S * kNumActions * S, 0) {}

  std::size_t vidx(int n, int s, int a) const {
    return (static_cast<std::size_t>(n) * num_states + s) * kNumActions + a;
  }
  std::size_t tidx(int n, int s, int a, int s2) const {
    return vidx(n, s, a) * num_states + s2;
  }
  std::int64_t visit(int n, int s, int a) const { return visits[vidx(n, s, a)]; }
  std::int64_t transition(int n, int s, int a, int s2) const {
    return transitions[tidx(n, s, a, s2)];
  }
};

inline void update_counts(Counts& counts, const Trajectory& traj) {
  for (int h = 0; h < traj.horizon; ++h) {
    for (int n = 0; n < traj.num_arms; ++n) {
      const TrajectoryStep& ts = traj.at(h, n);
      counts.visits[counts.vidx(n, ts.state, ts.action)] += 1;
      counts.transitions[counts.tidx(n, ts.state, ts.action, ts.next_state)] += 1;
    }
  }
}

// empirical row P_hat(.|s,a); uniform when the pair has no visits
inline std::vector<double> empirical_transition(const Counts& counts, int n,
                                                int s, int a) {
  const int S = counts.num_states;
  std::vector<double> row(S);
  const std::int64_t c = counts.visit(n, s, a);
  if (c == 0) {
    for (int s2 = 0; s2 < S; ++s2) row[s2] = 1.0 / S;
  } else {
    for (int s2 = 0; s2 < S; ++s2)
      row[s2] = static_cast<double>(counts.transition(n, s, a, s2)) /
                static_cast<double>(c);
  }
  return row;
}

struct WidthParams {
  int num_states = 0;
  int num_actions = kNumActions;
  int num_arms = 0;
  int horizon = 0;
  double epsilon = 0.05;
};

inline double confidence_width(std::int64_t visit_count, int t,
                               const WidthParams& wp) {
  if (t <= 1) return 1.0;
  const double arg = 4.0 * wp.num_states * wp.num_actions * wp.num_arms *
                     static_cast<double>(t - 1) * wp.horizon / wp.epsilon;
  const double c = static_cast<double>(visit_count < 1 ? 1 : visit_count);
  return std::min(1.0, std::sqrt(std::log(arg) / (2.0 * c)));
}

inline double confidence_width(const Counts& counts, int n, int s, int a, int t,
                               const WidthParams& wp) {
  return confidence_width(counts.visit(n, s, a), t, wp);
}

struct ConfidenceSet {
  int num_arms = 0;
  int num_states = 0;
  std::vector<double> p_hat; // [n][s][a][s']
  std::vector<double> delta; // [n][s][a]

  std::size_t didx(int n, int s, int a) const {
    return (static_cast<std::size_t>(n) * num_states + s) * kNumActions + a;
  }
  const double* row(int n, int s, int a) const {
    return p_hat.data() + didx(n, s, a) * num_states;
  }
  double width(int n, int s, int a) const { return delta[didx(n, s, a)]; }
};

inline ConfidenceSet build_confidence(const Counts& counts, int t,
                                      const WidthParams& wp) {
  ConfidenceSet cs;
  cs.num_arms = counts.num_arms;
  cs.num_states = counts.num_states;
  const int N = counts.num_arms, S = counts.num_states;
  cs.p_hat.resize(static_cast<std::size_t>(N) * S * kNumActions * S);
  cs.delta.resize(static_cast<std::size_t>(N) * S * kNumActions);
  for (int n = 0; n < N; ++n) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < kNumActions; ++a) {
        const std::vector<double> row = empirical_transition(counts, n, s, a);
        double* dst = cs.p_hat.data() + cs.didx(n, s, a) * S;
        for (int s2 = 0; s2 < S; ++s2) dst[s2] = row[s2];
        cs.delta[cs.didx(n, s, a)] = confidence_width(counts, n, s, a, t, wp);
      }
    }
  }
  return cs;
}

// true iff |P_hat - P| <= delta entrywise across all arms
inline bool contains_truth(const ConfidenceSet& cs,
                           const std::vector<ArmModel>& arms) {
  if (static_cast<int>(arms.size()) != cs.num_arms)
    throw Error(errc::dimension_mismatch, "arm count mismatch");
  const int S = cs.num_states;
  for (int n = 0; n < cs.num_arms; ++n) {
    if (arms[n].num_states != S)
      throw Error(errc::dimension_mismatch, "state count mismatch");
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < kNumActions; ++a) {
        const double d = cs.width(n, s, a);
        const double* ph = cs.row(n, s, a);
        const double* p = arms[n].row(a, s);
        for (int s2 = 0; s2 < S; ++s2)
          if (std::abs(ph[s2] - p[s2]) > d) return false;
      }
    }
  }
  return true;
}

} // namespace armab
