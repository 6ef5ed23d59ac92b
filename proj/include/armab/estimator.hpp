#pragma once

// Adversarial reward estimator from one episode of bandit feedback. For a
// visited pair the observed value is scaled by H / (within-episode visit
// count), an exploration bonus is added, and the result is capped at 1;
// unvisited pairs are optimistically set to 1. The estimate never falls
// below the true reward.

#include <algorithm>
#include <vector>

#include "armab/model.hpp"

namespace armab {

struct EpisodeCounts {
  int num_arms = 0;
  int num_states = 0;
  std::vector<int> c; // [n][s][a]

  std::size_t idx(int n, int s, int a) const {
    return (static_cast<std::size_t>(n) * num_states + s) * kNumActions + a;
  }
  int count(int n, int s, int a) const { return c[idx(n, s, a)]; }
};

inline EpisodeCounts episode_counts(const Trajectory& traj, int num_states) {
  EpisodeCounts ec;
  ec.num_arms = traj.num_arms;
  ec.num_states = num_states;
  ec.c.assign(static_cast<std::size_t>(traj.num_arms) * num_states * kNumActions, 0);
  for (int h = 0; h < traj.horizon; ++h)
    for (int n = 0; n < traj.num_arms; ++n) {
      const TrajectoryStep& ts = traj.at(h, n);
      ec.c[ec.idx(n, ts.state, ts.action)] += 1;
    }
  return ec;
}

struct RewardEstimate {
  int num_arms = 0;
  int num_states = 0;
  std::vector<double> r_hat; // [n][s][a], entries in [0,1]

  std::size_t idx(int n, int s, int a) const {
    return (static_cast<std::size_t>(n) * num_states + s) * kNumActions + a;
  }
  double at(int n, int s, int a) const { return r_hat[idx(n, s, a)]; }
};

// delta: bonus widths per (n,s,a), laid out like EpisodeCounts
inline RewardEstimate estimate_rewards(const Trajectory& traj,
                                       const EpisodeCounts& ec,
                                       const std::vector<double>& delta,
                                       int H) {
  const int N = ec.num_arms, S = ec.num_states;
  if (delta.size() != ec.c.size())
    throw Error(errc::dimension_mismatch, "bonus width table size mismatch");

  // recount to guard against counts from a different trajectory
  EpisodeCounts check = episode_counts(traj, S);
  if (check.c != ec.c)
    throw Error(errc::inconsistent_counts,
                "episode counts disagree with the trajectory");

  RewardEstimate re;
  re.num_arms = N;
  re.num_states = S;
  re.r_hat.assign(static_cast<std::size_t>(N) * S * kNumActions, 1.0);

  // one observed value per visited pair, the schedule is fixed within an episode
  std::vector<double> obs(re.r_hat.size(), 0.0);
  for (int h = 0; h < traj.horizon; ++h)
    for (int n = 0; n < N; ++n) {
      const TrajectoryStep& ts = traj.at(h, n);
      obs[re.idx(n, ts.state, ts.action)] = ts.reward;
    }

  for (int n = 0; n < N; ++n)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < kNumActions; ++a) {
        const std::size_t i = re.idx(n, s, a);
        const int c = ec.c[i];
        if (c > 0) {
          const double scaled = obs[i] * static_cast<double>(H) / c;
          re.r_hat[i] = std::min(scaled + delta[i], 1.0);
        }
      }
  return re;
}

} // namespace armab
