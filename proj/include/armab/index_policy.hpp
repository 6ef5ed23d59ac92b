#pragma once

// Turns an occupancy tensor into a per-epoch activation index: the
// conditional probability of acting in a state, given that the state is
// occupied. The controller activates the B arms whose current states carry
// the highest index.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "armab/occupancy.hpp"

namespace armab {

struct IndexTable {
  int num_arms = 0;
  int horizon = 0;
  int num_states = 0;
  std::vector<double> index; // [n][h][s]

  std::size_t idx(int n, int h, int s) const {
    return (static_cast<std::size_t>(n) * horizon + h) * num_states + s;
  }
  double at(int n, int h, int s) const { return index[idx(n, h, s)]; }
};

inline IndexTable compute_indices(const OccupancyZ& z) {
  IndexTable t;
  t.num_arms = z.num_arms;
  t.horizon = z.horizon;
  t.num_states = z.num_states;
  t.index.assign(static_cast<std::size_t>(z.num_arms) * z.horizon *
                     z.num_states, 0.0);
  const int S = z.num_states;
  for (int n = 0; n < z.num_arms; ++n)
    for (int h = 0; h < z.horizon; ++h)
      for (int s = 0; s < S; ++s) {
        double active = 0.0, total = 0.0;
        for (int a = 0; a < kNumActions; ++a) {
          const double* row = z.z.data() + z.idx(n, h, s, a, 0);
          double block = 0.0;
          for (int s2 = 0; s2 < S; ++s2) block += row[s2];
          total += block;
          if (a == 1) active = block;
        }
        t.index[t.idx(n, h, s)] = (total < 1e-12) ? 0.0 : active / total;
      }
  return t;
}

inline IndexTable compute_indices(const OccupancyMu& m) {
  IndexTable t;
  t.num_arms = m.num_arms;
  t.horizon = m.horizon;
  t.num_states = m.num_states;
  t.index.assign(static_cast<std::size_t>(m.num_arms) * m.horizon *
                     m.num_states, 0.0);
  for (int n = 0; n < m.num_arms; ++n)
    for (int h = 0; h < m.horizon; ++h)
      for (int s = 0; s < m.num_states; ++s) {
        const double active = m.at(n, h, s, 1);
        const double total = active + m.at(n, h, s, 0);
        t.index[t.idx(n, h, s)] = (total < 1e-12) ? 0.0 : active / total;
      }
  return t;
}

// epoch is 1-based, matching the episode runner; ties go to lower arm ids.
inline std::vector<std::uint8_t> select_actions(const IndexTable& t, int epoch,
                                                const std::vector<int>& states,
                                                int budget) {
  const int N = t.num_arms;
  if (static_cast<int>(states.size()) != N || epoch < 1 || epoch > t.horizon)
    throw Error(errc::dimension_mismatch, "bad epoch or state vector");
  if (budget < 1 || budget > N)
    throw Error(errc::budget_exceeds_arms, "budget must lie in [1, num_arms]");
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> val(N);
  for (int n = 0; n < N; ++n) val[n] = t.at(n, epoch - 1, states[n]);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return val[a] > val[b]; });
  std::vector<std::uint8_t> act(N, 0);
  for (int i = 0; i < budget; ++i) act[order[i]] = 1;
  return act;
}

} // namespace armab
