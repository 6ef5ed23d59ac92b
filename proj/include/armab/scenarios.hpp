#pragma once

// The two bundled case studies: therapy-adherence arms drawn from two
// behavioral clusters, and an EV-charging deadline problem. Both emit
// rewards rescaled into [0,1] with passive rewards fixed at zero and an
// episode-increasing coefficient (0.5 + (t-1)/(T-1)) / 1.5.

#include <cmath>
#include <cstdint>
#include <vector>

#include "armab/model.hpp"
#include "armab/rng.hpp"

namespace armab {

namespace detail {

inline double episode_coeff(int t, int T) {
  const double ramp = (T > 1) ? static_cast<double>(t - 1) / (T - 1) : 0.0;
  return (0.5 + ramp) / 1.5;
}

inline void renormalize_row(double* row, int S) {
  double sum = 0.0;
  for (int i = 0; i < S; ++i) sum += row[i];
  for (int i = 0; i < S; ++i) row[i] /= sum;
}

} // namespace detail

// Adherence arms over 3 states. Passive rows come from the two cluster
// kernels (optionally perturbed by Dirichlet noise of weight noise_scale);
// the active row moves an uplift share of each lower state's mass one state
// up. Arms [0, per_cluster) use cluster 1, the rest cluster 2. Rewards are
// proportional to the state's adherence level.
inline Scenario build_cpap(int num_arms_per_cluster, int B, int H, int T,
                           double noise_scale, std::uint64_t seed,
                           double uplift_min = 0.05, double uplift_max = 0.50) {
  constexpr int S = 3;
  const double cluster1[S][S] = {{0.0385, 0.0, 0.9615},
                                 {0.0, 0.0, 1.0},
                                 {0.0257, 0.0245, 0.9498}};
  const double cluster2[S][S] = {{0.7427, 0.0741, 0.1835},
                                 {0.3399, 0.1634, 0.4967},
                                 {0.2323, 0.1020, 0.6657}};
  const int N = 2 * num_arms_per_cluster;
  Scenario sc;
  sc.budget = B;
  sc.horizon = H;
  sc.episodes = T;
  sc.arms.reserve(N);
  for (int n = 0; n < N; ++n) {
    const bool first = n < num_arms_per_cluster;
    RandomStream rs = stream_for(seed ^ kBuilderSalt, 0, 0, n);
    const double u = uplift_min + (uplift_max - uplift_min) * rs.next_double();
    ArmModel arm;
    arm.arm_id = n;
    arm.num_states = S;
    arm.initial_state = 0;
    arm.transition.assign(kNumActions * S * S, 0.0);
    for (int s = 0; s < S; ++s) {
      double q[S];
      for (int s2 = 0; s2 < S; ++s2)
        q[s2] = first ? cluster1[s][s2] : cluster2[s][s2];
      double dir[S];
      double dsum = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        dir[s2] = -std::log(std::max(1.0 - rs.next_double(), 1e-16));
        dsum += dir[s2];
      }
      for (int s2 = 0; s2 < S; ++s2)
        q[s2] += noise_scale * dir[s2] / dsum;
      detail::renormalize_row(q, S);
      double p[S];
      p[0] = q[0] * (1.0 - u);
      p[1] = q[1] * (1.0 - u) + q[0] * u;
      p[2] = q[2] + q[1] * u;
      detail::renormalize_row(p, S);
      for (int s2 = 0; s2 < S; ++s2) {
        arm.transition[(0 * S + s) * S + s2] = q[s2];
        arm.transition[(1 * S + s) * S + s2] = p[s2];
      }
    }
    sc.arms.push_back(std::move(arm));
  }
  sc.schedule.passive_zero = true;
  sc.schedule.values.assign(static_cast<std::size_t>(T) * N * S * kNumActions,
                            0.0);
  for (int t = 1; t <= T; ++t) {
    const double c = detail::episode_coeff(t, T);
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        sc.schedule.values[((static_cast<std::size_t>(t - 1) * N + n) * S + s) *
                               kNumActions + 1] = c * (s + 1) / 3.0;
  }
  return validate_scenario(std::move(sc));
}

// EV-charging spots. State 0 is an empty spot; state 1 + (D-1)*9 + (B-1)
// is a vehicle needing B units with D slots until departure (D in 1..12,
// B in 1..9). Occupied spots count down deterministically, losing one unit
// of need when served; at D=1 (and while empty) the next epoch brings a
// fresh vehicle with probability 0.7, uniform over the 108 occupied states.
// The raw net reward (service margin minus the quadratic unfinished-charge
// penalty at departure) is shifted and scaled into [0,1].
inline Scenario build_deadline(int N, int M, int T, int H,
                               std::uint64_t seed) {
  (void)seed; // the kernel and rewards are deterministic
  constexpr int kMaxD = 12, kMaxB = 9;
  constexpr int S = 1 + kMaxD * kMaxB;
  auto sidx = [](int D, int B) { return 1 + (D - 1) * kMaxB + (B - 1); };

  std::vector<double> arrival(S, 0.0);
  arrival[0] = 0.3;
  for (int D = 1; D <= kMaxD; ++D)
    for (int B = 1; B <= kMaxB; ++B) arrival[sidx(D, B)] = 0.7 / (kMaxD * kMaxB);

  ArmModel proto;
  proto.num_states = S;
  proto.initial_state = 0;
  proto.transition.assign(kNumActions * S * S, 0.0);
  auto row = [&](int a, int s) {
    return proto.transition.data() + (static_cast<std::size_t>(a) * S + s) * S;
  };
  for (int a = 0; a < kNumActions; ++a) {
    for (int s2 = 0; s2 < S; ++s2) row(a, 0)[s2] = arrival[s2];
    for (int D = 1; D <= kMaxD; ++D)
      for (int B = 1; B <= kMaxB; ++B) {
        double* r = row(a, sidx(D, B));
        if (D == 1) {
          for (int s2 = 0; s2 < S; ++s2) r[s2] = arrival[s2];
        } else {
          const int left = B - a;
          r[left <= 0 ? 0 : sidx(D - 1, left)] = 1.0;
        }
      }
  }

  std::vector<double> active_reward(S, 0.0);
  const double shift = 0.2 * kMaxB * kMaxB;        // 16.2
  const double span = 0.5 + 0.2 * kMaxB * kMaxB;   // 16.7
  for (int s = 0; s < S; ++s) {
    double raw = 0.0;
    if (s > 0) {
      const int D = 1 + (s - 1) / kMaxB;
      const int B = 1 + (s - 1) % kMaxB;
      raw = (D == 1) ? 0.5 - 0.2 * (B - 1) * (B - 1) : 0.5;
    }
    active_reward[s] = std::min(1.0, std::max(0.0, (raw + shift) / span));
  }

  Scenario sc;
  sc.budget = M;
  sc.horizon = H;
  sc.episodes = T;
  sc.arms.reserve(N);
  for (int n = 0; n < N; ++n) {
    ArmModel arm = proto;
    arm.arm_id = n;
    sc.arms.push_back(std::move(arm));
  }
  sc.schedule.passive_zero = true;
  sc.schedule.values.assign(static_cast<std::size_t>(T) * N * S * kNumActions,
                            0.0);
  for (int t = 1; t <= T; ++t) {
    const double c = detail::episode_coeff(t, T);
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        sc.schedule.values[((static_cast<std::size_t>(t - 1) * N + n) * S + s) *
                               kNumActions + 1] = c * active_reward[s];
  }
  return validate_scenario(std::move(sc));
}

} // namespace armab
