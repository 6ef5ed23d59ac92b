#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "armab/env.hpp"
#include "armab/model.hpp"
#include "armab/rng.hpp"

namespace testsupport {

// Both actions deterministically flip the state; rewards are constant
// r_active for a=1 and zero for a=0.
inline armab::Scenario flip_scenario(int N, int B, int H, int T,
                                     double r_active = 0.5) {
  armab::Scenario sc;
  for (int n = 0; n < N; ++n) {
    armab::ArmModel arm;
    arm.arm_id = n;
    arm.num_states = 2;
    arm.initial_state = 0;
    arm.transition = {0.0, 1.0, 1.0, 0.0,   // a=0
                      0.0, 1.0, 1.0, 0.0};  // a=1
    sc.arms.push_back(std::move(arm));
  }
  sc.budget = B;
  sc.horizon = H;
  sc.episodes = T;
  sc.schedule.values.assign(static_cast<std::size_t>(T) * N * 2 * 2, 0.0);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < 2; ++s)
        sc.schedule.values[((static_cast<std::size_t>(t) * N + n) * 2 + s) * 2 +
                           1] = r_active;
  return armab::validate_scenario(std::move(sc));
}

// Dense random scenario: Dirichlet(1) kernel rows, uniform rewards for the
// active action, zero passive rewards, random initial states.
inline armab::Scenario random_scenario(std::uint64_t seed, int N, int S, int H,
                                       int T, int B) {
  armab::RandomStream rs = armab::stream_for(seed, 0, 0, 0);
  armab::Scenario sc;
  for (int n = 0; n < N; ++n) {
    armab::ArmModel arm;
    arm.arm_id = n;
    arm.num_states = S;
    arm.initial_state = rs.next_index(S);
    arm.transition.resize(static_cast<std::size_t>(2) * S * S);
    for (int a = 0; a < 2; ++a)
      for (int s = 0; s < S; ++s) {
        double* row = arm.row(a, s);
        double sum = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          row[s2] = -std::log(1.0 - rs.next_double() + 1e-16);
          sum += row[s2];
        }
        for (int s2 = 0; s2 < S; ++s2) row[s2] /= sum;
      }
    sc.arms.push_back(std::move(arm));
  }
  sc.budget = B;
  sc.horizon = H;
  sc.episodes = T;
  sc.schedule.values.assign(static_cast<std::size_t>(T) * N * S * 2, 0.0);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        sc.schedule.values[((static_cast<std::size_t>(t) * N + n) * S + s) * 2 +
                           1] = rs.next_double();
  return armab::validate_scenario(std::move(sc));
}

inline armab::Policy first_b_policy(int N, int B) {
  return [N, B](int, const std::vector<int>&) {
    std::vector<std::uint8_t> act(N, 0);
    for (int n = 0; n < B; ++n) act[n] = 1;
    return act;
  };
}

} // namespace testsupport
