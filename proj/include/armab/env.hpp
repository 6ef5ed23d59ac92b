#pragma once

// Episode execution: per decision epoch the controller supplies a joint
// binary action vector with exactly B ones, every arm reveals the reward of
// its taken state-action pair, and next states are sampled independently per
// arm from the true kernels.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "armab/model.hpp"
#include "armab/rng.hpp"

namespace armab {

struct EnvState {
  int episode = 1; // 1-based
  int epoch = 1;   // 1-based, next epoch to execute
  std::vector<int> states;
  std::uint64_t seed = 0; // streams derive from (seed, episode, epoch, arm)
};

inline EnvState reset_episode(const Scenario& sc, int t, std::uint64_t seed) {
  if (t < 1 || t > sc.episodes)
    throw Error(errc::episode_out_of_range,
                "episode " + std::to_string(t) + " outside 1.." +
                    std::to_string(sc.episodes));
  EnvState env;
  env.episode = t;
  env.epoch = 1;
  env.seed = seed;
  env.states.resize(sc.arms.size());
  for (std::size_t n = 0; n < sc.arms.size(); ++n)
    env.states[n] = sc.arms[n].initial_state;
  return env;
}

// Executes one epoch; returns observed rewards per arm and advances env.
inline std::vector<double> step(const Scenario& sc, EnvState& env,
                                const std::vector<std::uint8_t>& actions) {
  const int N = sc.num_arms();
  if (env.epoch > sc.horizon)
    throw Error(errc::epoch_overrun, "epoch exceeds horizon");
  if (static_cast<int>(actions.size()) != N)
    throw Error(errc::dimension_mismatch, "action vector length mismatch");
  int active = 0;
  for (auto a : actions) active += (a != 0);
  if (active != sc.budget)
    throw Error(errc::budget_violation,
                "expected exactly " + std::to_string(sc.budget) +
                    " active arms, got " + std::to_string(active));

  std::vector<double> rewards(N);
  const int t0 = env.episode - 1;
  for (int n = 0; n < N; ++n) {
    const int s = env.states[n];
    const int a = actions[n] ? 1 : 0;
    rewards[n] = sc.reward(t0, n, s, a);
    RandomStream rs = stream_for(env.seed ^ kEnvSalt, env.episode, env.epoch, n);
    env.states[n] =
        rs.next_categorical(sc.arms[n].row(a, s), sc.arms[n].num_states);
  }
  env.epoch += 1;
  return rewards;
}

// policy: (epoch, current states) -> joint action with exactly B ones
using Policy = std::function<std::vector<std::uint8_t>(int, const std::vector<int>&)>;

inline Trajectory run_episode(const Scenario& sc, int t, const Policy& policy,
                              std::uint64_t seed) {
  EnvState env = reset_episode(sc, t, seed);
  Trajectory traj;
  traj.episode = t;
  traj.num_arms = sc.num_arms();
  traj.horizon = sc.horizon;
  traj.steps.resize(static_cast<std::size_t>(sc.horizon) * sc.num_arms());
  for (int h = 1; h <= sc.horizon; ++h) {
    const std::vector<int> states = env.states;
    const std::vector<std::uint8_t> actions = policy(h, states);
    const std::vector<double> rewards = step(sc, env, actions);
    for (int n = 0; n < sc.num_arms(); ++n) {
      TrajectoryStep& ts = traj.at(h - 1, n);
      ts.state = states[n];
      ts.action = actions[n] ? 1 : 0;
      ts.reward = rewards[n];
      ts.next_state = env.states[n];
    }
  }
  return traj;
}

// debugging dump, columns t,h,n,s,a,r,s_next
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,h,n,s,a,r,s_next\n";
  char buf[128];
  for (int h = 0; h < traj.horizon; ++h) {
    for (int n = 0; n < traj.num_arms; ++n) {
      const TrajectoryStep& ts = traj.at(h, n);
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d,%.17g,%d\n", traj.episode,
                    h + 1, n, ts.state, static_cast<int>(ts.action), ts.reward,
                    ts.next_state);
      out += buf;
    }
  }
  return out;
}

} // namespace armab
