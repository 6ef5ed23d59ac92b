#pragma once

// Core domain types: arms, reward schedules, scenarios, trajectories, and
// scenario validation. Arms are two-action MDPs (0 = passive, 1 = active);
// a scenario bundles N arms, a hard per-epoch activation budget B, an episode
// horizon H, and a per-episode reward schedule in [0,1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace armab {

enum class errc {
  dimension_mismatch,
  row_sum_out_of_tolerance,
  budget_exceeds_arms,
  episode_out_of_range,
  budget_violation,
  epoch_overrun,
  step_size_too_large,
  solver_diverged,
  infeasible_set,
  inconsistent_counts,
  io_error,
};

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

private:
  errc code_;
};

inline constexpr int kNumActions = 2;

struct ArmModel {
  int arm_id = 0;
  int num_states = 0;
  // P(s'|s,a), row-major [a][s][s']
  std::vector<double> transition;
  int initial_state = 0;

  double p(int a, int s, int s2) const {
    return transition[(static_cast<std::size_t>(a) * num_states + s) * num_states + s2];
  }
  const double* row(int a, int s) const {
    return transition.data() + (static_cast<std::size_t>(a) * num_states + s) * num_states;
  }
  double* row(int a, int s) {
    return transition.data() + (static_cast<std::size_t>(a) * num_states + s) * num_states;
  }
};

struct RewardSchedule {
  // r[t][n][s][a], row-major, entries in [0,1]
  std::vector<double> values;
  bool passive_zero = true;

  double r(int t, int n, int s, int a, int N, int S) const {
    return values[((static_cast<std::size_t>(t) * N + n) * S + s) * kNumActions + a];
  }
};

struct Scenario {
  std::vector<ArmModel> arms;
  int budget = 1;
  int horizon = 1;
  int episodes = 1;
  RewardSchedule schedule;
  double epsilon = 0.05;
  double eta = 0.0; // 0 means "use the default step size"

  int num_arms() const { return static_cast<int>(arms.size()); }
  int num_states() const { return arms.empty() ? 0 : arms[0].num_states; }

  double reward(int t, int n, int s, int a) const {
    return schedule.r(t, n, s, a, num_arms(), num_states());
  }

  // default OMD step size sqrt(ln(|S|^2 |A|) / T)
  double default_eta() const {
    // clamped so eta * r_hat <= 1 holds for any estimate (r_hat <= 1)
    double s = static_cast<double>(num_states());
    return std::min(
        1.0,
        std::sqrt(std::log(s * s * kNumActions) / static_cast<double>(episodes)));
  }
};

struct TrajectoryStep {
  int state = 0;
  std::uint8_t action = 0;
  double reward = 0.0; // observed value of the taken pair
  int next_state = 0;
};

struct Trajectory {
  int episode = 1; // 1-based
  int num_arms = 0;
  int horizon = 0;
  std::vector<TrajectoryStep> steps; // [h][n]

  const TrajectoryStep& at(int h, int n) const {
    return steps[static_cast<std::size_t>(h) * num_arms + n];
  }
  TrajectoryStep& at(int h, int n) {
    return steps[static_cast<std::size_t>(h) * num_arms + n];
  }

  double realized_reward() const {
    double total = 0.0;
    for (const auto& st : steps) total += st.reward;
    return total;
  }
};

// Checks dimensions, budget, schedule range; renormalizes kernel rows whose
// sums are within 1e-3 of 1 (source tables are often rounded); rejects worse.
inline Scenario validate_scenario(Scenario sc) {
  const int N = sc.num_arms();
  if (N == 0) throw Error(errc::dimension_mismatch, "scenario has no arms");
  const int S = sc.arms[0].num_states;
  if (S < 1) throw Error(errc::dimension_mismatch, "num_states must be >= 1");
  if (sc.horizon < 1) throw Error(errc::dimension_mismatch, "horizon must be >= 1");
  if (sc.episodes < 1) throw Error(errc::dimension_mismatch, "episodes must be >= 1");
  if (sc.budget < 1 || sc.budget > N)
    throw Error(errc::budget_exceeds_arms,
                "budget must satisfy 1 <= B <= N, got B=" + std::to_string(sc.budget) +
                    " with N=" + std::to_string(N));
  if (!(sc.epsilon > 0.0 && sc.epsilon < 1.0))
    throw Error(errc::dimension_mismatch, "epsilon must lie in (0,1)");

  for (int n = 0; n < N; ++n) {
    ArmModel& arm = sc.arms[n];
    if (arm.num_states != S)
      throw Error(errc::dimension_mismatch, "all arms must share the state count");
    if (arm.transition.size() != static_cast<std::size_t>(kNumActions) * S * S)
      throw Error(errc::dimension_mismatch,
                  "arm " + std::to_string(n) + ": transition tensor size mismatch");
    if (arm.initial_state < 0 || arm.initial_state >= S)
      throw Error(errc::dimension_mismatch,
                  "arm " + std::to_string(n) + ": initial state out of range");
    for (int a = 0; a < kNumActions; ++a) {
      for (int s = 0; s < S; ++s) {
        double* row = arm.row(a, s);
        double sum = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          if (row[s2] < 0.0)
            throw Error(errc::row_sum_out_of_tolerance,
                        "arm " + std::to_string(n) + ": negative kernel entry");
          sum += row[s2];
        }
        if (std::abs(sum - 1.0) > 1e-3)
          throw Error(errc::row_sum_out_of_tolerance,
                      "arm " + std::to_string(n) + " row (a=" + std::to_string(a) +
                          ", s=" + std::to_string(s) + ") sums to " + std::to_string(sum));
        if (std::abs(sum - 1.0) > 1e-12) // keep reloads bit-stable
          for (int s2 = 0; s2 < S; ++s2) row[s2] /= sum;
      }
    }
  }

  const std::size_t want =
      static_cast<std::size_t>(sc.episodes) * N * S * kNumActions;
  if (sc.schedule.values.size() != want)
    throw Error(errc::dimension_mismatch, "schedule tensor size mismatch");
  for (std::size_t i = 0; i < want; ++i) {
    double v = sc.schedule.values[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(errc::dimension_mismatch, "schedule entry outside [0,1]");
    if (sc.schedule.passive_zero && (i % kNumActions) == 0 && v != 0.0)
      throw Error(errc::dimension_mismatch,
                  "passive_zero schedule has a nonzero passive entry");
  }

  if (sc.eta <= 0.0) sc.eta = sc.default_eta();
  return sc;
}

} // namespace armab
