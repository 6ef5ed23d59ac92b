#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "armab/scenarios.hpp"

using armab::build_cpap;
using armab::build_deadline;
using armab::kNumActions;
using armab::Scenario;

namespace {

constexpr double kCluster1[3][3] = {{0.0385, 0.0, 0.9615},
                                    {0.0, 0.0, 1.0},
                                    {0.0257, 0.0245, 0.9498}};
constexpr double kCluster2[3][3] = {{0.7427, 0.0741, 0.1835},
                                    {0.3399, 0.1634, 0.4967},
                                    {0.2323, 0.1020, 0.6657}};

int didx(int D, int B) { return 1 + (D - 1) * 9 + (B - 1); }

} // namespace

TEST_CASE("adherence arms reproduce the cluster kernels when noise is off") {
  const double u = 0.3;
  const Scenario sc = build_cpap(2, 1, 4, 5, 0.0, 77, u, u);
  REQUIRE(sc.num_arms() == 4);
  REQUIRE(sc.num_states() == 3);
  REQUIRE(sc.budget == 1);
  REQUIRE(sc.horizon == 4);
  REQUIRE(sc.episodes == 5);

  for (int n = 0; n < 4; ++n) {
    const auto& arm = sc.arms[n];
    REQUIRE(arm.arm_id == n);
    REQUIRE(arm.initial_state == 0);
    const bool first = n < 2;
    for (int s = 0; s < 3; ++s) {
      double q[3], qsum = 0.0;
      for (int s2 = 0; s2 < 3; ++s2) {
        q[s2] = first ? kCluster1[s][s2] : kCluster2[s][s2];
        qsum += q[s2];
      }
      for (int s2 = 0; s2 < 3; ++s2) q[s2] /= qsum; // published rows are rounded
      for (int s2 = 0; s2 < 3; ++s2)
        REQUIRE(arm.p(0, s, s2) == Catch::Approx(q[s2]).margin(1e-12));

      const double p[3] = {q[0] * (1.0 - u), q[1] * (1.0 - u) + q[0] * u,
                           q[2] + q[1] * u};
      for (int s2 = 0; s2 < 3; ++s2)
        REQUIRE(arm.p(1, s, s2) == Catch::Approx(p[s2]).margin(1e-12));
    }
  }
}

TEST_CASE("adherence builder is deterministic in its seed") {
  const Scenario a = build_cpap(3, 2, 5, 4, 0.25, 900);
  const Scenario b = build_cpap(3, 2, 5, 4, 0.25, 900);
  const Scenario c = build_cpap(3, 2, 5, 4, 0.25, 901);
  REQUIRE(a.arms.size() == b.arms.size());
  bool all_equal = true, any_differs = false;
  for (std::size_t n = 0; n < a.arms.size(); ++n) {
    if (a.arms[n].transition != b.arms[n].transition) all_equal = false;
    if (a.arms[n].transition != c.arms[n].transition) any_differs = true;
  }
  REQUIRE(all_equal);
  REQUIRE(any_differs);
  REQUIRE(a.schedule.values == b.schedule.values);
}

TEST_CASE("episode coefficient ramps from one third to one") {
  const int T = 50;
  const Scenario sc = build_cpap(1, 1, 3, T, 0.0, 1);
  const int N = sc.num_arms(), S = sc.num_states();
  // top state pays (s+1)/3 = 1 before the coefficient
  REQUIRE(sc.reward(0, 0, 2, 1) == Catch::Approx(1.0 / 3.0).margin(1e-15));
  REQUIRE(sc.reward(T - 1, 0, 2, 1) == Catch::Approx(1.0).margin(1e-15));
  // middle episode interpolates linearly
  const double c25 = (0.5 + 24.0 / (T - 1)) / 1.5;
  REQUIRE(sc.reward(24, 0, 1, 1) == Catch::Approx(c25 * 2.0 / 3.0).margin(1e-15));
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s) REQUIRE(sc.reward(t, n, s, 0) == 0.0);
}

TEST_CASE("charging spots count down, complete, and refill") {
  const Scenario sc = build_deadline(3, 1, 4, 6, 5);
  REQUIRE(sc.num_arms() == 3);
  REQUIRE(sc.num_states() == 109);
  REQUIRE(sc.budget == 1);
  REQUIRE(sc.episodes == 4);
  REQUIRE(sc.horizon == 6);
  const auto& arm = sc.arms[0];
  REQUIRE(arm.initial_state == 0);

  // service decrements the remaining need while the deadline ticks down
  REQUIRE(arm.p(1, didx(3, 2), didx(2, 1)) == 1.0);
  REQUIRE(arm.p(0, didx(3, 2), didx(2, 2)) == 1.0);
  // completing the charge frees the spot
  REQUIRE(arm.p(1, didx(3, 1), 0) == 1.0);

  // an empty spot (or one at its deadline) refills with probability 0.7
  for (int s : {0, didx(1, 4)}) {
    for (int a = 0; a < kNumActions; ++a) {
      REQUIRE(arm.p(a, s, 0) == Catch::Approx(0.3).margin(1e-15));
      double occ = 0.0;
      for (int s2 = 1; s2 < 109; ++s2) {
        REQUIRE(arm.p(a, s, s2) == Catch::Approx(0.7 / 108).margin(1e-15));
        occ += arm.p(a, s, s2);
      }
      REQUIRE(occ == Catch::Approx(0.7).margin(1e-12));
    }
  }
}

TEST_CASE("charging rewards embed the unfinished-charge penalty") {
  const int T = 3;
  const Scenario sc = build_deadline(2, 1, T, 5, 9);
  // at full coefficient: interior service pays (0.5+16.2)/16.7, an empty
  // spot pays 16.2/16.7, and a deadline state loses 0.2 (B-1)^2
  REQUIRE(sc.reward(T - 1, 0, didx(4, 7), 1) ==
          Catch::Approx(16.7 / 16.7).margin(1e-15));
  REQUIRE(sc.reward(T - 1, 0, 0, 1) ==
          Catch::Approx(16.2 / 16.7).margin(1e-15));
  REQUIRE(sc.reward(T - 1, 0, didx(1, 4), 1) ==
          Catch::Approx(0.8922155688622754).margin(1e-15));
  REQUIRE(sc.reward(T - 1, 0, didx(1, 1), 1) ==
          Catch::Approx(16.7 / 16.7).margin(1e-15));
  // passive action never pays
  for (int s = 0; s < 109; ++s) REQUIRE(sc.reward(0, 0, s, 0) == 0.0);
  // the same ramp scales every episode
  REQUIRE(sc.reward(0, 1, didx(1, 4), 1) ==
          Catch::Approx(0.8922155688622754 / 3.0).margin(1e-15));
}

TEST_CASE("builders resolve the default mirror step size") {
  const Scenario cpap = build_cpap(2, 1, 4, 50, 0.1, 3);
  REQUIRE(cpap.eta == Catch::Approx(std::sqrt(std::log(18.0) / 50.0))
                          .margin(1e-15));
  const Scenario dl = build_deadline(2, 1, 10, 5, 3);
  REQUIRE(dl.eta ==
          Catch::Approx(std::sqrt(std::log(109.0 * 109.0 * 2.0) / 10.0))
              .margin(1e-15));
}
