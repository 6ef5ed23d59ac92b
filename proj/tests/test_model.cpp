#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "armab/model.hpp"
#include "support/fixtures.hpp"

using armab::ArmModel;
using armab::Error;
using armab::errc;
using armab::Scenario;
using armab::validate_scenario;

namespace {

Scenario one_arm(std::vector<double> transition, int S) {
  Scenario sc;
  ArmModel arm;
  arm.num_states = S;
  arm.initial_state = 0;
  arm.transition = std::move(transition);
  sc.arms.push_back(std::move(arm));
  sc.budget = 1;
  sc.horizon = 2;
  sc.episodes = 2;
  sc.schedule.values.assign(static_cast<std::size_t>(2) * 1 * S * 2, 0.0);
  return sc;
}

} // namespace

TEST_CASE("rows slightly off one are renormalized") {
  // measured three-state row that sums to 1.0003
  Scenario sc = one_arm({0.7427, 0.0741, 0.1835, 0.0, 0.0, 1.0,
                         0.7427, 0.0741, 0.1835, 0.0, 0.0, 1.0,
                         0.7427, 0.0741, 0.1835, 0.0, 0.0, 1.0},
                        3);
  const Scenario v = validate_scenario(sc);
  double sum = 0.0;
  for (int s2 = 0; s2 < 3; ++s2) sum += v.arms[0].p(0, 0, s2);
  REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(v.arms[0].p(0, 0, 0) == Catch::Approx(0.7427 / 1.0003).epsilon(1e-12));
}

TEST_CASE("identity kernel passes through unchanged") {
  Scenario sc = one_arm({1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0}, 2);
  const Scenario v = validate_scenario(sc);
  REQUIRE(v.arms[0].p(0, 0, 0) == 1.0);
  REQUIRE(v.arms[0].p(1, 1, 1) == 1.0);
}

TEST_CASE("row sums beyond tolerance are rejected") {
  Scenario sc = one_arm({0.45, 0.45, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, 2);
  REQUIRE_THROWS_AS(validate_scenario(sc), Error);
  try {
    validate_scenario(sc);
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::row_sum_out_of_tolerance);
  }
}

TEST_CASE("negative kernel entries are rejected") {
  Scenario sc = one_arm({-0.1, 1.1, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, 2);
  REQUIRE_THROWS_AS(validate_scenario(sc), Error);
}

TEST_CASE("budget must stay within the arm count") {
  Scenario sc = testsupport::flip_scenario(3, 2, 4, 2);
  sc.budget = 4;
  REQUIRE_THROWS_AS(validate_scenario(sc), Error);
  sc.budget = 0;
  REQUIRE_THROWS_AS(validate_scenario(sc), Error);
}

TEST_CASE("schedule entries outside [0,1] are rejected") {
  Scenario sc = testsupport::flip_scenario(2, 1, 3, 2);
  sc.schedule.values[1] = 1.5;
  REQUIRE_THROWS_AS(validate_scenario(sc), Error);
}

TEST_CASE("default step size fills in when eta is unset") {
  Scenario sc = testsupport::flip_scenario(2, 1, 3, 50);
  REQUIRE(sc.eta == Catch::Approx(std::sqrt(std::log(8.0) / 50.0)).epsilon(1e-15));

  Scenario tuned = testsupport::flip_scenario(2, 1, 3, 50);
  tuned.eta = 0.0;
  tuned.eta = validate_scenario(tuned).eta;
  REQUIRE(tuned.eta > 0.0);
}

TEST_CASE("three-state default step size matches the closed form") {
  Scenario sc = testsupport::random_scenario(5, 2, 3, 4, 50, 1);
  REQUIRE(sc.eta == Catch::Approx(0.24043176819614184).epsilon(1e-15));
}

TEST_CASE("reward accessor reads the [t][n][s][a] layout") {
  Scenario sc = testsupport::flip_scenario(2, 1, 3, 2, 0.5);
  sc.schedule.values[((static_cast<std::size_t>(1) * 2 + 1) * 2 + 0) * 2 + 1] =
      0.875;
  const Scenario v = validate_scenario(sc);
  REQUIRE(v.reward(1, 1, 0, 1) == 0.875);
  REQUIRE(v.reward(0, 0, 0, 0) == 0.0);
  REQUIRE(v.reward(0, 0, 1, 1) == 0.5);
}

TEST_CASE("realized reward sums every step") {
  armab::Trajectory traj;
  traj.num_arms = 2;
  traj.horizon = 2;
  traj.steps.resize(4);
  traj.steps[0].reward = 0.25;
  traj.steps[3].reward = 0.5;
  REQUIRE(traj.realized_reward() == Catch::Approx(0.75));
}
