#pragma once

// JSON input surface: scenario documents, solver settings, and run configs.
// Scenario documents carry either a full reward tensor or a per-episode
// coefficient vector applied to a base tensor.

#include <fstream>
#include <string>

#include "json.hpp"

#include "armab/experiment.hpp"
#include "armab/scenarios.hpp"

namespace armab {

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["budget"] = sc.budget;
  j["horizon"] = sc.horizon;
  j["episodes"] = sc.episodes;
  j["epsilon"] = sc.epsilon;
  j["eta"] = sc.eta;
  j["arms"] = nlohmann::json::array();
  for (const ArmModel& arm : sc.arms) {
    nlohmann::json ja;
    ja["arm_id"] = arm.arm_id;
    ja["num_states"] = arm.num_states;
    ja["initial_state"] = arm.initial_state;
    ja["transition"] = arm.transition;
    j["arms"].push_back(std::move(ja));
  }
  j["schedule"] = {{"kind", "tensor"},
                   {"passive_zero", sc.schedule.passive_zero},
                   {"values", sc.schedule.values}};
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  sc.budget = j.at("budget").get<int>();
  sc.horizon = j.at("horizon").get<int>();
  sc.episodes = j.at("episodes").get<int>();
  sc.epsilon = j.value("epsilon", 0.05);
  sc.eta = j.value("eta", 0.0);
  for (const nlohmann::json& ja : j.at("arms")) {
    ArmModel arm;
    arm.arm_id = ja.at("arm_id").get<int>();
    arm.num_states = ja.at("num_states").get<int>();
    arm.initial_state = ja.at("initial_state").get<int>();
    arm.transition = ja.at("transition").get<std::vector<double>>();
    sc.arms.push_back(std::move(arm));
  }
  const nlohmann::json& js = j.at("schedule");
  const std::string kind = js.at("kind").get<std::string>();
  sc.schedule.passive_zero = js.value("passive_zero", false);
  const int N = sc.num_arms(), S = sc.num_states(), T = sc.episodes;
  if (kind == "tensor") {
    sc.schedule.values = js.at("values").get<std::vector<double>>();
  } else if (kind == "coefficient") {
    const std::vector<double> coeffs =
        js.at("coeffs").get<std::vector<double>>();
    const std::vector<double> base = js.at("base").get<std::vector<double>>();
    if (static_cast<int>(coeffs.size()) != T ||
        base.size() != static_cast<std::size_t>(N) * S * kNumActions)
      throw Error(errc::dimension_mismatch,
                  "coefficient schedule has wrong coeffs/base sizes");
    sc.schedule.values.resize(static_cast<std::size_t>(T) * base.size());
    for (int t = 0; t < T; ++t)
      for (std::size_t i = 0; i < base.size(); ++i)
        sc.schedule.values[static_cast<std::size_t>(t) * base.size() + i] =
            coeffs[t] * base[i];
  } else {
    throw Error(errc::io_error, "unknown schedule kind: " + kind);
  }
  return validate_scenario(std::move(sc));
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(errc::io_error, "cannot open for writing: " + path);
  f << scenario_to_json(sc).dump(2) << "\n";
  if (!f) throw Error(errc::io_error, "short write: " + path);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(errc::io_error, "cannot open: " + path);
  nlohmann::json j;
  f >> j;
  return scenario_from_json(j);
}

inline SolverCfg solver_cfg_from_json(const nlohmann::json& j) {
  SolverCfg cfg;
  cfg.proj_tol = j.value("proj_tol", cfg.proj_tol);
  cfg.proj_max_iters = j.value("proj_max_iters", cfg.proj_max_iters);
  cfg.warm_start = j.value("warm_start", cfg.warm_start);
  return cfg;
}

// {"builtin": "cpap"|"deadline", "params": {...}} — params use the builder
// argument names; the builder seed defaults to a constant so that varying
// the run seed keeps the scenario fixed.
inline Scenario scenario_from_config(const nlohmann::json& j) {
  if (j.contains("path")) return load_scenario(j.at("path").get<std::string>());
  const std::string name = j.at("builtin").get<std::string>();
  const nlohmann::json p = j.value("params", nlohmann::json::object());
  const std::uint64_t bseed = p.value("seed", std::uint64_t{1234});
  if (name == "cpap")
    return build_cpap(p.value("arms_per_cluster", 10), p.value("budget", 10),
                      p.value("horizon", 50), p.value("episodes", 50),
                      p.value("noise_scale", 0.1), bseed,
                      p.value("uplift_min", 0.05), p.value("uplift_max", 0.50));
  if (name == "deadline")
    return build_deadline(p.value("num_arms", 100), p.value("budget", 30),
                          p.value("episodes", 100), p.value("horizon", 100),
                          bseed);
  throw Error(errc::io_error, "unknown builtin scenario: " + name);
}

inline RunSpec run_spec_from_json(const nlohmann::json& j) {
  RunSpec spec;
  spec.scenario = scenario_from_config(j.at("scenario"));
  spec.learner = j.value("learner", std::string("ucmd-armab"));
  spec.mc_rounds = j.value("mc_rounds", 1);
  spec.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("solver_cfg")) spec.solver = solver_cfg_from_json(j.at("solver_cfg"));
  spec.out_path = j.value("out", std::string{});
  return spec;
}

inline RunSpec load_run_spec(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(errc::io_error, "cannot open: " + path);
  nlohmann::json j;
  f >> j;
  return run_spec_from_json(j);
}

} // namespace armab
