#pragma once

// Monte-Carlo benchmark driver. One experiment = one scenario, one learner
// id, R independent rounds of T episodes each. The hindsight bound is
// computed once per experiment; each round derives its own seeds, so the
// record set is identical for any worker count.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "armab/learners.hpp"
#include "armab/oracle.hpp"

namespace armab {

struct RunSpec {
  Scenario scenario;
  std::string learner = "ucmd-armab";
  int mc_rounds = 1;
  std::uint64_t seed = 1;
  SolverCfg solver;
  std::string out_path; // empty = caller handles output
};

struct RegretRecord {
  int round = 0; // 1-based
  int t = 0;     // 1-based
  double realized = 0.0;
  double oracle = 0.0;
  double cum_regret = 0.0;
  int proj_iters = 0;
  double lp_gap = 0.0;
  int flag = 0;
  double wall_ms = 0.0; // not part of the CSV schema
};

inline std::vector<RegretRecord> run_experiment(const RunSpec& spec,
                                                int workers = 1) {
  if (spec.mc_rounds < 1)
    throw Error(errc::dimension_mismatch, "mc_rounds must be >= 1");
  const Scenario& sc = spec.scenario;
  const HindsightBaseline hb = hindsight_baseline(sc);
  const int R = spec.mc_rounds, T = sc.episodes;
  std::vector<RegretRecord> all(static_cast<std::size_t>(R) * T);

  auto run_round = [&](int k) {
    RandomStream rs = stream_for(spec.seed, k + 1, 0, 0);
    const std::uint64_t env_seed = rs.next_u64();
    const std::uint64_t learner_seed = rs.next_u64();
    std::unique_ptr<Learner> learner =
        make_learner(spec.learner, sc, learner_seed, spec.solver);
    double cum = 0.0;
    for (int t = 1; t <= T; ++t) {
      const auto t0 = std::chrono::steady_clock::now();
      learner->begin_episode(t);
      const Trajectory traj = run_episode(
          sc, t,
          [&](int h, const std::vector<int>& st) { return learner->act(h, st); },
          env_seed);
      learner->end_episode(traj);
      const auto t1 = std::chrono::steady_clock::now();
      const EpisodeDiag diag = learner->last_diag();
      RegretRecord& rec = all[static_cast<std::size_t>(k) * T + (t - 1)];
      rec.round = k + 1;
      rec.t = t;
      rec.realized = traj.realized_reward();
      rec.oracle = hb.value[t - 1];
      cum += rec.oracle - rec.realized;
      rec.cum_regret = cum;
      rec.proj_iters = diag.proj_iters;
      rec.lp_gap = hb.gap[t - 1];
      rec.flag = diag.flag;
      rec.wall_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  };

  const int pool = std::max(1, std::min(workers, R));
  if (pool == 1) {
    for (int k = 0; k < R; ++k) run_round(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int w = 0; w < pool; ++w)
      threads.emplace_back([&] {
        for (int k = next.fetch_add(1); k < R; k = next.fetch_add(1))
          run_round(k);
      });
    for (std::thread& th : threads) th.join();
  }
  return all;
}

inline std::string records_csv(const std::vector<RegretRecord>& records) {
  std::string out = "round,t,realized,oracle,cum_regret,proj_iters,lp_gap,flag\n";
  char buf[256];
  for (const RegretRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%d,%.17g,%d\n",
                  r.round, r.t, r.realized, r.oracle, r.cum_regret,
                  r.proj_iters, r.lp_gap, r.flag);
    out += buf;
  }
  return out;
}

inline void write_csv(const std::vector<RegretRecord>& records,
                      const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr)
    throw Error(errc::io_error, "cannot open for writing: " + path);
  const std::string body = records_csv(records);
  const std::size_t n = std::fwrite(body.data(), 1, body.size(), f);
  std::fclose(f);
  if (n != body.size())
    throw Error(errc::io_error, "short write: " + path);
}

} // namespace armab
