#pragma once

// The online controllers. All of them act through the same interface: the
// experiment driver announces episode boundaries and feeds back the realized
// trajectory; the learner supplies a joint action per epoch that activates
// exactly B arms.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "armab/confidence.hpp"
#include "armab/env.hpp"
#include "armab/estimator.hpp"
#include "armab/index_policy.hpp"
#include "armab/oracle.hpp"
#include "armab/projection.hpp"

namespace armab {

struct EpisodeDiag {
  int proj_iters = 0;
  int flag = 0; // 0 normal, 1 projection fallback to previous plan
  ResidualReport residuals; // of the accepted plan, all-zero if no projection
};

class Learner {
public:
  virtual ~Learner() = default;
  virtual const char* id() const = 0;
  virtual void begin_episode(int t) = 0; // 1-based
  virtual std::vector<std::uint8_t> act(int epoch,
                                        const std::vector<int>& states) = 0;
  virtual void end_episode(const Trajectory& traj) = 0;
  virtual EpisodeDiag last_diag() const { return {}; }
};

// Running per-(arm,state,action) reward averages; pairs never seen report
// the optimistic value 1.
struct SampleMeanRewards {
  int num_arms = 0;
  int num_states = 0;
  std::vector<double> sum;        // [n][s][a]
  std::vector<std::int64_t> count;

  SampleMeanRewards() = default;
  SampleMeanRewards(int N, int S)
      : num_arms(N), num_states(S),
        sum(static_cast<std::size_t>(N) * S * kNumActions, 0.0),
        count(sum.size(), 0) {}

  std::size_t idx(int n, int s, int a) const {
    return (static_cast<std::size_t>(n) * num_states + s) * kNumActions + a;
  }
  void update(const Trajectory& traj) {
    for (int h = 0; h < traj.horizon; ++h)
      for (int n = 0; n < traj.num_arms; ++n) {
        const TrajectoryStep& ts = traj.at(h, n);
        const std::size_t i = idx(n, ts.state, ts.action);
        sum[i] += ts.reward;
        count[i] += 1;
      }
  }
  double mean(int n, int s, int a) const {
    const std::size_t i = idx(n, s, a);
    return count[i] == 0 ? 1.0 : sum[i] / static_cast<double>(count[i]);
  }
  std::int64_t visits(int n, int s, int a) const { return count[idx(n, s, a)]; }
};

// Mirror-descent controller: confidence sets from counts, overestimating
// reward estimates from bandit feedback, an exponential step on the
// occupancy tensor, KL projection onto the current constraint set, and a
// top-B activation index extracted from the projected tensor.
class UcmdArmabLearner : public Learner {
public:
  UcmdArmabLearner(const Scenario& sc, const SolverCfg& cfg)
      : sc_(&sc), cfg_(cfg), counts_{},
        wp_{sc.num_states(), kNumActions, sc.num_arms(), sc.horizon,
            sc.epsilon},
        duals_(sc.num_arms(), sc.horizon, sc.num_states()) {
    counts_.num_arms = sc.num_arms();
    counts_.num_states = sc.num_states();
    counts_.visits.assign(static_cast<std::size_t>(counts_.num_arms) *
                              counts_.num_states * kNumActions, 0);
    counts_.transitions.assign(counts_.visits.size() * counts_.num_states, 0);
    for (const ArmModel& a : sc.arms) init_states_.push_back(a.initial_state);
  }

  const char* id() const override { return "ucmd-armab"; }

  void begin_episode(int t) override {
    diag_ = {};
    cs_ = build_confidence(counts_, t, wp_);
    FeasibleSetParams fp;
    fp.confidence = &cs_;
    fp.budget = sc_->budget;
    fp.initial_states = init_states_;
    if (t == 1) {
      z_ = init_occupancy(*sc_, cs_);
      table_ = compute_indices(z_);
      return;
    }
    try {
      const OccupancyZ stepped = unconstrained_step(z_, r_hat_, sc_->eta);
      ProjectionResult res = project_kl(stepped, fp, cfg_,
                                        cfg_.warm_start ? &duals_ : nullptr);
      z_ = std::move(res.z);
      diag_.proj_iters = res.iterations;
      diag_.residuals = res.residuals;
      table_ = compute_indices(z_);
    } catch (const SolverDiverged&) {
      diag_.flag = 1; // keep the previous plan for this episode
    }
  }

  std::vector<std::uint8_t> act(int epoch,
                                const std::vector<int>& states) override {
    return select_actions(table_, epoch, states, sc_->budget);
  }

  void end_episode(const Trajectory& traj) override {
    const EpisodeCounts ec = episode_counts(traj, sc_->num_states());
    r_hat_ = estimate_rewards(traj, ec, cs_.delta, sc_->horizon);
    update_counts(counts_, traj);
  }

  EpisodeDiag last_diag() const override { return diag_; }

private:
  const Scenario* sc_;
  SolverCfg cfg_;
  Counts counts_;
  WidthParams wp_;
  std::vector<int> init_states_;
  ConfidenceSet cs_;
  OccupancyZ z_;
  DualVars duals_;
  IndexTable table_;
  RewardEstimate r_hat_;
  EpisodeDiag diag_;
};

namespace detail {

// Kernel row inside the confidence box maximizing the continuation value:
// start from the lower bounds and pour the leftover mass into states in
// descending value order. vorder must hold state ids sorted by v descending.
inline void optimistic_row(const double* p_hat, double width, const double* v,
                           const std::vector<int>& vorder, int S,
                           double* row) {
  double rem = 1.0;
  for (int s2 = 0; s2 < S; ++s2) {
    row[s2] = std::max(0.0, p_hat[s2] - width);
    rem -= row[s2];
  }
  for (int i = 0; i < S && rem > 1e-15; ++i) {
    const int s2 = vorder[i];
    const double cap = std::min(1.0, p_hat[s2] + width);
    const double add = std::min(rem, cap - row[s2]);
    if (add > 0.0) {
      row[s2] += add;
      rem -= add;
    }
  }
  (void)v;
}

} // namespace detail

// Optimistic planner baseline: per episode, solves the budget-priced
// planning problem over the confidence box with extended backward induction
// (sample-mean rewards with optimism, best kernel in the box per backup),
// then follows the activation index of the recovered occupancy.
class RmabUcrlLearner : public Learner {
public:
  RmabUcrlLearner(const Scenario& sc, bool reward_bonus = true,
                  int plan_iters = 500)
      : sc_(&sc), reward_bonus_(reward_bonus), plan_iters_(plan_iters),
        counts_{}, means_(sc.num_arms(), sc.num_states()),
        wp_{sc.num_states(), kNumActions, sc.num_arms(), sc.horizon,
            sc.epsilon},
        warm_lambda_(sc.horizon, 0.0) {
    counts_.num_arms = sc.num_arms();
    counts_.num_states = sc.num_states();
    counts_.visits.assign(static_cast<std::size_t>(counts_.num_arms) *
                              counts_.num_states * kNumActions, 0);
    counts_.transitions.assign(counts_.visits.size() * counts_.num_states, 0);
  }

  const char* id() const override { return "rmab-ucrl"; }

  void begin_episode(int t) override {
    const int N = sc_->num_arms(), S = sc_->num_states(), H = sc_->horizon;
    cs_ = build_confidence(counts_, t, wp_);
    rew_.assign(static_cast<std::size_t>(N) * S * kNumActions, 0.0);
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          double r = means_.mean(n, s, a);
          if (reward_bonus_ && means_.visits(n, s, a) > 0)
            r += confidence_width(means_.visits(n, s, a), t, wp_);
          rew_[(static_cast<std::size_t>(n) * S + s) * kNumActions + a] =
              std::min(r, 1.0);
        }

    auto make_mu = [&] {
      OccupancyMu m;
      m.num_arms = N;
      m.horizon = H;
      m.num_states = S;
      m.mu.assign(static_cast<std::size_t>(N) * H * S * kNumActions, 0.0);
      return m;
    };
    OccupancyMu mu_k = make_mu(), mu_bar = make_mu(), mu_pass = make_mu(),
                mu_best = make_mu();
    const std::vector<std::uint8_t> passive(static_cast<std::size_t>(H) * S, 0);
    for (int n = 0; n < N; ++n) roll_optimistic(n, passive, 1.0, mu_pass);
    const double passive_value = value_of(mu_pass);

    armab::detail::lagrangian_budget_solve(
        H, sc_->budget, passive_value, 1e-5 * N * H, plan_iters_, warm_lambda_,
        mu_k, mu_bar, mu_pass, mu_best,
        [&](const std::vector<double>& lam, OccupancyMu& mu_out) {
          double dp_sum = 0.0;
          for (int n = 0; n < N; ++n) dp_sum += plan_arm(n, lam, mu_out);
          return dp_sum;
        },
        [&](const OccupancyMu& m) { return value_of(m); });

    table_ = compute_indices(mu_best);
  }

  std::vector<std::uint8_t> act(int epoch,
                                const std::vector<int>& states) override {
    return select_actions(table_, epoch, states, sc_->budget);
  }

  void end_episode(const Trajectory& traj) override {
    update_counts(counts_, traj);
    means_.update(traj);
  }

private:
  double value_of(const OccupancyMu& m) const {
    double v = 0.0;
    for (std::size_t i = 0; i < m.mu.size(); ++i)
      if (m.mu[i] != 0.0)
        v += m.mu[i] * rew_[reward_index_of(i)];
    return v;
  }
  std::size_t reward_index_of(std::size_t mi) const {
    const int S = sc_->num_states(), H = sc_->horizon;
    const std::size_t sa = mi % (static_cast<std::size_t>(S) * kNumActions);
    const std::size_t n = mi / (static_cast<std::size_t>(H) * S * kNumActions);
    return n * S * kNumActions + sa;
  }

  // Extended backward induction for one arm; fills act_ and vtab_ then
  // rolls the plan under its own optimistic kernel into mu.
  double plan_arm(int n, const std::vector<double>& lambda, OccupancyMu& mu) {
    const int S = sc_->num_states(), H = sc_->horizon;
    act_.assign(static_cast<std::size_t>(H) * S, 0);
    vtab_.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    std::vector<int> vorder(S);
    std::vector<double> row(S);
    const double* rn = rew_.data() + static_cast<std::size_t>(n) * S * kNumActions;
    for (int h = H - 1; h >= 0; --h) {
      const double* vnext = vtab_.data() + static_cast<std::size_t>(h + 1) * S;
      std::iota(vorder.begin(), vorder.end(), 0);
      std::stable_sort(vorder.begin(), vorder.end(),
                       [&](int a, int b) { return vnext[a] > vnext[b]; });
      for (int s = 0; s < S; ++s) {
        double q[kNumActions];
        for (int a = 0; a < kNumActions; ++a) {
          detail::optimistic_row(cs_.row(n, s, a), cs_.width(n, s, a), vnext,
                                 vorder, S, row.data());
          double cont = 0.0;
          for (int s2 = 0; s2 < S; ++s2) cont += row[s2] * vnext[s2];
          q[a] = rn[static_cast<std::size_t>(s) * kNumActions + a] -
                 lambda[h] * a + cont;
        }
        const bool go = q[1] > q[0];
        act_[static_cast<std::size_t>(h) * S + s] = go ? 1 : 0;
        vtab_[static_cast<std::size_t>(h) * S + s] = go ? q[1] : q[0];
      }
    }
    roll_optimistic(n, act_, 1.0, mu);
    return vtab_[sc_->arms[n].initial_state];
  }

  void roll_optimistic(int n, const std::vector<std::uint8_t>& act,
                       double weight, OccupancyMu& mu) {
    const int S = sc_->num_states(), H = sc_->horizon;
    std::vector<double> d(S, 0.0), dnext(S), row(S);
    std::vector<int> vorder(S);
    d[sc_->arms[n].initial_state] = 1.0;
    for (int h = 0; h < H; ++h) {
      const double* vnext = vtab_.empty()
                                ? nullptr
                                : vtab_.data() + static_cast<std::size_t>(h + 1) * S;
      std::iota(vorder.begin(), vorder.end(), 0);
      if (vnext)
        std::stable_sort(vorder.begin(), vorder.end(),
                         [&](int a, int b) { return vnext[a] > vnext[b]; });
      std::fill(dnext.begin(), dnext.end(), 0.0);
      for (int s = 0; s < S; ++s) {
        if (d[s] == 0.0) continue;
        const int a = act[static_cast<std::size_t>(h) * S + s];
        mu.at(n, h, s, a) += weight * d[s];
        detail::optimistic_row(cs_.row(n, s, a), cs_.width(n, s, a),
                               vnext ? vnext : vtab_zero(S), vorder, S,
                               row.data());
        for (int s2 = 0; s2 < S; ++s2) dnext[s2] += d[s] * row[s2];
      }
      d.swap(dnext);
    }
  }

  const double* vtab_zero(int S) {
    zero_.assign(S, 0.0);
    return zero_.data();
  }

  const Scenario* sc_;
  bool reward_bonus_;
  int plan_iters_;
  Counts counts_;
  SampleMeanRewards means_;
  WidthParams wp_;
  ConfidenceSet cs_;
  std::vector<double> warm_lambda_;
  std::vector<double> rew_;
  std::vector<std::uint8_t> act_;
  std::vector<double> vtab_;
  std::vector<double> zero_;
  IndexTable table_;
};

// Follows the activation index of the true-kernel relaxed solution for each
// episode. No learning; a diagnostic upper-reference policy.
class LpIndexLearner : public Learner {
public:
  explicit LpIndexLearner(const Scenario& sc)
      : sc_(&sc), warm_lambda_(sc.horizon, 0.0) {}

  const char* id() const override { return "lp-index"; }

  void begin_episode(int t) override {
    const LPSolution sol =
        solve_relaxed_lp(*sc_, t - 1, -1.0, 5000, &warm_lambda_);
    table_ = compute_indices(sol.mu);
  }

  std::vector<std::uint8_t> act(int epoch,
                                const std::vector<int>& states) override {
    return select_actions(table_, epoch, states, sc_->budget);
  }

  void end_episode(const Trajectory&) override {}

private:
  const Scenario* sc_;
  std::vector<double> warm_lambda_;
  IndexTable table_;
};

// Uniform random B-subset per epoch.
class RandomLearner : public Learner {
public:
  RandomLearner(const Scenario& sc, std::uint64_t seed)
      : sc_(&sc), seed_(seed) {}

  const char* id() const override { return "random"; }
  void begin_episode(int t) override { episode_ = t; }

  std::vector<std::uint8_t> act(int epoch,
                                const std::vector<int>& states) override {
    (void)states;
    const int N = sc_->num_arms();
    RandomStream rs = stream_for(seed_ ^ kPolicySalt, episode_, epoch, 0);
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < sc_->budget; ++i) {
      const int j = i + rs.next_index(N - i);
      std::swap(order[i], order[j]);
    }
    std::vector<std::uint8_t> a(N, 0);
    for (int i = 0; i < sc_->budget; ++i) a[order[i]] = 1;
    return a;
  }

  void end_episode(const Trajectory&) override {}

private:
  const Scenario* sc_;
  std::uint64_t seed_;
  int episode_ = 1;
};

// Myopic baseline: activates the B arms whose current state has the highest
// estimated immediate active reward; unseen pairs count as 1.
class GreedyLearner : public Learner {
public:
  explicit GreedyLearner(const Scenario& sc)
      : sc_(&sc), means_(sc.num_arms(), sc.num_states()) {}

  const char* id() const override { return "greedy"; }
  void begin_episode(int) override {}

  std::vector<std::uint8_t> act(int,
                                const std::vector<int>& states) override {
    const int N = sc_->num_arms();
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> val(N);
    for (int n = 0; n < N; ++n) val[n] = means_.mean(n, states[n], 1);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return val[a] > val[b]; });
    std::vector<std::uint8_t> a(N, 0);
    for (int i = 0; i < sc_->budget; ++i) a[order[i]] = 1;
    return a;
  }

  void end_episode(const Trajectory& traj) override { means_.update(traj); }

private:
  const Scenario* sc_;
  SampleMeanRewards means_;
};

inline std::unique_ptr<Learner> make_learner(const std::string& id,
                                             const Scenario& sc,
                                             std::uint64_t seed,
                                             const SolverCfg& cfg = {}) {
  if (id == "ucmd-armab") return std::make_unique<UcmdArmabLearner>(sc, cfg);
  if (id == "rmab-ucrl") return std::make_unique<RmabUcrlLearner>(sc);
  if (id == "random") return std::make_unique<RandomLearner>(sc, seed);
  if (id == "greedy") return std::make_unique<GreedyLearner>(sc);
  if (id == "lp-index") return std::make_unique<LpIndexLearner>(sc);
  throw Error(errc::io_error, "unknown learner id: " + id);
}

} // namespace armab
