#pragma once

// Offline planning against known transition kernels: the per-episode upper
// bound used for regret accounting. The coupled budget constraint is
// relaxed with per-epoch prices; each price vector decomposes the problem
// into independent finite-horizon dynamic programs, and a subgradient loop
// with Polyak steps closes the gap between the price envelope and a
// recovered feasible occupancy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "armab/occupancy.hpp"
#include "armab/simplex.hpp"

namespace armab {

// Deterministic epoch-dependent policy for one arm together with its
// priced value from the arm's initial state.
struct ArmPlan {
  double value = 0.0;
  std::vector<std::uint8_t> act; // [h][s]
};

// Backward induction for max E[sum_h r(s,a) - lambda(h) a]; ties at a
// backup go to the passive action.
inline ArmPlan per_arm_dp(const ArmModel& arm,
                          const std::vector<double>& reward_sa,
                          const std::vector<double>& lambda) {
  const int S = arm.num_states;
  const int H = static_cast<int>(lambda.size());
  if (static_cast<int>(reward_sa.size()) != S * kNumActions)
    throw Error(errc::dimension_mismatch, "reward slice has wrong size");
  ArmPlan plan;
  plan.act.assign(static_cast<std::size_t>(H) * S, 0);
  std::vector<double> v(S, 0.0), vnext(S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double q[kNumActions];
      for (int a = 0; a < kNumActions; ++a) {
        double cont = 0.0;
        const double* row = arm.row(a, s);
        for (int s2 = 0; s2 < S; ++s2) cont += row[s2] * vnext[s2];
        q[a] = reward_sa[static_cast<std::size_t>(s) * kNumActions + a] -
               lambda[h] * a + cont;
      }
      const bool go = q[1] > q[0];
      plan.act[static_cast<std::size_t>(h) * S + s] = go ? 1 : 0;
      v[s] = go ? q[1] : q[0];
    }
    v.swap(vnext);
  }
  plan.value = vnext[arm.initial_state];
  return plan;
}

// Adds weight times the state-action occupancy of a deterministic policy,
// rolled under the arm's kernel from its initial state, into arm slice n.
inline void roll_policy(const ArmModel& arm,
                        const std::vector<std::uint8_t>& act, int H,
                        double weight, OccupancyMu& mu, int n) {
  const int S = arm.num_states;
  std::vector<double> d(S, 0.0), dnext(S);
  d[arm.initial_state] = 1.0;
  for (int h = 0; h < H; ++h) {
    std::fill(dnext.begin(), dnext.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      const int a = act[static_cast<std::size_t>(h) * S + s];
      mu.at(n, h, s, a) += weight * d[s];
      const double* row = arm.row(a, s);
      for (int s2 = 0; s2 < S; ++s2) dnext[s2] += d[s] * row[s2];
    }
    d.swap(dnext);
  }
}

struct LPSolution {
  double value = 0.0;        // price-envelope upper bound
  double primal_value = 0.0; // best recovered feasible value
  double gap = 0.0;
  double theta = 1.0;        // passive-mixing weight of the recovered primal
  int iterations = 0;
  bool converged = false;
  std::vector<double> lambda; // [h]
  OccupancyMu mu;             // recovered feasible occupancy
};

namespace detail {

// Shared subgradient loop. inner(lambda, mu_k) must fill mu_k with this
// iteration's occupancy and return the summed priced dp value; the reward
// value of mu_k is recomputed here via value_fn. mu_best receives the
// occupancy certifying the returned primal value.
struct LagrangianLoopResult {
  double upper = 0.0;
  double primal = 0.0;
  double theta = 1.0;
  int iterations = 0;
  bool converged = false;
};

template <typename InnerFn, typename ValueFn>
LagrangianLoopResult lagrangian_budget_solve(
    int H, int budget, double passive_value, double gap_tol, int max_iters,
    std::vector<double>& lambda, OccupancyMu& mu_k, OccupancyMu& mu_bar,
    const OccupancyMu& mu_passive, OccupancyMu& mu_best, InnerFn inner,
    ValueFn value_fn) {
  LagrangianLoopResult out;
  out.upper = std::numeric_limits<double>::infinity();
  out.primal = -std::numeric_limits<double>::infinity();
  std::vector<double> act(H), act_bar(H, 0.0), g(H);
  const int N = mu_k.num_arms, S = mu_k.num_states;
  double v_bar = 0.0;
  // the running average restarts on a doubling schedule so late windows
  // only mix iterates from the settled price region
  int window = 0, next_reset = 8;
  for (int k = 1; k <= max_iters; ++k) {
    out.iterations = k;
    std::fill(mu_k.mu.begin(), mu_k.mu.end(), 0.0);
    const double dp_sum = inner(lambda, mu_k);
    double lag = dp_sum;
    for (int h = 0; h < H; ++h) lag += budget * lambda[h];
    out.upper = std::min(out.upper, lag);

    const double v_k = value_fn(mu_k);
    std::fill(act.begin(), act.end(), 0.0);
    for (int n = 0; n < N; ++n)
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) act[h] += mu_k.at(n, h, s, 1);

    double act_k_max = 0.0;
    for (int h = 0; h < H; ++h) act_k_max = std::max(act_k_max, act[h]);
    if (act_k_max <= budget + 1e-12 && v_k > out.primal) {
      out.primal = v_k;
      out.theta = 1.0;
      mu_best.mu = mu_k.mu;
    }

    if (k == next_reset) {
      window = 0;
      next_reset *= 2;
      v_bar = 0.0;
      std::fill(act_bar.begin(), act_bar.end(), 0.0);
      std::fill(mu_bar.mu.begin(), mu_bar.mu.end(), 0.0);
    }
    const double wk = 1.0 / ++window;
    v_bar += wk * (v_k - v_bar);
    for (int h = 0; h < H; ++h) act_bar[h] += wk * (act[h] - act_bar[h]);
    for (std::size_t i = 0; i < mu_bar.mu.size(); ++i)
      mu_bar.mu[i] += wk * (mu_k.mu[i] - mu_bar.mu[i]);

    double act_max = 0.0;
    for (int h = 0; h < H; ++h) act_max = std::max(act_max, act_bar[h]);
    const double theta =
        (act_max <= budget) ? 1.0 : static_cast<double>(budget) / act_max;
    const double primal = theta * v_bar + (1.0 - theta) * passive_value;
    if (primal > out.primal) {
      out.primal = primal;
      out.theta = theta;
      for (std::size_t i = 0; i < mu_best.mu.size(); ++i)
        mu_best.mu[i] =
            theta * mu_bar.mu[i] + (1.0 - theta) * mu_passive.mu[i];
    }

    if (out.upper - out.primal <= gap_tol) {
      out.converged = true;
      break;
    }
    double gnorm2 = 0.0;
    for (int h = 0; h < H; ++h) {
      g[h] = budget - act[h];
      gnorm2 += g[h] * g[h];
    }
    if (gnorm2 <= 1e-24) break;
    // level step: aim halfway between the envelope and the best primal,
    // which keeps steps useful while the primal estimate is still weak
    const double level = out.primal + 0.5 * (out.upper - out.primal);
    const double step = std::max(lag - level, 0.0) / gnorm2;
    for (int h = 0; h < H; ++h)
      lambda[h] = std::max(0.0, lambda[h] - step * g[h]);
  }
  return out;
}

} // namespace detail

// Hard-budget upper bound for an arbitrary per-arm reward slice rew[n][s*2+a]
// under the true kernels. warm_lambda, when given, seeds and receives the
// price vector.
inline LPSolution solve_relaxed_lp_on(
    const Scenario& sc, const std::vector<std::vector<double>>& rew,
    double gap_tol = -1.0, int max_iters = 5000,
    std::vector<double>* warm_lambda = nullptr) {
  const int N = sc.num_arms(), H = sc.horizon, S = sc.num_states();
  if (static_cast<int>(rew.size()) != N)
    throw Error(errc::dimension_mismatch, "reward slice has wrong arm count");
  if (gap_tol <= 0.0) gap_tol = 1e-5 * N * H;

  auto make_mu = [&] {
    OccupancyMu m;
    m.num_arms = N;
    m.horizon = H;
    m.num_states = S;
    m.mu.assign(static_cast<std::size_t>(N) * H * S * kNumActions, 0.0);
    return m;
  };
  OccupancyMu mu_k = make_mu(), mu_bar = make_mu(), mu_passive = make_mu();

  const std::vector<std::uint8_t> all_passive(static_cast<std::size_t>(H) * S, 0);
  for (int n = 0; n < N; ++n)
    roll_policy(sc.arms[n], all_passive, H, 1.0, mu_passive, n);

  auto value_of = [&](const OccupancyMu& m) {
    double v = 0.0;
    for (int n = 0; n < N; ++n)
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < kNumActions; ++a) {
            const double w = m.at(n, h, s, a);
            if (w != 0.0)
              v += w * rew[n][static_cast<std::size_t>(s) * kNumActions + a];
          }
    return v;
  };
  const double passive_value = value_of(mu_passive);

  std::vector<double> lambda_local(H, 0.0);
  std::vector<double>& lambda =
      (warm_lambda != nullptr && static_cast<int>(warm_lambda->size()) == H)
          ? *warm_lambda
          : lambda_local;

  LPSolution sol;
  sol.mu = make_mu();

  // Every distinct deterministic plan the price loop visits becomes a column
  // of a restricted master program: max sum c_j x_j over convex weights per
  // arm subject to the per-epoch budget rows. Solving the master exactly
  // recovers the optimal mixture of visited plans, and its budget duals are
  // improved prices for the envelope.
  struct AtomPool {
    std::map<std::vector<std::uint8_t>, int> seen;
    std::vector<std::vector<std::uint8_t>> act;
    std::vector<double> value;
    std::vector<double> prof; // [j * H + h] expected activity
  };
  std::vector<AtomPool> pool(N);
  OccupancyMu roll1 = make_mu();
  roll1.num_arms = 1;
  roll1.mu.assign(static_cast<std::size_t>(H) * S * kNumActions, 0.0);
  auto add_atom = [&](int n, const std::vector<std::uint8_t>& a) {
    AtomPool& p = pool[n];
    if (p.act.size() >= 4096) return;
    auto ins = p.seen.emplace(a, static_cast<int>(p.act.size()));
    if (!ins.second) return;
    p.act.push_back(a);
    std::fill(roll1.mu.begin(), roll1.mu.end(), 0.0);
    roll_policy(sc.arms[n], a, H, 1.0, roll1, 0);
    double c = 0.0;
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s)
        for (int aa = 0; aa < kNumActions; ++aa)
          c += roll1.at(0, h, s, aa) *
               rew[n][static_cast<std::size_t>(s) * kNumActions + aa];
    p.value.push_back(c);
    for (int h = 0; h < H; ++h) {
      double m = 0.0;
      for (int s = 0; s < S; ++s) m += roll1.at(0, h, s, 1);
      p.prof.push_back(m);
    }
  };
  for (int n = 0; n < N; ++n) add_atom(n, all_passive);

  double upper = std::numeric_limits<double>::infinity();
  double primal = -std::numeric_limits<double>::infinity();
  double theta_out = 1.0;
  bool converged = false;
  int iters = 0;
  std::vector<double> act(H), act_bar(H, 0.0), g(H);
  double v_bar = 0.0;
  // the running average restarts on a doubling schedule so late windows
  // only mix iterates from the settled price region
  int window = 0, next_reset = 8;
  int next_polish = std::min(64, max_iters);
  int stale_polish = 0;
  double polished_gap = std::numeric_limits<double>::infinity();

  auto total_atoms = [&] {
    std::size_t c = 0;
    for (const auto& p : pool) c += p.act.size();
    return c;
  };

  auto master_polish = [&]() -> bool {
    int cols = 0;
    std::vector<int> base(N);
    for (int n = 0; n < N; ++n) {
      base[n] = cols;
      cols += static_cast<int>(pool[n].act.size());
    }
    std::vector<std::vector<double>> le(H, std::vector<double>(cols, 0.0));
    std::vector<double> le_rhs(H, static_cast<double>(sc.budget));
    std::vector<std::vector<double>> eq(N, std::vector<double>(cols, 0.0));
    std::vector<double> eq_rhs(N, 1.0);
    std::vector<double> obj(cols, 0.0);
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < static_cast<int>(pool[n].act.size()); ++j) {
        obj[base[n] + j] = pool[n].value[j];
        eq[n][base[n] + j] = 1.0;
        for (int h = 0; h < H; ++h)
          le[h][base[n] + j] = pool[n].prof[static_cast<std::size_t>(j) * H + h];
      }
    const detail::SimplexResult ms =
        detail::simplex_solve(le, le_rhs, eq, eq_rhs, obj);
    if (!ms.ok) return false;
    if (ms.value > primal) {
      primal = ms.value;
      theta_out = 1.0;
      std::fill(sol.mu.mu.begin(), sol.mu.mu.end(), 0.0);
      for (int n = 0; n < N; ++n)
        for (int j = 0; j < static_cast<int>(pool[n].act.size()); ++j) {
          const double w = ms.x[base[n] + j];
          if (w > 1e-14) roll_policy(sc.arms[n], pool[n].act[j], H, w, sol.mu, n);
        }
    }
    // the master's budget duals are the best available price estimate; the
    // next sweep at these prices both tightens the envelope and, when it
    // finds plans the master has not seen, grows the column pool
    for (int h = 0; h < H; ++h) lambda[h] = ms.le_duals[h];
    return true;
  };

  for (int k = 1; k <= max_iters; ++k) {
    iters = k;
    std::fill(mu_k.mu.begin(), mu_k.mu.end(), 0.0);
    double dp_sum = 0.0;
    for (int n = 0; n < N; ++n) {
      const ArmPlan plan = per_arm_dp(sc.arms[n], rew[n], lambda);
      dp_sum += plan.value;
      roll_policy(sc.arms[n], plan.act, H, 1.0, mu_k, n);
      add_atom(n, plan.act);
    }
    double lag = dp_sum;
    for (int h = 0; h < H; ++h) lag += sc.budget * lambda[h];
    upper = std::min(upper, lag);

    const double v_k = value_of(mu_k);
    std::fill(act.begin(), act.end(), 0.0);
    for (int n = 0; n < N; ++n)
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) act[h] += mu_k.at(n, h, s, 1);
    double act_k_max = 0.0;
    for (int h = 0; h < H; ++h) act_k_max = std::max(act_k_max, act[h]);
    if (act_k_max <= sc.budget + 1e-12 && v_k > primal) {
      primal = v_k;
      theta_out = 1.0;
      sol.mu.mu = mu_k.mu;
    }

    if (k == next_reset) {
      window = 0;
      next_reset *= 2;
      v_bar = 0.0;
      std::fill(act_bar.begin(), act_bar.end(), 0.0);
      std::fill(mu_bar.mu.begin(), mu_bar.mu.end(), 0.0);
    }
    const double wk = 1.0 / ++window;
    v_bar += wk * (v_k - v_bar);
    for (int h = 0; h < H; ++h) act_bar[h] += wk * (act[h] - act_bar[h]);
    for (std::size_t i = 0; i < mu_bar.mu.size(); ++i)
      mu_bar.mu[i] += wk * (mu_k.mu[i] - mu_bar.mu[i]);
    double act_max = 0.0;
    for (int h = 0; h < H; ++h) act_max = std::max(act_max, act_bar[h]);
    const double theta =
        (act_max <= sc.budget) ? 1.0 : static_cast<double>(sc.budget) / act_max;
    const double mixed = theta * v_bar + (1.0 - theta) * passive_value;
    if (mixed > primal) {
      primal = mixed;
      theta_out = theta;
      for (std::size_t i = 0; i < sol.mu.mu.size(); ++i)
        sol.mu.mu[i] = theta * mu_bar.mu[i] + (1.0 - theta) * mu_passive.mu[i];
    }

    if (upper - primal <= gap_tol) {
      converged = true;
      break;
    }

    double gnorm2 = 0.0;
    for (int h = 0; h < H; ++h) {
      g[h] = sc.budget - act[h];
      gnorm2 += g[h] * g[h];
    }
    if (k >= next_polish || gnorm2 <= 1e-24) {
      const std::size_t before = total_atoms();
      const bool ok = master_polish();
      next_polish = k + 16;
      if (upper - primal <= gap_tol) {
        converged = true;
        break;
      }
      const bool grew = total_atoms() > before;
      if (!grew && upper - primal >= polished_gap - 1e-14) {
        if (++stale_polish >= 3) break;
      } else {
        stale_polish = 0;
      }
      polished_gap = upper - primal;
      if (!ok && gnorm2 <= 1e-24) break;
      continue;
    }
    // level step: aim halfway between the envelope and the best primal,
    // which keeps steps useful while the primal estimate is still weak
    const double level = primal + 0.5 * (upper - primal);
    const double step = std::max(lag - level, 0.0) / gnorm2;
    for (int h = 0; h < H; ++h)
      lambda[h] = std::max(0.0, lambda[h] - step * g[h]);
  }

  if (!converged) {
    master_polish();
    if (upper - primal <= gap_tol) converged = true;
  }

  sol.value = upper;
  sol.primal_value = primal;
  sol.gap = upper - primal;
  sol.theta = theta_out;
  sol.iterations = iters;
  sol.converged = converged;
  sol.lambda = lambda;
  if (warm_lambda != nullptr && static_cast<int>(warm_lambda->size()) != H)
    *warm_lambda = lambda;
  return sol;
}

namespace detail {
inline std::vector<std::vector<double>> reward_slice(const Scenario& sc,
                                                     int t_index) {
  const int N = sc.num_arms(), S = sc.num_states();
  std::vector<std::vector<double>> rew(N);
  for (int n = 0; n < N; ++n) {
    rew[n].assign(static_cast<std::size_t>(S) * kNumActions, 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < kNumActions; ++a)
        rew[n][static_cast<std::size_t>(s) * kNumActions + a] =
            sc.reward(t_index, n, s, a);
  }
  return rew;
}
} // namespace detail

// Upper bound for a single episode's rewards.
inline LPSolution solve_relaxed_lp(const Scenario& sc, int t_index,
                                   double gap_tol = -1.0, int max_iters = 5000,
                                   std::vector<double>* warm_lambda = nullptr) {
  if (t_index < 0 || t_index >= sc.episodes)
    throw Error(errc::episode_out_of_range, "episode index out of range");
  return solve_relaxed_lp_on(sc, detail::reward_slice(sc, t_index), gap_tol,
                             max_iters, warm_lambda);
}

struct HindsightBaseline {
  std::vector<double> value; // per-episode value of the hindsight plan, [t]
  std::vector<double> gap;   // duality gap of the underlying solve, [t]
  LPSolution plan;           // the single occupancy shared across episodes
};

// Solves one relaxed plan against the whole schedule summed over episodes,
// then scores that fixed plan on each episode's rewards. The per-episode
// values need not dominate every episode individually; their total does.
inline HindsightBaseline hindsight_baseline(const Scenario& sc,
                                            double gap_tol = -1.0,
                                            int max_iters = 5000) {
  const int N = sc.num_arms(), S = sc.num_states();
  std::vector<std::vector<double>> total(N);
  for (int n = 0; n < N; ++n)
    total[n].assign(static_cast<std::size_t>(S) * kNumActions, 0.0);
  for (int t = 0; t < sc.episodes; ++t)
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < kNumActions; ++a)
          total[n][static_cast<std::size_t>(s) * kNumActions + a] +=
              sc.reward(t, n, s, a);

  HindsightBaseline hb;
  hb.plan = solve_relaxed_lp_on(sc, total, gap_tol, max_iters);
  hb.value.reserve(sc.episodes);
  hb.gap.assign(sc.episodes, hb.plan.gap);
  const int H = sc.horizon;
  for (int t = 0; t < sc.episodes; ++t) {
    double v = 0.0;
    for (int n = 0; n < N; ++n)
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < kNumActions; ++a) {
            const double w = hb.plan.mu.at(n, h, s, a);
            if (w != 0.0) v += w * sc.reward(t, n, s, a);
          }
    hb.value.push_back(v);
  }
  return hb;
}

// Tiles the arm population and the budget by an integer factor; the reward
// schedule is repeated across the new arms.
inline Scenario replicate_scenario(const Scenario& sc, int factor) {
  if (factor < 1)
    throw Error(errc::dimension_mismatch, "replication factor must be >= 1");
  Scenario out = sc;
  out.arms.clear();
  out.budget = sc.budget * factor;
  const int N = sc.num_arms(), S = sc.num_states();
  for (int f = 0; f < factor; ++f)
    for (int n = 0; n < N; ++n) {
      ArmModel arm = sc.arms[n];
      arm.arm_id = f * N + n;
      out.arms.push_back(std::move(arm));
    }
  out.schedule.values.assign(static_cast<std::size_t>(sc.episodes) * N *
                                 factor * S * kNumActions, 0.0);
  for (int t = 0; t < sc.episodes; ++t)
    for (int f = 0; f < factor; ++f)
      for (int n = 0; n < N; ++n)
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < kNumActions; ++a)
            out.schedule.values[((static_cast<std::size_t>(t) * N * factor +
                                  f * N + n) * S + s) * kNumActions + a] =
                sc.reward(t, n, s, a);
  return out;
}

} // namespace armab
