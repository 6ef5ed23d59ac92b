#pragma once

// Time-dependent state-action-next-state occupancy tensors z_n(s,a,s';h) and
// the pieces of the mirror-descent round that have closed forms: feasible
// initialization, the exponential reward step, the unnormalized KL
// divergence, marginalization, and feasibility residuals for the constraint
// polytope (per-layer normalization, flow balance, initial-state boundary,
// activation budget, and transition-ratio bounds from the confidence set).

#include <algorithm>
#include <cmath>
#include <vector>

#include "armab/confidence.hpp"
#include "armab/estimator.hpp"
#include "armab/model.hpp"

namespace armab {

inline constexpr double kZFloor = 1e-300;

struct OccupancyZ {
  int num_arms = 0;
  int horizon = 0;
  int num_states = 0;
  std::vector<double> z; // [n][h][s][a][s']

  OccupancyZ() = default;
  OccupancyZ(int N, int H, int S)
      : num_arms(N), horizon(H), num_states(S),
        z(static_cast<std::size_t>(N) * H * S * kNumActions * S, kZFloor) {}

  std::size_t layer_size() const {
    return static_cast<std::size_t>(num_states) * kNumActions * num_states;
  }
  std::size_t layer_base(int n, int h) const {
    return (static_cast<std::size_t>(n) * horizon + h) * layer_size();
  }
  std::size_t idx(int n, int h, int s, int a, int s2) const {
    return layer_base(n, h) +
           (static_cast<std::size_t>(s) * kNumActions + a) * num_states + s2;
  }
  double at(int n, int h, int s, int a, int s2) const {
    return z[idx(n, h, s, a, s2)];
  }
  double& at(int n, int h, int s, int a, int s2) { return z[idx(n, h, s, a, s2)]; }
};

struct OccupancyMu {
  int num_arms = 0;
  int horizon = 0;
  int num_states = 0;
  std::vector<double> mu; // [n][h][s][a]

  std::size_t idx(int n, int h, int s, int a) const {
    return ((static_cast<std::size_t>(n) * horizon + h) * num_states + s) *
               kNumActions + a;
  }
  double at(int n, int h, int s, int a) const { return mu[idx(n, h, s, a)]; }
  double& at(int n, int h, int s, int a) { return mu[idx(n, h, s, a)]; }
};

inline OccupancyMu mu_from_z(const OccupancyZ& z) {
  OccupancyMu m;
  m.num_arms = z.num_arms;
  m.horizon = z.horizon;
  m.num_states = z.num_states;
  m.mu.assign(static_cast<std::size_t>(z.num_arms) * z.horizon * z.num_states *
                  kNumActions, 0.0);
  const int S = z.num_states;
  for (int n = 0; n < z.num_arms; ++n)
    for (int h = 0; h < z.horizon; ++h)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          const double* row = z.z.data() + z.idx(n, h, s, a, 0);
          double sum = 0.0;
          for (int s2 = 0; s2 < S; ++s2) sum += row[s2];
          m.at(n, h, s, a) = sum;
        }
  return m;
}

struct FeasibleSetParams {
  const ConfidenceSet* confidence = nullptr;
  int budget = 1;
  std::vector<int> initial_states;
  double tol_normalization = 1e-8;
  double tol_flow = 1e-6;
  double tol_budget = 1e-6;
  double tol_ratio = 1e-6;
  double tol_boundary = 1e-8;
};

struct ResidualReport {
  double normalization = 0.0;
  double flow = 0.0;
  double budget = 0.0;
  double ratio = 0.0;
  double boundary = 0.0;

  double max_any() const {
    return std::max({normalization, flow, budget, ratio, boundary});
  }
  bool within(const FeasibleSetParams& p, double scale = 1.0) const {
    return normalization <= p.tol_normalization * scale &&
           flow <= p.tol_flow * scale && budget <= p.tol_budget * scale &&
           ratio <= p.tol_ratio * scale && boundary <= p.tol_boundary * scale;
  }
};

// Exact occupancy of the policy "activate each arm independently with
// probability B/N", rolled out under p_hat (one row per (n,s,a), typically
// the uniform cold-start estimate) from each arm's initial state. Feasible
// for the episode-1 constraint set by construction.
inline OccupancyZ init_occupancy(const Scenario& sc, const ConfidenceSet& cs) {
  const int N = sc.num_arms(), H = sc.horizon, S = sc.num_states();
  const double pact = std::min(1.0, static_cast<double>(sc.budget) / N);
  OccupancyZ z(N, H, S);
  std::vector<double> d(S), dnext(S);
  for (int n = 0; n < N; ++n) {
    std::fill(d.begin(), d.end(), 0.0);
    d[sc.arms[n].initial_state] = 1.0;
    for (int h = 0; h < H; ++h) {
      std::fill(dnext.begin(), dnext.end(), 0.0);
      for (int s = 0; s < S; ++s) {
        if (d[s] == 0.0) {
          for (int a = 0; a < kNumActions; ++a)
            for (int s2 = 0; s2 < S; ++s2) z.at(n, h, s, a, s2) = kZFloor;
          continue;
        }
        for (int a = 0; a < kNumActions; ++a) {
          const double mass = d[s] * (a == 1 ? pact : 1.0 - pact);
          const double* row = cs.row(n, s, a);
          for (int s2 = 0; s2 < S; ++s2) {
            const double v = mass * row[s2];
            z.at(n, h, s, a, s2) = std::max(v, kZFloor);
            dnext[s2] += v;
          }
        }
      }
      d.swap(dnext);
    }
  }
  return z;
}

// Entrywise exponential step z~ = z * exp(eta * r_hat(s,a)); requires
// eta * r_hat <= 1 so the later projection analysis applies.
inline OccupancyZ unconstrained_step(const OccupancyZ& z,
                                     const RewardEstimate& re, double eta) {
  if (eta < 0.0)
    throw Error(errc::step_size_too_large, "eta must be nonnegative");
  const int N = z.num_arms, H = z.horizon, S = z.num_states;
  OccupancyZ out = z;
  for (int n = 0; n < N; ++n)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < kNumActions; ++a) {
        const double er = eta * re.at(n, s, a);
        if (er > 1.0 + 1e-12)
          throw Error(errc::step_size_too_large,
                      "eta * r_hat exceeds 1; reduce the step size");
        const double f = std::exp(er);
        for (int h = 0; h < H; ++h) {
          double* row = out.z.data() + out.idx(n, h, s, a, 0);
          for (int s2 = 0; s2 < S; ++s2) row[s2] *= f;
        }
      }
  return out;
}

// unnormalized KL, sum z ln(z/ref) - z + ref, nonnegative, 0 iff equal
inline double kl_divergence(const OccupancyZ& z, const OccupancyZ& ref) {
  double d = 0.0;
  for (std::size_t i = 0; i < z.z.size(); ++i) {
    const double a = std::max(z.z[i], 0.0);
    const double b = std::max(ref.z[i], kZFloor);
    if (a > 0.0) d += a * std::log(a / b) - a + b;
    else d += b;
  }
  return d;
}

inline ResidualReport feasibility_residuals(const OccupancyZ& z,
                                            const FeasibleSetParams& p) {
  ResidualReport r;
  const int N = z.num_arms, H = z.horizon, S = z.num_states;
  const ConfidenceSet& cs = *p.confidence;
  std::vector<double> in_mass(S), out_mass(S);
  std::vector<double> act(H, 0.0);
  for (int n = 0; n < N; ++n) {
    std::fill(in_mass.begin(), in_mass.end(), 0.0);
    for (int h = 0; h < H; ++h) {
      std::fill(out_mass.begin(), out_mass.end(), 0.0);
      double layer_sum = 0.0;
      std::vector<double> next_in(S, 0.0);
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          const double* row = z.z.data() + z.idx(n, h, s, a, 0);
          double block = 0.0;
          for (int s2 = 0; s2 < S; ++s2) {
            block += row[s2];
            next_in[s2] += row[s2];
          }
          layer_sum += block;
          out_mass[s] += block;
          if (a == 1) act[h] += block;
          if (block >= 1e-9) {
            const double d = cs.width(n, s, a);
            const double* ph = cs.row(n, s, a);
            for (int s2 = 0; s2 < S; ++s2) {
              const double ratio = row[s2] / block;
              const double lo = std::max(0.0, ph[s2] - d);
              const double hi = std::min(1.0, ph[s2] + d);
              r.ratio = std::max({r.ratio, lo - ratio, ratio - hi});
            }
          }
        }
      r.normalization = std::max(r.normalization, std::abs(layer_sum - 1.0));
      if (h == 0) {
        for (int s = 0; s < S; ++s) {
          const double want = (s == p.initial_states[n]) ? 1.0 : 0.0;
          r.boundary = std::max(r.boundary, std::abs(out_mass[s] - want));
        }
      } else {
        for (int s = 0; s < S; ++s)
          r.flow = std::max(r.flow, std::abs(out_mass[s] - in_mass[s]));
      }
      in_mass.swap(next_in);
    }
  }
  for (int h = 0; h < H; ++h)
    r.budget = std::max(r.budget, act[h] - static_cast<double>(p.budget));
  r.budget = std::max(r.budget, 0.0);
  r.ratio = std::max(r.ratio, 0.0);
  return r;
}

} // namespace armab
