#pragma once

// KL projection onto the occupancy constraint set: given the tensor z~
// produced by the exponential reward step, find argmin_{z in Z} KL(z || z~).
// Layer normalization is folded into an exponential-family primal, and the
// first layer is restricted to the known initial state, so its boundary
// constraint holds by construction instead of through a multiplier. The
// remaining dual in the flow, budget, and ratio multipliers is smooth and is
// minimized by projected Barzilai-Borwein steps with a non-monotone
// backtracking line search.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "armab/occupancy.hpp"

namespace armab {

struct SolverCfg {
  double proj_tol = 1e-8;
  int proj_max_iters = 20000;
  bool warm_start = true;
};

// Multipliers for the constraint set; reusable across episodes as a warm
// start. beta is free (flow balance; the h = 0 slice is unused), lambda and
// the mu pair are >= 0 (budget cap, upper/lower transition-ratio bounds).
struct DualVars {
  int num_arms = 0;
  int horizon = 0;
  int num_states = 0;
  std::vector<double> beta;   // [n][h][s]
  std::vector<double> lambda; // [h]
  std::vector<double> mu_hi;  // [n][h][s][a][s']
  std::vector<double> mu_lo;  // [n][h][s][a][s']

  DualVars() = default;
  DualVars(int N, int H, int S)
      : num_arms(N), horizon(H), num_states(S),
        beta(static_cast<std::size_t>(N) * H * S, 0.0), lambda(H, 0.0),
        mu_hi(static_cast<std::size_t>(N) * H * S * kNumActions * S, 0.0),
        mu_lo(mu_hi.size(), 0.0) {}

  std::size_t bidx(int n, int h, int s) const {
    return (static_cast<std::size_t>(n) * horizon + h) * num_states + s;
  }
  bool shaped_for(int N, int H, int S) const {
    return num_arms == N && horizon == H && num_states == S;
  }
};

class SolverDiverged : public Error {
public:
  ResidualReport residuals;
  int iterations = 0;

  SolverDiverged(const ResidualReport& r, int iters, const std::string& what)
      : Error(errc::solver_diverged, what), residuals(r), iterations(iters) {}
};

struct ProjectionResult {
  OccupancyZ z;
  int iterations = 0;
  double objective = 0.0; // dual objective at exit
  double grad_norm = 0.0; // projected-gradient sup norm at exit
  ResidualReport residuals;
};

namespace detail {

// Buffers for one projection solve. The current point, its gradients, and
// the trial point are kept as flat tensors so the line search costs one
// partition-function pass per trial and step sizes come from
// Barzilai-Borwein curvature estimates over all multipliers at once.
struct ProjState {
  const OccupancyZ* zt = nullptr;
  const FeasibleSetParams* fp = nullptr;
  int N = 0, H = 0, S = 0;
  std::size_t layer = 0;

  std::vector<double> lo, hi; // [n][s][a][s'] clipped ratio bounds

  std::vector<double> beta, lambda, mu_hi, mu_lo;     // current point
  std::vector<double> g_beta, g_lambda, g_hi, g_lo;   // gradients there
  std::vector<double> t_beta, t_lambda, t_hi, t_lo;   // trial point

  OccupancyZ z_star;
  std::vector<double> dstar;    // [n][h][s][a]
  std::vector<double> out_mass; // [n][h][s]
  std::vector<double> in_mass;  // [n][h][s], inflow from layer h-1
  std::vector<double> act;      // [h]
  std::vector<double> scratch_e;
  double norm_resid = 0.0;

  std::size_t midx(int n, int h, int s) const {
    return (static_cast<std::size_t>(n) * H + h) * S + s;
  }
  std::size_t didx(int n, int h, int s, int a) const {
    return ((static_cast<std::size_t>(n) * H + h) * S + s) * kNumActions + a;
  }
  std::size_t ridx(int n, int s, int a) const {
    return ((static_cast<std::size_t>(n) * S + s) * kNumActions + a) * S;
  }
};

inline void proj_state_init(ProjState& w, const OccupancyZ& zt,
                            const FeasibleSetParams& fp) {
  w.zt = &zt;
  w.fp = &fp;
  w.N = zt.num_arms;
  w.H = zt.horizon;
  w.S = zt.num_states;
  w.layer = zt.layer_size();
  const std::size_t nhs = static_cast<std::size_t>(w.N) * w.H * w.S;
  const std::size_t big = nhs * kNumActions * w.S;
  const ConfidenceSet& cs = *fp.confidence;
  w.lo.resize(static_cast<std::size_t>(w.N) * w.S * kNumActions * w.S);
  w.hi.resize(w.lo.size());
  for (int n = 0; n < w.N; ++n)
    for (int s = 0; s < w.S; ++s)
      for (int a = 0; a < kNumActions; ++a) {
        const double* ph = cs.row(n, s, a);
        const double dw = cs.width(n, s, a);
        double* lo = w.lo.data() + w.ridx(n, s, a);
        double* hi = w.hi.data() + w.ridx(n, s, a);
        for (int s2 = 0; s2 < w.S; ++s2) {
          lo[s2] = std::max(0.0, ph[s2] - dw);
          hi[s2] = std::min(1.0, ph[s2] + dw);
        }
      }
  w.beta.assign(nhs, 0.0);
  w.lambda.assign(w.H, 0.0);
  w.mu_hi.assign(big, 0.0);
  w.mu_lo.assign(big, 0.0);
  w.g_beta.assign(nhs, 0.0);
  w.g_lambda.assign(w.H, 0.0);
  w.g_hi.assign(big, 0.0);
  w.g_lo.assign(big, 0.0);
  w.t_beta.assign(nhs, 0.0);
  w.t_lambda.assign(w.H, 0.0);
  w.t_hi.assign(big, 0.0);
  w.t_lo.assign(big, 0.0);
  w.z_star = OccupancyZ(w.N, w.H, w.S);
  w.dstar.assign(nhs * kNumActions, 0.0);
  w.out_mass.assign(nhs, 0.0);
  w.in_mass.assign(nhs, 0.0);
  w.act.assign(w.H, 0.0);
  w.scratch_e.assign(w.layer, 0.0);
}

// Primal iterate, marginals, and the dual objective for the multipliers
// passed in (either the current or the trial buffers). Each layer is
// normalized in closed form; layer 0 carries mass only on the initial
// state's blocks.
inline double proj_eval(ProjState& w, const double* B, const double* L,
                        const double* MH, const double* ML) {
  const int N = w.N, H = w.H, S = w.S;
  double F = 0.0;
  w.norm_resid = 0.0;
  std::fill(w.act.begin(), w.act.end(), 0.0);
  std::fill(w.in_mass.begin(), w.in_mass.end(), 0.0);
  std::fill(w.out_mass.begin(), w.out_mass.end(), 0.0);
  for (int n = 0; n < N; ++n) {
    for (int h = 0; h < H; ++h) {
      const std::size_t base = w.zt->layer_base(n, h);
      const double* zt = w.zt->z.data() + base;
      const double* mh = MH + base;
      const double* ml = ML + base;
      double* zs = w.z_star.z.data() + base;
      double* e = w.scratch_e.data();
      const int s_begin = (h == 0) ? w.fp->initial_states[n] : 0;
      const int s_end = (h == 0) ? s_begin + 1 : S;
      if (h == 0) {
        std::fill(zs, zs + w.layer, 0.0);
        double* dz = w.dstar.data() + w.didx(n, 0, 0, 0);
        std::fill(dz, dz + static_cast<std::size_t>(S) * kNumActions, 0.0);
      }
      const double* bnext = (h < H - 1) ? B + w.midx(n, h + 1, 0) : nullptr;
      double max_e = -std::numeric_limits<double>::infinity();
      for (int s = s_begin; s < s_end; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          const std::size_t off = (static_cast<std::size_t>(s) * kNumActions + a) * S;
          const double* lo = w.lo.data() + w.ridx(n, s, a);
          const double* hi = w.hi.data() + w.ridx(n, s, a);
          double acc = 0.0;
          for (int s2 = 0; s2 < S; ++s2)
            acc += mh[off + s2] * hi[s2] - ml[off + s2] * lo[s2];
          const double k =
              acc - ((h >= 1) ? B[w.midx(n, h, s)] : 0.0) - L[h] * a;
          for (int s2 = 0; s2 < S; ++s2) {
            double ev = k - mh[off + s2] + ml[off + s2];
            if (bnext) ev += bnext[s2];
            e[off + s2] = ev;
            if (ev > max_e) max_e = ev;
          }
        }
      double part = 0.0;
      for (int s = s_begin; s < s_end; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          const std::size_t off = (static_cast<std::size_t>(s) * kNumActions + a) * S;
          for (int s2 = 0; s2 < S; ++s2) {
            const double v = zt[off + s2] * std::exp(e[off + s2] - max_e);
            zs[off + s2] = v;
            part += v;
          }
        }
      F += max_e + std::log(part);
      const double inv = 1.0 / part;
      double layer_sum = 0.0;
      double* inm = (h < H - 1) ? w.in_mass.data() + w.midx(n, h + 1, 0) : nullptr;
      for (int s = s_begin; s < s_end; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          const std::size_t off = (static_cast<std::size_t>(s) * kNumActions + a) * S;
          double block = 0.0;
          for (int s2 = 0; s2 < S; ++s2) {
            const double v = zs[off + s2] * inv;
            zs[off + s2] = v;
            block += v;
            if (inm) inm[s2] += v;
          }
          w.dstar[w.didx(n, h, s, a)] = block;
          w.out_mass[w.midx(n, h, s)] += block;
          layer_sum += block;
          if (a == 1) w.act[h] += block;
        }
      w.norm_resid = std::max(w.norm_resid, std::abs(layer_sum - 1.0));
    }
  }
  for (int h = 0; h < H; ++h)
    F += static_cast<double>(w.fp->budget) * L[h];
  return F;
}

// Gradients at the point whose primal iterate proj_eval just stored,
// overwriting the gradient buffers. When prev_* is set, accumulates the
// Barzilai-Borwein products <s,s> and <s,y> against the previous point and
// its gradients before they are overwritten. Also fills the projected
// gradient sup norm and the feasibility residuals of the stored iterate.
struct BBAccum {
  const double* beta = nullptr;
  const double* lambda = nullptr;
  const double* mu_hi = nullptr;
  const double* mu_lo = nullptr;
  double ss = 0.0;
  double sy = 0.0;
};

inline void proj_grads(ProjState& w, const double* B, const double* L,
                       const double* MH, const double* ML, BBAccum* bb,
                       double* pg_norm, ResidualReport* rep) {
  const int N = w.N, H = w.H, S = w.S;
  ResidualReport r;
  r.normalization = w.norm_resid;
  double pg = 0.0;
  for (int n = 0; n < N; ++n) {
    r.boundary = std::max(
        r.boundary,
        std::abs(w.out_mass[w.midx(n, 0, w.fp->initial_states[n])] - 1.0));
    for (int h = 1; h < H; ++h)
      for (int s = 0; s < S; ++s) {
        const std::size_t i = w.midx(n, h, s);
        const double g = w.in_mass[i] - w.out_mass[i];
        r.flow = std::max(r.flow, std::abs(g));
        pg = std::max(pg, std::abs(g));
        if (bb) {
          const double sv = B[i] - bb->beta[i];
          bb->ss += sv * sv;
          bb->sy += sv * (g - w.g_beta[i]);
        }
        w.g_beta[i] = g;
      }
  }
  for (int h = 0; h < H; ++h) {
    const double g = static_cast<double>(w.fp->budget) - w.act[h];
    r.budget = std::max(r.budget, -g);
    pg = std::max(pg, (L[h] > 0.0) ? std::abs(g) : std::max(-g, 0.0));
    if (bb) {
      const double sv = L[h] - bb->lambda[h];
      bb->ss += sv * sv;
      bb->sy += sv * (g - w.g_lambda[h]);
    }
    w.g_lambda[h] = g;
  }
  r.budget = std::max(r.budget, 0.0);
  for (int n = 0; n < N; ++n)
    for (int h = 0; h < H; ++h) {
      const std::size_t base = w.z_star.layer_base(n, h);
      const double* zs = w.z_star.z.data() + base;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < kNumActions; ++a) {
          const std::size_t off = (static_cast<std::size_t>(s) * kNumActions + a) * S;
          const double dv = w.dstar[w.didx(n, h, s, a)];
          const double* lo = w.lo.data() + w.ridx(n, s, a);
          const double* hi = w.hi.data() + w.ridx(n, s, a);
          const bool live = dv >= 1e-9;
          for (int s2 = 0; s2 < S; ++s2) {
            const std::size_t i = base + off + s2;
            const double zv = zs[off + s2];
            const double ghi = hi[s2] * dv - zv;
            const double glo = zv - lo[s2] * dv;
            pg = std::max(pg, (MH[i] > 0.0) ? std::abs(ghi)
                                            : std::max(-ghi, 0.0));
            pg = std::max(pg, (ML[i] > 0.0) ? std::abs(glo)
                                            : std::max(-glo, 0.0));
            if (live) {
              const double ratio = zv / dv;
              r.ratio = std::max({r.ratio, lo[s2] - ratio, ratio - hi[s2]});
            }
            if (bb) {
              const double sh = MH[i] - bb->mu_hi[i];
              const double sl = ML[i] - bb->mu_lo[i];
              bb->ss += sh * sh + sl * sl;
              bb->sy += sh * (ghi - w.g_hi[i]) + sl * (glo - w.g_lo[i]);
            }
            w.g_hi[i] = ghi;
            w.g_lo[i] = glo;
          }
        }
    }
  r.ratio = std::max(r.ratio, 0.0);
  *pg_norm = pg;
  *rep = r;
}

// Trial point at step alpha from the current point along the stored
// gradients, projected onto the sign constraints. Returns the
// directional-decrease product <g, theta - trial>, which is nonnegative.
inline double proj_trial(ProjState& w, double alpha) {
  double dot = 0.0;
  for (std::size_t i = 0; i < w.beta.size(); ++i) {
    const double g = w.g_beta[i];
    w.t_beta[i] = w.beta[i] - alpha * g;
    dot += alpha * g * g;
  }
  for (std::size_t h = 0; h < w.lambda.size(); ++h) {
    const double g = w.g_lambda[h];
    const double t = std::max(0.0, w.lambda[h] - alpha * g);
    w.t_lambda[h] = t;
    dot += g * (w.lambda[h] - t);
  }
  for (std::size_t i = 0; i < w.mu_hi.size(); ++i) {
    const double gh = w.g_hi[i];
    const double th = std::max(0.0, w.mu_hi[i] - alpha * gh);
    w.t_hi[i] = th;
    dot += gh * (w.mu_hi[i] - th);
    const double gl = w.g_lo[i];
    const double tl = std::max(0.0, w.mu_lo[i] - alpha * gl);
    w.t_lo[i] = tl;
    dot += gl * (w.mu_lo[i] - tl);
  }
  return dot;
}

} // namespace detail

// cfg.warm_start matters to callers that hold duals across episodes; a null
// warm pointer always starts from zero multipliers.
inline ProjectionResult project_kl(const OccupancyZ& z_tilde,
                                   const FeasibleSetParams& fp,
                                   const SolverCfg& cfg = {},
                                   DualVars* warm = nullptr) {
  const int N = z_tilde.num_arms, H = z_tilde.horizon, S = z_tilde.num_states;
  if (fp.confidence == nullptr ||
      static_cast<int>(fp.initial_states.size()) != N ||
      fp.confidence->num_arms != N || fp.confidence->num_states != S)
    throw Error(errc::dimension_mismatch,
                "projection parameters do not match the occupancy tensor");
  if (fp.budget < 1 || fp.budget > N)
    throw Error(errc::budget_exceeds_arms, "budget must lie in [1, num_arms]");
  const bool use_warm = warm != nullptr && cfg.warm_start;
  if (use_warm && !warm->shaped_for(N, H, S))
    throw Error(errc::dimension_mismatch, "warm-start duals have wrong shape");

  detail::ProjState w;
  detail::proj_state_init(w, z_tilde, fp);
  if (use_warm) {
    w.beta = warm->beta;
    w.lambda = warm->lambda;
    w.mu_hi = warm->mu_hi;
    w.mu_lo = warm->mu_lo;
  }
  const auto flush_warm = [&] {
    if (!use_warm) return;
    warm->beta = w.beta;
    warm->lambda = w.lambda;
    warm->mu_hi = w.mu_hi;
    warm->mu_lo = w.mu_lo;
  };

  constexpr double kArmijo = 1e-4;
  constexpr double kAlphaMin = 1e-18;
  constexpr int kHistory = 8;

  double f_cur = detail::proj_eval(w, w.beta.data(), w.lambda.data(),
                                   w.mu_hi.data(), w.mu_lo.data());
  double pg = 0.0;
  ResidualReport rep;
  detail::proj_grads(w, w.beta.data(), w.lambda.data(), w.mu_hi.data(),
                     w.mu_lo.data(), nullptr, &pg, &rep);

  std::array<double, kHistory> hist;
  hist.fill(f_cur);
  double alpha = 1.0;
  int plateau = 0;
  int iter = 0;
  int restarts = 0;
  std::optional<ProjectionResult> finished;
  // a stalled step-size state often recovers from the same duals once the
  // history and step are reset, so spend a few restarts before giving up
  const auto restart_steps = [&] {
    if (restarts >= 3) return false;
    ++restarts;
    hist.fill(f_cur);
    alpha = 1.0;
    plateau = 0;
    return true;
  };

  const auto try_finish = [&](int iters) -> bool {
    ProjectionResult res;
    res.z = w.z_star;
    for (double& v : res.z.z) v = std::max(v, kZFloor);
    const ResidualReport canon = feasibility_residuals(res.z, fp);
    if (!canon.within(fp)) return false;
    res.iterations = iters;
    res.objective = f_cur;
    res.grad_norm = pg;
    res.residuals = canon;
    flush_warm();
    finished = std::move(res);
    return true;
  };

  for (iter = 1; iter <= cfg.proj_max_iters; ++iter) {
    if (rep.within(fp) && (pg <= cfg.proj_tol || plateau >= 5)) {
      if (try_finish(iter - 1)) return std::move(*finished);
      plateau = 0;
    }
    if ((pg <= cfg.proj_tol || plateau >= 50) && !rep.within(fp) &&
        !restart_steps()) {
      flush_warm();
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "projection stalled after %d iterations; residuals: "
                    "norm %.3g flow %.3g budget %.3g ratio %.3g boundary %.3g",
                    iter, rep.normalization, rep.flow, rep.budget, rep.ratio,
                    rep.boundary);
      throw SolverDiverged(rep, iter, buf);
    }

    const double f_ref = *std::max_element(hist.begin(), hist.end());
    bool accepted = false;
    double a = alpha;
    double f_new = 0.0;
    while (a >= kAlphaMin) {
      const double dot = detail::proj_trial(w, a);
      f_new = detail::proj_eval(w, w.t_beta.data(), w.t_lambda.data(),
                                w.t_hi.data(), w.t_lo.data());
      if (std::isfinite(f_new) && f_new <= f_ref - kArmijo * dot) {
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) {
      f_cur = detail::proj_eval(w, w.beta.data(), w.lambda.data(),
                                w.mu_hi.data(), w.mu_lo.data());
      detail::proj_grads(w, w.beta.data(), w.lambda.data(), w.mu_hi.data(),
                         w.mu_lo.data(), nullptr, &pg, &rep);
      if (rep.within(fp) && try_finish(iter)) return std::move(*finished);
      if (restart_steps()) continue;
      flush_warm();
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "projection line search stalled after %d iterations; "
                    "residuals: norm %.3g flow %.3g budget %.3g ratio %.3g "
                    "boundary %.3g",
                    iter, rep.normalization, rep.flow, rep.budget, rep.ratio,
                    rep.boundary);
      throw SolverDiverged(rep, iter, buf);
    }

    detail::BBAccum bb;
    bb.beta = w.beta.data();
    bb.lambda = w.lambda.data();
    bb.mu_hi = w.mu_hi.data();
    bb.mu_lo = w.mu_lo.data();
    detail::proj_grads(w, w.t_beta.data(), w.t_lambda.data(), w.t_hi.data(),
                       w.t_lo.data(), &bb, &pg, &rep);
    w.beta.swap(w.t_beta);
    w.lambda.swap(w.t_lambda);
    w.mu_hi.swap(w.t_hi);
    w.mu_lo.swap(w.t_lo);

    if (std::abs(f_new - f_cur) <= 1e-12 * std::max(1.0, std::abs(f_new)))
      ++plateau;
    else
      plateau = 0;
    f_cur = f_new;
    hist[iter % kHistory] = f_cur;
    alpha = (bb.sy > 0.0)
                ? std::clamp(bb.ss / bb.sy, 1e-12, 1e10)
                : std::min(a * 4.0, 1e10);
  }

  if (rep.within(fp) && try_finish(cfg.proj_max_iters))
    return std::move(*finished);
  flush_warm();
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "projection did not reach feasibility in %d iterations; "
                "residuals: norm %.3g flow %.3g budget %.3g ratio %.3g "
                "boundary %.3g",
                cfg.proj_max_iters, rep.normalization, rep.flow, rep.budget,
                rep.ratio, rep.boundary);
  throw SolverDiverged(rep, cfg.proj_max_iters, buf);
}

} // namespace armab
