#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hfsg/types.hpp"

namespace hfsg {

struct EdgeOptParams {
  double lambda_h = 1.0;  // entropy weight
  double lambda_d = 1.0;  // temporal smoothing weight
  double eps_clamp = 1e-6;
  int solver_iters = 200;
  double solver_tol = 1e-8;
  int min_obs = 2;

  void validate() const {
    if (!(lambda_h >= 0 && lambda_d >= 0)) throw ValidationError("lambda_h and lambda_d must be >= 0");
    if (!(eps_clamp > 0 && eps_clamp < 0.5)) throw ValidationError("eps_clamp must lie in (0, 0.5)");
    if (!(solver_tol > 0)) throw ValidationError("solver_tol must be > 0");
    if (solver_iters < 1) throw ValidationError("solver_iters must be >= 1");
    if (min_obs < 0) throw ValidationError("min_obs must be >= 0");
  }
};

inline double clamped_logit(double s, double eps) {
  const double c = std::clamp(s, eps, 1.0 - eps);
  return std::log(c / (1.0 - c));
}

// Adds one frame of evidence for `object` to the belief. A new candidate gets
// z = 1/(k+1) and existing mass (and z_prev) is rescaled by k/(k+1).
inline void accumulate(EdgeBelief& b, NodeId object, double s_2d, FrameId frame, const EdgeOptParams& params = {}) {
  auto idx = b.index_of(object);
  if (!idx) {
    const double k = static_cast<double>(b.candidates.size());
    for (double& z : b.z) z *= k / (k + 1.0);
    for (double& z : b.z_prev) z *= k / (k + 1.0);
    b.candidates.push_back(object);
    b.logodds.push_back(0.0);
    b.z.push_back(1.0 / (k + 1.0));
    b.z_prev.push_back(1.0 / (k + 1.0));
    b.obs_frames.emplace_back();
    idx = b.candidates.size() - 1;
  }
  if (!b.obs_frames[*idx].insert(frame).second) {
    throw DuplicateEvidenceError("duplicate evidence for fine node " + std::to_string(b.fine_id) + " <- object " +
                                 std::to_string(object) + " in frame " + std::to_string(frame));
  }
  b.logodds[*idx] += clamped_logit(s_2d, params.eps_clamp);
}

namespace edgeopt_detail {

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Euclidean projection onto the probability simplex (sort-based).
inline std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
  return out;
}

inline void normalize_from_log(std::span<const double> logz, std::vector<double>& z) {
  const double mx = *std::max_element(logz.begin(), logz.end());
  double s = 0.0;
  for (std::size_t i = 0; i < logz.size(); ++i) {
    z[i] = std::exp(logz[i] - mx);
    s += z[i];
  }
  for (double& x : z) x /= s;
}

}  // namespace edgeopt_detail

// Value of  z·L + λ_H·H(z) − λ_D·½‖z − z_prev‖².
inline double edge_objective(std::span<const double> L, std::span<const double> z, std::span<const double> z_prev,
                             double lambda_h, double lambda_d) {
  double lin = 0.0, ent = 0.0, smooth = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    lin += z[i] * L[i];
    ent -= edgeopt_detail::xlogx(z[i]);
    smooth += (z[i] - z_prev[i]) * (z[i] - z_prev[i]);
  }
  return lin + lambda_h * ent - lambda_d * 0.5 * smooth;
}

struct SolveReport {
  std::vector<double> z;
  int iterations = 0;
  double residual = 0.0;  // z-weighted spread of the gradient (0 at a stationary point)
};

// Maximizes the edge objective over the simplex.
//
// With λ_H > 0 this runs entropic mirror descent (multiplicative weights) in
// log space with step 1/(λ_H+λ_D). The objective is (λ_H+λ_D)-smooth and
// λ_H-strongly concave relative to the entropy, so the iteration contracts
// linearly at rate λ_D/(λ_H+λ_D). With λ_H = 0 the problem is a Euclidean
// projection (λ_D > 0) or a linear program (λ_D = 0), both solved directly.
inline SolveReport solve_edge_objective(std::span<const double> L, std::span<const double> z_prev,
                                        const EdgeOptParams& params) {
  const std::size_t n = L.size();
  SolveReport rep;
  if (n == 0) return rep;
  for (double l : L) {
    if (!std::isfinite(l)) throw ValidationError("non-finite log-odds in edge objective");
  }
  if (n == 1) {
    rep.z = {1.0};
    return rep;
  }
  const double lh = params.lambda_h;
  const double ld = params.lambda_d;

  if (lh == 0.0) {
    if (ld == 0.0) {
      const auto best = static_cast<std::size_t>(std::max_element(L.begin(), L.end()) - L.begin());
      rep.z.assign(n, 0.0);
      rep.z[best] = 1.0;
      return rep;
    }
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = z_prev[i] + L[i] / ld;
    rep.z = edgeopt_detail::project_to_simplex(target);
    return rep;
  }

  const double eta = 1.0 / (lh + ld);
  const double keep = ld * eta;
  std::vector<double> z(n), logz(n), g(n);
  const bool warm = std::all_of(z_prev.begin(), z_prev.end(), [](double x) { return x > 0.0; });
  for (std::size_t i = 0; i < n; ++i) z[i] = warm ? z_prev[i] : 1.0 / static_cast<double>(n);
  double s = std::accumulate(z.begin(), z.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] /= s;
    logz[i] = std::log(z[i]);
  }

  auto residual = [&]() {
    double gbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = L[i] - lh * (logz[i] + 1.0) - ld * (z[i] - z_prev[i]);
      gbar += z[i] * g[i];
    }
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += z[i] * std::abs(g[i] - gbar);
    return r;
  };

  rep.residual = residual();
  while (rep.iterations < params.solver_iters && rep.residual > params.solver_tol) {
    for (std::size_t i = 0; i < n; ++i) logz[i] = keep * logz[i] + eta * (L[i] - ld * (z[i] - z_prev[i]));
    edgeopt_detail::normalize_from_log(logz, z);
    for (std::size_t i = 0; i < n; ++i) logz[i] = std::log(std::max(z[i], std::numeric_limits<double>::min()));
    ++rep.iterations;
    rep.residual = residual();
  }
  rep.z = std::move(z);
  return rep;
}

// One temporal step: solves for z given the accumulated log-odds and the
// current z as the smoothing anchor, then shifts z into z_prev.
inline const std::vector<double>& optimize_step(EdgeBelief& b, const EdgeOptParams& params = {}) {
  if (b.candidates.empty()) throw ValidationError("optimize_step needs at least one candidate");
  auto rep = solve_edge_objective(b.logodds, b.z, params);
  b.z_prev = b.z;
  b.z = std::move(rep.z);
  return b.z;
}

// Λ(o) = L(o) + log z(o); −∞ where z(o) = 0.
inline std::vector<double> decision_scores(const EdgeBelief& b) {
  std::vector<double> out(b.candidates.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = b.z[i] > 0.0 ? b.logodds[i] + std::log(b.z[i]) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

struct EdgeDecision {
  NodeId object = 0;
  double score = 0.0;
};

// Top-1 by decision score once the belief has min_obs observations; ties go to
// the earliest candidate.
inline std::optional<EdgeDecision> select_edge(const EdgeBelief& b, const EdgeOptParams& params = {}) {
  if (b.candidates.empty() || b.total_observations() < static_cast<std::size_t>(params.min_obs)) return std::nullopt;
  const auto lam = decision_scores(b);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    if (std::isinf(lam[i]) && lam[i] < 0) continue;
    if (!best || lam[i] > lam[*best]) best = i;
  }
  if (!best) return std::nullopt;
  return EdgeDecision{b.candidates[*best], lam[*best]};
}

// Ablation: Top-1 by raw 2D observation count, no optimization.
inline std::optional<EdgeDecision> select_by_count(const EdgeBelief& b, const EdgeOptParams& params = {}) {
  if (b.candidates.empty() || b.total_observations() < static_cast<std::size_t>(params.min_obs)) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < b.candidates.size(); ++i) {
    if (b.obs_frames[i].size() > b.obs_frames[best].size()) best = i;
  }
  return EdgeDecision{b.candidates[best], static_cast<double>(b.obs_frames[best].size())};
}

}  // namespace hfsg
