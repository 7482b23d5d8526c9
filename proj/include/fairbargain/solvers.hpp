// Copyright 2026 The fairbargain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRBARGAIN_SOLVERS_HPP
#define FAIRBARGAIN_SOLVERS_HPP

#include "fairbargain/core.hpp"
#include "fairbargain/linalg.hpp"
#include "fairbargain/risk_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairbargain {

enum class StepRule { polyak, diminishing };

struct SolverConfig {
  double tol = 1e-6;
  std::size_t max_iters = 100000;
  std::size_t grid_bisection_iters = 60;
  std::uint64_t seed = 0;  // nonzero: start from a seeded random point in the ball
  StepRule step_rule = StepRule::polyak;
  std::optional<Vector> initial;

  void validate() const {
    if (!(tol > 0.0)) throw PreconditionError("SolverConfig: tol must be positive");
    if (max_iters < 1) throw PreconditionError("SolverConfig: max_iters must be >= 1");
    if (grid_bisection_iters < 1) throw PreconditionError("SolverConfig: grid_bisection_iters must be >= 1");
  }
};

enum class Criterion { ri, leximin, gdro, mmv, mmr, nash };

inline std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::ri: return "ri";
    case Criterion::leximin: return "leximin";
    case Criterion::gdro: return "gdro";
    case Criterion::mmv: return "mmv";
    case Criterion::mmr: return "mmr";
    case Criterion::nash: return "nash";
  }
  return "?";
}

inline Criterion parse_criterion(std::string_view name) {
  for (Criterion c : {Criterion::ri, Criterion::leximin, Criterion::gdro, Criterion::mmv, Criterion::mmr,
                      Criterion::nash})
    if (criterion_name(c) == name) return c;
  throw PreconditionError("unknown method '" + std::string(name) + "'");
}

/// Uniform random point in {‖θ‖ ≤ radius}.
inline Vector random_point_in_ball(Eigen::Index d, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
  const double n = v.norm();
  if (n == 0.0) return Vector::Zero(d);
  return v * (radius * std::pow(unif(rng), 1.0 / static_cast<double>(d)) / n);
}

// ---------------------------------------------------------------------------
// Weighted-sum minimization over the ball
// ---------------------------------------------------------------------------

namespace detail {

template <GroupRiskFunction F>
double weighted_risk(const F& f, std::span<const double> w, const Vector& theta) {
  double s = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g)
    if (w[g] != 0.0) s += w[g] * f.risk(g, theta);
  return s;
}

template <GroupRiskFunction F>
Vector weighted_gradient(const F& f, std::span<const double> w, const Vector& theta) {
  Vector s = Vector::Zero(f.dimension());
  for (std::size_t g = 0; g < w.size(); ++g)
    if (w[g] != 0.0) s += w[g] * f.gradient(g, theta);
  return s;
}

}  // namespace detail

/// Lower bound on min_{‖θ‖≤r} Σ w_g R_g(θ) from the tangent plane at `theta`.
/// Valid for any `theta` by convexity; tight at the minimizer.
template <GroupRiskFunction F>
double weighted_lower_bound(const F& f, std::span<const double> w, double radius, const Vector& theta) {
  const Vector grad = detail::weighted_gradient(f, w, theta);
  return detail::weighted_risk(f, w, theta) - grad.dot(theta) - radius * grad.norm();
}

/// argmin_{‖θ‖≤r} Σ w_g R_g(θ) for nonnegative weights. Exact when the risk family
/// provides it, otherwise accelerated projected gradient with backtracking and
/// restart, stopped on the tangent-plane gap.
template <GroupRiskFunction F>
Vector minimize_weighted_risk(const F& f, std::span<const double> w, double radius, const Vector& warm,
                              double tol = 1e-12, std::size_t max_iters = 20000) {
  if constexpr (ExactWeightedMinimizer<F>) {
    (void)warm;
    (void)tol;
    (void)max_iters;
    return f.minimize_weighted(w, radius);
  } else if constexpr (HessianRiskFunction<F>) {
    // Newton steps whose model is minimized exactly over the ball, with backtracking
    Vector x = project_to_ball(warm, radius);
    double fx = detail::weighted_risk(f, w, x);
    for (std::size_t it = 0; it < std::min<std::size_t>(max_iters, 200); ++it) {
      const Vector gx = detail::weighted_gradient(f, w, x);
      const double gap = gx.dot(x) + radius * gx.norm();
      if (gap <= tol * std::max(1.0, std::abs(fx))) break;
      Matrix h = Matrix::Zero(x.size(), x.size());
      for (std::size_t g = 0; g < w.size(); ++g)
        if (w[g] != 0.0) h += w[g] * f.hessian(g, x);
      h = 0.5 * (h + h.transpose());
      const auto model = minimize_quadratic_on_ball(0.5 * h, 0.5 * (h * x - gx), radius);
      const Vector dir = model.theta - x;
      const double slope = gx.dot(dir);
      if (!(slope < 0.0)) break;
      double step = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 50; ++bt) {
        const Vector cand = x + step * dir;
        const double fc = detail::weighted_risk(f, w, cand);
        if (fc <= fx + 1e-4 * step * slope) {
          moved = fc < fx || step == 1.0;
          x = cand;
          fx = fc;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    return x;
  } else {
    Vector x = project_to_ball(warm, radius);
    Vector x_prev = x;
    double fx = detail::weighted_risk(f, w, x);
    double t = 1.0;
    double lip = 1.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
      const Vector gx = detail::weighted_gradient(f, w, x);
      const double gap = gx.dot(x) + radius * gx.norm();
      if (gap <= tol * std::max(1.0, std::abs(fx))) break;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const Vector y = x + ((t - 1.0) / t_next) * (x - x_prev);
      const double fy = detail::weighted_risk(f, w, y);
      const Vector gy = detail::weighted_gradient(f, w, y);
      Vector cand;
      double fc = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        cand = project_to_ball(y - gy / lip, radius);
        fc = detail::weighted_risk(f, w, cand);
        const Vector diff = cand - y;
        if (fc <= fy + gy.dot(diff) + 0.5 * lip * diff.squaredNorm() + 1e-15 * std::abs(fy)) break;
        lip *= 2.0;
      }
      x_prev = x;
      if (fc > fx) {  // restart momentum
        t = 1.0;
        x_prev = x;
        cand = project_to_ball(x - gx / lip, radius);
        fc = detail::weighted_risk(f, w, cand);
        if (fc > fx) {
          lip *= 2.0;
          continue;
        }
      } else {
        t = t_next;
      }
      x = cand;
      fx = fc;
      lip = std::max(lip * 0.9, 1e-12);
    }
    return x;
  }
}

// ---------------------------------------------------------------------------
// Level-set bisection engine
// ---------------------------------------------------------------------------

/// max_θ min_{free g} u_g(θ), u_g(θ) = scale_g·(offset_g − R_g(θ)), subject to
/// u_g(θ) ≥ floor_g for pinned groups, over the ball.
struct MaximinProblem {
  std::vector<double> scale;
  std::vector<double> offset;
  std::vector<bool> pinned;
  std::vector<double> floor;
  double pin_weight = 1.0;

  std::size_t size() const noexcept { return scale.size(); }
  bool any_pinned() const { return std::find(pinned.begin(), pinned.end(), true) != pinned.end(); }
};

struct MaximinResult {
  Vector theta;
  double lower = -std::numeric_limits<double>::infinity();  // achieved by theta
  double upper = std::numeric_limits<double>::infinity();   // certified
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline MaximinProblem make_problem(Criterion c, const BargainingFrame& frame) {
  const std::size_t m = frame.size();
  MaximinProblem p;
  p.scale.assign(m, 1.0);
  p.offset.assign(m, 0.0);
  p.pinned.assign(m, false);
  p.floor.assign(m, 0.0);
  for (std::size_t g = 0; g < m; ++g) {
    switch (c) {
      case Criterion::ri:
      case Criterion::leximin:
      case Criterion::nash:
        p.scale[g] = 1.0 / frame.gap(g);
        p.offset[g] = frame.baseline(g);
        break;
      case Criterion::gdro:
        break;
      case Criterion::mmv:
        p.offset[g] = frame.baseline(g);
        break;
      case Criterion::mmr:
        p.offset[g] = frame.ideal(g);
        break;
    }
  }
  return p;
}

template <GroupRiskFunction F>
std::vector<double> utilities(const F& f, const MaximinProblem& p, const Vector& theta) {
  std::vector<double> u(p.size());
  for (std::size_t g = 0; g < u.size(); ++g) u[g] = p.scale[g] * (p.offset[g] - f.risk(g, theta));
  return u;
}

inline bool pins_hold(const MaximinProblem& p, const std::vector<double>& u, double slack = 0.0) {
  for (std::size_t g = 0; g < u.size(); ++g)
    if (p.pinned[g] && u[g] < p.floor[g] - slack) return false;
  return true;
}

inline double min_free(const MaximinProblem& p, const std::vector<double>& u) {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < u.size(); ++g)
    if (!p.pinned[g]) v = std::min(v, u[g]);
  return v;
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> v) {
  if (v.empty()) return v;
  std::vector<double> s = v;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    const double cand = (cum - 1.0) / static_cast<double>(i + 1);
    if (i + 1 == s.size() || s[i + 1] <= cand) {
      theta = cand;
      break;
    }
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
  return v;
}

/// Projects multipliers: simplex on free groups, nonnegative orthant on pinned.
inline std::vector<double> project_multipliers(const MaximinProblem& p, const std::vector<double>& lam) {
  std::vector<double> free_part;
  for (std::size_t g = 0; g < lam.size(); ++g)
    if (!p.pinned[g]) free_part.push_back(lam[g]);
  free_part = project_simplex(std::move(free_part));
  std::vector<double> out(lam.size());
  std::size_t k = 0;
  for (std::size_t g = 0; g < lam.size(); ++g) out[g] = p.pinned[g] ? std::max(lam[g], 0.0) : free_part[k++];
  return out;
}

/// Lagrangian upper bound on the optimal value for multipliers `lam`.
template <GroupRiskFunction F>
double dual_bound(const F& f, const MaximinProblem& p, double radius, const std::vector<double>& lam,
                  const Vector& warm, std::vector<double>* gradient = nullptr, Vector* maximizer = nullptr) {
  std::vector<double> w(p.size());
  double constant = 0.0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    w[g] = lam[g] * p.scale[g];
    constant += lam[g] * (p.scale[g] * p.offset[g] - (p.pinned[g] ? p.floor[g] : 0.0));
  }
  const Vector theta = minimize_weighted_risk(f, std::span<const double>(w), radius, warm);
  if (maximizer) *maximizer = theta;
  if (gradient) {
    const auto u = utilities(f, p, theta);
    gradient->resize(p.size());
    for (std::size_t g = 0; g < p.size(); ++g) (*gradient)[g] = u[g] - (p.pinned[g] ? p.floor[g] : 0.0);
  }
  return constant - weighted_lower_bound(f, std::span<const double>(w), radius, theta);
}

struct DualRefinement {
  double bound = std::numeric_limits<double>::infinity();
  Vector candidate;  // best pin-respecting Lagrangian maximizer seen
  Vector probe;      // Lagrangian maximizer at the final multipliers
  double candidate_value = -std::numeric_limits<double>::infinity();
};

/// Estimates KKT multipliers at `theta` from the near-active groups, then refines
/// them by projected descent on the dual function.
template <GroupRiskFunction F>
DualRefinement refined_dual_bound_in_band(const F& f, const MaximinProblem& p, double radius, const Vector& theta,
                                          double band) {
  const std::size_t m = p.size();
  const auto u = utilities(f, p, theta);
  const double low = min_free(p, u);
  std::vector<std::size_t> active;
  for (std::size_t g = 0; g < m; ++g) {
    const bool near = p.pinned[g] ? u[g] <= p.floor[g] + band : u[g] <= low + band;
    if (near) active.push_back(g);
  }
  const bool boundary = theta.norm() >= radius * (1.0 - 1e-9);
  const auto k = static_cast<Eigen::Index>(active.size());
  Matrix cols(theta.size(), k + 1);
  for (Eigen::Index j = 0; j < k; ++j) {
    const std::size_t g = active[static_cast<std::size_t>(j)];
    cols.col(j) = -p.scale[g] * f.gradient(g, theta);
  }
  cols.col(k) = boundary ? Vector(-theta) : Vector(Vector::Zero(theta.size()));

  // min ‖cols·z‖² over z = (λ_active, ν) with the multiplier constraints
  const Matrix gram = cols.transpose() * cols;
  const double lip = std::max(2.0 * gram.norm(), 1e-12);
  std::vector<double> lam(m, 0.0);
  std::size_t free_active = 0;
  for (auto g : active) free_active += p.pinned[g] ? 0 : 1;
  for (auto g : active)
    if (!p.pinned[g]) lam[g] = 1.0 / static_cast<double>(free_active);
  double nu = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector z(k + 1);
    for (Eigen::Index j = 0; j < k; ++j) z(j) = lam[active[static_cast<std::size_t>(j)]];
    z(k) = nu;
    const Vector grad = 2.0 * gram * z;
    std::vector<double> next(m, 0.0);
    for (Eigen::Index j = 0; j < k; ++j) {
      const std::size_t g = active[static_cast<std::size_t>(j)];
      next[g] = lam[g] - grad(j) / lip;
    }
    // groups outside the active set keep zero weight
    std::vector<double> sub;
    for (auto g : active)
      if (!p.pinned[g]) sub.push_back(next[g]);
    sub = project_simplex(std::move(sub));
    std::size_t s = 0;
    for (auto g : active) lam[g] = p.pinned[g] ? std::max(next[g], 0.0) : sub[s++];
    nu = boundary ? std::max(nu - grad(k) / lip, 0.0) : 0.0;
  }

  DualRefinement out;
  auto consider = [&](const Vector& x) {
    const auto ux = utilities(f, p, x);
    if (!pins_hold(p, ux)) return;
    const double v = min_free(p, ux);
    if (v > out.candidate_value) {
      out.candidate_value = v;
      out.candidate = x;
    }
  };
  // projected gradient on the dual with Barzilai-Borwein steps
  std::vector<double> dgrad;
  Vector x;
  double best = dual_bound(f, p, radius, lam, theta, &dgrad, &x);
  consider(x);
  out.probe = x;
  double step = 1.0;
  for (int it = 0, misses = 0; it < 300 && misses < 12; ++it) {
    std::vector<double> trial(m);
    for (std::size_t g = 0; g < m; ++g) trial[g] = lam[g] - step * dgrad[g];
    trial = project_multipliers(p, trial);
    std::vector<double> tgrad;
    const double v = dual_bound(f, p, radius, trial, theta, &tgrad, &x);
    consider(x);
    if (v < best) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t g = 0; g < m; ++g) {
        ss += (trial[g] - lam[g]) * (trial[g] - lam[g]);
        sy += (trial[g] - lam[g]) * (tgrad[g] - dgrad[g]);
      }
      const bool stalled = best - v <= 1e-15 * (1.0 + std::abs(best));
      best = v;
      lam = std::move(trial);
      dgrad = std::move(tgrad);
      step = sy > 0.0 ? ss / sy : 2.0 * step;
      misses = stalled ? misses + 1 : 0;
      out.probe = x;
    } else {
      step *= 0.3;
      ++misses;
    }
  }
  out.bound = best;
  return out;
}

/// Best of refined_dual_bound_in_band over widening active bands; a narrow band
/// misses groups that are active at the optimum but not at an inexact `theta`.
template <GroupRiskFunction F>
DualRefinement refined_dual_bound(const F& f, const MaximinProblem& p, double radius, const Vector& theta,
                                  double band) {
  DualRefinement best;
  for (double b : {band, 10.0 * band, std::numeric_limits<double>::infinity()}) {
    auto r = refined_dual_bound_in_band(f, p, radius, theta, b);
    if (r.bound < best.bound) {
      best.bound = r.bound;
      best.probe = std::move(r.probe);
    }
    if (r.candidate_value > best.candidate_value) {
      best.candidate_value = r.candidate_value;
      best.candidate = std::move(r.candidate);
    }
  }
  return best;
}

struct CutStep {
  Vector step;
  double decrement = 0.0;  // guaranteed drop of ‖θ − z‖² for every z inside all cuts
};

/// Active-set solve of min ½μᵀGμ − cᵀμ over μ ≥ 0 (Lawson-Hanson pattern).
inline Vector nonnegative_qp(const Matrix& gram, const Vector& c) {
  const Eigen::Index k = c.size();
  Vector mu = Vector::Zero(k);
  std::vector<bool> in(static_cast<std::size_t>(k), false);
  const double tiny = 1e-14 * (1.0 + c.cwiseAbs().maxCoeff());
  for (Eigen::Index outer = 0; outer < 3 * k; ++outer) {
    const Vector w = c - gram * mu;
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < k; ++j)
      if (!in[static_cast<std::size_t>(j)] && w(j) > tiny && (enter < 0 || w(j) > w(enter))) enter = j;
    if (enter < 0) break;
    in[static_cast<std::size_t>(enter)] = true;
    for (Eigen::Index inner = 0; inner < 3 * k; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < k; ++j)
        if (in[static_cast<std::size_t>(j)]) idx.push_back(j);
      const auto n = static_cast<Eigen::Index>(idx.size());
      Matrix sub(n, n);
      Vector rhs(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        rhs(a) = c(idx[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = gram(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
      const Vector z = sub.completeOrthogonalDecomposition().solve(rhs);
      if (z.minCoeff() > 0.0) {
        mu.setZero();
        for (Eigen::Index a = 0; a < n; ++a) mu(idx[static_cast<std::size_t>(a)]) = z(a);
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index a = 0; a < n; ++a) {
        const double cur = mu(idx[static_cast<std::size_t>(a)]);
        if (z(a) <= 0.0) alpha = std::min(alpha, cur / (cur - z(a)));
      }
      for (Eigen::Index a = 0; a < n; ++a) {
        const auto j = idx[static_cast<std::size_t>(a)];
        mu(j) += alpha * (z(a) - mu(j));
        if (mu(j) <= 0.0 || (z(a) <= 0.0 && mu(j) <= tiny)) {
          mu(j) = 0.0;
          in[static_cast<std::size_t>(j)] = false;
        }
      }
    }
  }
  return mu.cwiseMax(0.0);
}

/// Approximate projection of 0 onto {δ : s_jᵀδ ≥ c_j} (columns s_j of `cuts`), i.e.
/// the minimal step δ (θ' = θ − δ) satisfying every linearized cut. Solves the dual
/// by an active-set method and by projected coordinate ascent and keeps the better
/// multipliers. For any μ ≥ 0 and δ = Sμ, each z in the intersection satisfies
/// ‖θ − δ − z‖² ≤ ‖θ − z‖² − (2cᵀμ − μᵀGμ), so the reported decrement is exact even
/// when the dual is solved inexactly.
inline CutStep multi_cut_step(const Matrix& cuts, const Vector& c) {
  const Matrix gram = cuts.transpose() * cuts;
  const Eigen::Index k = c.size();
  Vector mu = Vector::Zero(k);
  Vector gmu = Vector::Zero(k);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!(gram(j, j) > 1e-28)) continue;
      const double next = std::max(0.0, mu(j) + (c(j) - gmu(j)) / gram(j, j));
      const double d = next - mu(j);
      if (d != 0.0) {
        gmu += d * gram.col(j);
        mu(j) = next;
        change = std::max(change, std::abs(d) * std::sqrt(gram(j, j)));
      }
    }
    if (change <= 1e-15 * (1.0 + std::sqrt(mu.dot(gmu)))) break;
  }
  double decrement = 2.0 * c.dot(mu) - mu.dot(gmu);
  const Vector exact = nonnegative_qp(gram, c);
  const double exact_decrement = 2.0 * c.dot(exact) - exact.dot(gram * exact);
  if (std::isfinite(exact_decrement) && exact_decrement > decrement) {
    mu = exact;
    decrement = exact_decrement;
  }
  return {cuts * mu, decrement};
}

enum class LevelStatus { feasible, infeasible, unknown };

struct LevelOutcome {
  LevelStatus status = LevelStatus::unknown;
  Vector theta;
  double bound = std::numeric_limits<double>::infinity();  // certified upper bound when infeasible
  std::size_t iterations = 0;
};

/// Seeks θ with every free utility ≥ level and every pin satisfied, by projected
/// subgradient steps on h(θ) = max(max_free(level − u_g), max_pinned w(floor_g − u_g)).
///
/// Polyak steps aim at h = −overshoot. Each step projects onto the intersection of
/// the cuts of every piece violated at that target; every cut contains the target
/// level set, so the accumulated decrements certify infeasibility of
/// level + overshoot once they exceed the squared distance bound.
template <GroupRiskFunction F>
LevelOutcome test_level(const F& f, const MaximinProblem& p, double radius, double level, double overshoot,
                        const Vector& start, std::size_t budget, StepRule rule) {
  LevelOutcome out;
  Vector theta = start;
  const double dist = start.norm() + radius;
  const bool certify = !p.any_pinned() && rule == StepRule::polyak;
  double accumulated = 0.0;
  const std::size_t m = p.size();
  std::vector<double> piece(m);
  for (std::size_t k = 1; k <= budget; ++k) {
    const auto u = utilities(f, p, theta);
    std::size_t first = 0, second = m;
    for (std::size_t g = 0; g < m; ++g) {
      piece[g] = p.pinned[g] ? p.pin_weight * (p.floor[g] - u[g]) : level - u[g];
      if (piece[g] > piece[first]) first = g;
    }
    for (std::size_t g = 0; g < m; ++g)
      if (g != first && (second == m || piece[g] > piece[second])) second = g;
    out.iterations = k;
    const double h = piece[first];
    if (h <= 0.0) {
      out.status = LevelStatus::feasible;
      out.theta = theta;
      return out;
    }
    auto cut_gradient = [&](std::size_t g) {
      const double weight = p.pinned[g] ? p.pin_weight : 1.0;
      return Vector(weight * p.scale[g] * f.gradient(g, theta));
    };
    const Vector s = cut_gradient(first);
    const double s2 = s.squaredNorm();
    if (s2 < 1e-28) {
      // u_first is at its unconstrained maximum and still short of the target
      out.theta = theta;
      if (!p.pinned[first]) {
        out.status = LevelStatus::infeasible;
        out.bound = u[first];
      }
      return out;
    }
    Vector step;
    if (rule == StepRule::polyak) {
      std::vector<std::size_t> cut_groups{first};
      for (std::size_t g = 0; g < m; ++g)
        if (g != first && cut_gradient(g).squaredNorm() >= 1e-28) cut_groups.push_back(g);
      Matrix cuts(theta.size(), static_cast<Eigen::Index>(cut_groups.size()));
      Vector rhs(cuts.cols());
      for (std::size_t j = 0; j < cut_groups.size(); ++j) {
        cuts.col(static_cast<Eigen::Index>(j)) = cut_gradient(cut_groups[j]);
        rhs(static_cast<Eigen::Index>(j)) = piece[cut_groups[j]] + overshoot;
      }
      auto cut = multi_cut_step(cuts, rhs);
      const double single = (h + overshoot) * (h + overshoot) / s2;
      if (cut_groups.size() == 1 || !(cut.decrement >= single)) cut = {((h + overshoot) / s2) * s, single};
      step = std::move(cut.step);
      accumulated += cut.decrement;
    } else {
      step = (radius / (std::sqrt(s2) * std::sqrt(static_cast<double>(k)))) * s;
    }
    theta = project_to_ball(theta - step, radius);
    if (certify && accumulated > dist * dist) {
      out.status = LevelStatus::infeasible;
      out.bound = level + overshoot;
      out.theta = theta;
      return out;
    }
  }
  out.theta = theta;
  return out;
}

}  // namespace detail

/// Level-set bisection with a two-sided certificate [lower, upper].
template <GroupRiskFunction F>
MaximinResult solve_level_maximin(const F& f, const MaximinProblem& p, double radius, const SolverConfig& cfg,
                                  const Vector& start) {
  cfg.validate();
  detail::require_same_size(f.group_count(), p.size(), "solve_level_maximin");
  MaximinResult res;
  res.theta = project_to_ball(start, radius);
  auto u = detail::utilities(f, p, res.theta);
  if (!detail::pins_hold(p, u)) throw PreconditionError("solve_level_maximin: start violates pinned constraints");
  res.lower = detail::min_free(p, u);

  // vertex and barycentre multipliers give an initial bracket
  {
    std::vector<double> lam(p.size(), 0.0);
    std::size_t nfree = 0;
    for (std::size_t g = 0; g < p.size(); ++g) nfree += p.pinned[g] ? 0 : 1;
    for (std::size_t g = 0; g < p.size(); ++g) lam[g] = p.pinned[g] ? 0.0 : 1.0 / static_cast<double>(nfree);
    res.upper = detail::dual_bound(f, p, radius, lam, res.theta);
    for (std::size_t g = 0; g < p.size(); ++g) {
      if (p.pinned[g]) continue;
      std::vector<double> e(p.size(), 0.0);
      e[g] = 1.0;
      res.upper = std::min(res.upper, detail::dual_bound(f, p, radius, e, res.theta));
    }
  }

  std::size_t per_round =
      std::max<std::size_t>(2000, cfg.max_iters / std::max<std::size_t>(cfg.grid_bisection_iters, 1));
  const double band = 10.0 * cfg.tol;
  std::size_t stalls = 0;
  double frac = 0.5;
  for (std::size_t round = 0; round < cfg.grid_bisection_iters; ++round) {
    if (res.upper - res.lower <= cfg.tol || res.iterations >= cfg.max_iters) break;
    const auto dual =
        detail::refined_dual_bound(f, p, radius, res.theta, std::max(band, 0.1 * (res.upper - res.lower)));
    res.upper = std::min(res.upper, dual.bound);
    if (dual.candidate_value > res.lower) {
      res.lower = dual.candidate_value;
      res.theta = dual.candidate;
    }
    if (dual.probe.size() > 0 && res.iterations < cfg.max_iters) {
      // repair a near-feasible probe that beats the incumbent
      const double v = detail::min_free(p, detail::utilities(f, p, dual.probe)) - 0.5 * cfg.tol;
      if (v > res.lower) {
        const auto out = detail::test_level(f, p, radius, v, 1e-3 * cfg.tol, dual.probe,
                                            std::min<std::size_t>(500, cfg.max_iters - res.iterations), cfg.step_rule);
        res.iterations += out.iterations;
        if (out.status == detail::LevelStatus::feasible) {
          res.theta = out.theta;
          res.lower = std::max(res.lower, detail::min_free(p, detail::utilities(f, p, res.theta)));
        }
      }
    }
    if (res.upper - res.lower <= cfg.tol) break;
    const double width = res.upper - res.lower;
    const double level = res.lower + frac * width;
    const std::size_t budget = std::min(per_round, cfg.max_iters - res.iterations);
    const auto out = detail::test_level(f, p, radius, level, 0.5 * frac * width, res.theta, budget, cfg.step_rule);
    res.iterations += out.iterations;
    if (out.status == detail::LevelStatus::feasible) {
      res.theta = out.theta;
      res.lower = std::max(res.lower, detail::min_free(p, detail::utilities(f, p, res.theta)));
      stalls = 0;
      frac = 0.5;
    } else if (out.status == detail::LevelStatus::infeasible) {
      res.upper = std::min(res.upper, out.bound);
      stalls = 0;
      frac = 0.5;
    } else if (budget < per_round || ++stalls >= 12) {
      break;
    } else {
      // undecided: probe closer to the feasible side with a larger budget
      frac = std::max(frac * 0.5, 1.0 / 64.0);
      per_round *= 2;
    }
  }
  res.upper = std::max(res.upper, res.lower);
  res.converged = res.upper - res.lower <= cfg.tol;
  return res;
}

namespace detail {

template <GroupRiskFunction F>
Vector initial_point(const F& f, double radius, const SolverConfig& cfg) {
  if (cfg.initial) {
    if (cfg.initial->size() != f.dimension()) throw DimensionError("SolverConfig: initial point dimension mismatch");
    return project_to_ball(*cfg.initial, radius);
  }
  if (cfg.seed != 0) return random_point_in_ball(f.dimension(), radius, cfg.seed);
  return Vector::Zero(f.dimension());
}

template <GroupRiskFunction F>
SolverReport make_report(std::string method, const F& f, const BargainingFrame& frame, const Vector& theta) {
  SolverReport r;
  r.method = std::move(method);
  r.parameter = theta;
  r.risk_profile = risk_profile(f, theta);
  r.improvement_profile = to_improvement(r.risk_profile, frame);
  return r;
}

template <GroupRiskFunction F>
void check_inputs(const F& f, const BargainingFrame& frame, double radius) {
  detail::require_same_size(f.group_count(), frame.size(), "solver frame");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw PreconditionError("solver: radius must be positive and finite");
}

/// Two-group maximin point as the crossing of the weighted-sum frontier with the
/// line ρ₁ = ρ₂, by bisection on the weight of group 1.
template <GroupRiskFunction F>
Vector equalized_pair(const F& f, const BargainingFrame& frame, double radius, const Vector& warm) {
  double lo = 0.0, hi = 1.0;
  Vector best = warm;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
    const double lam = 0.5 * (lo + hi);
    const std::vector<double> w{lam / frame.gap(0), (1.0 - lam) / frame.gap(1)};
    const Vector th = minimize_weighted_risk(f, w, radius, best);
    const double r0 = frame.rho(0, f.risk(0, th)), r1 = frame.rho(1, f.risk(1, th));
    if (std::min(r0, r1) > best_value) {
      best_value = std::min(r0, r1);
      best = th;
    }
    (r0 < r1 ? lo : hi) = lam;
  }
  return best;
}

template <GroupRiskFunction F>
SolverReport solve_minimax_criterion(Criterion c, const F& f, const BargainingFrame& frame, double radius,
                                     const SolverConfig& cfg) {
  check_inputs(f, frame, radius);
  const auto problem = make_problem(c, frame);
  auto res = solve_level_maximin(f, problem, radius, cfg, initial_point(f, radius, cfg));
  if (c == Criterion::ri && f.group_count() == 2) {
    const Vector th = equalized_pair(f, frame, radius, res.theta);
    const double v = std::min(frame.rho(0, f.risk(0, th)), frame.rho(1, f.risk(1, th)));
    if (v >= res.lower) {
      res.theta = th;
      res.lower = v;
      res.upper = std::max(res.upper, v);
      res.converged = res.upper - res.lower <= cfg.tol;
    }
  }
  auto report = make_report(std::string(criterion_name(c)), f, frame, res.theta);
  const bool flip = c == Criterion::gdro || c == Criterion::mmr;
  report.objective_value = flip ? -res.lower : res.lower;
  report.iterations = res.iterations;
  report.certificate_gap = res.upper - res.lower;
  report.converged = res.converged;
  return report;
}

}  // namespace detail

/// Maximizes the worst-group relative improvement.
template <GroupRiskFunction F>
SolverReport solve_maximin_ri(const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  return detail::solve_minimax_criterion(Criterion::ri, f, frame, radius, cfg);
}

/// Minimizes the worst-group risk.
template <GroupRiskFunction F>
SolverReport solve_gdro(const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  return detail::solve_minimax_criterion(Criterion::gdro, f, frame, radius, cfg);
}

/// Maximizes the smallest absolute risk reduction from the baseline.
template <GroupRiskFunction F>
SolverReport solve_mmv(const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  return detail::solve_minimax_criterion(Criterion::mmv, f, frame, radius, cfg);
}

/// Minimizes the worst-group regret against the ideal risks.
template <GroupRiskFunction F>
SolverReport solve_mmr(const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  return detail::solve_minimax_criterion(Criterion::mmr, f, frame, radius, cfg);
}

/// Sequential leximin: each stage raises the smallest unpinned ρ while groups
/// pinned in earlier stages stay within tol of their stage value.
template <GroupRiskFunction F>
SolverReport solve_leximin_ri(const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  detail::check_inputs(f, frame, radius);
  const std::size_t m = f.group_count();
  if (m > 10) throw PreconditionError("solve_leximin_ri: at most 10 groups supported");
  auto problem = detail::make_problem(Criterion::ri, frame);
  Vector theta = detail::initial_point(f, radius, cfg);
  double gap = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  for (std::size_t stage = 0; stage < m; ++stage) {
    MaximinResult res;
    bool pins_ok = false;
    for (int round = 0; round < 6 && !pins_ok; ++round) {
      res = solve_level_maximin(f, problem, radius, cfg, theta);
      iterations += res.iterations;
      pins_ok = detail::pins_hold(problem, detail::utilities(f, problem, res.theta), cfg.tol);
      if (!pins_ok) problem.pin_weight *= 10.0;
    }
    converged = converged && res.converged && pins_ok;
    gap = std::max(gap, res.upper - res.lower);
    theta = res.theta;
    const auto u = detail::utilities(f, problem, theta);
    std::vector<std::size_t> newly;
    for (std::size_t g = 0; g < m; ++g)
      if (!problem.pinned[g] && u[g] <= res.lower + 10.0 * cfg.tol) newly.push_back(g);
    if (newly.empty()) {
      std::size_t arg = m;
      for (std::size_t g = 0; g < m; ++g)
        if (!problem.pinned[g] && (arg == m || u[g] < u[arg])) arg = g;
      newly.push_back(arg);
    }
    for (auto g : newly) {
      problem.pinned[g] = true;
      problem.floor[g] = res.lower - cfg.tol;
    }
    if (std::all_of(problem.pinned.begin(), problem.pinned.end(), [](bool b) { return b; })) break;
  }
  auto report = detail::make_report("leximin", f, frame, theta);
  report.objective_value = report.improvement_profile.min();
  report.iterations = iterations;
  report.certificate_gap = gap;
  report.converged = converged;
  return report;
}

/// Maximizes Σ log(baseline_g − R_g(θ)) from the maximin-RI point by projected
/// gradient ascent with backtracking; certificate is the tangent-plane gap.
template <GroupRiskFunction F>
SolverReport solve_nash(const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  detail::check_inputs(f, frame, radius);
  const auto start = solve_maximin_ri(f, frame, radius, cfg);
  if (!(start.objective_value > 0.0))
    throw DegenerateBargainingError("nash: no parameter improves every group over the baseline");
  const std::size_t m = f.group_count();
  auto value = [&](const Vector& th, bool& ok) {
    double s = 0.0;
    ok = true;
    for (std::size_t g = 0; g < m; ++g) {
      const double gain = frame.baseline(g) - f.risk(g, th);
      if (!(gain > 0.0)) {
        ok = false;
        return -std::numeric_limits<double>::infinity();
      }
      s += std::log(gain);
    }
    return s;
  };
  auto gradient = [&](const Vector& th) {
    Vector gsum = Vector::Zero(f.dimension());
    for (std::size_t g = 0; g < m; ++g) gsum -= f.gradient(g, th) / (frame.baseline(g) - f.risk(g, th));
    return gsum;
  };
  Vector theta = start.parameter;
  bool ok = true;
  double current = value(theta, ok);
  double step = 1.0;
  double gap = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Vector grad = gradient(theta);
    gap = std::max(radius * grad.norm() - grad.dot(theta), 0.0);
    if (gap <= cfg.tol) break;
    bool accepted = false;
    if constexpr (HessianRiskFunction<F>) {
      // Newton model of the concave objective, maximized exactly over the ball
      Matrix neg_hess = Matrix::Zero(theta.size(), theta.size());
      for (std::size_t g = 0; g < m; ++g) {
        const double gain = frame.baseline(g) - f.risk(g, theta);
        const Vector rg = f.gradient(g, theta);
        neg_hess += f.hessian(g, theta) / gain + rg * rg.transpose() / (gain * gain);
      }
      neg_hess = 0.5 * (neg_hess + neg_hess.transpose());
      const Vector target =
          minimize_quadratic_on_ball(0.5 * neg_hess, 0.5 * (grad + neg_hess * theta), radius).theta;
      const Vector dir = target - theta;
      const double slope = grad.dot(dir);
      for (double t = 1.0; slope > 0.0 && t > 1e-10; t *= 0.5) {
        const Vector cand = theta + t * dir;
        bool cand_ok = true;
        const double v = value(cand, cand_ok);
        if (cand_ok && v >= current + 1e-4 * t * slope) {
          theta = cand;
          current = v;
          accepted = true;
          break;
        }
      }
    }
    for (int bt = 0; bt < 80 && !accepted; ++bt) {
      const Vector cand = project_to_ball(theta + step * grad, radius);
      bool cand_ok = true;
      const double v = value(cand, cand_ok);
      const Vector diff = cand - theta;
      if (cand_ok && v >= current + grad.dot(diff) - diff.squaredNorm() / (2.0 * step)) {
        theta = cand;
        current = v;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step *= 2.0;
  }
  auto report = detail::make_report("nash", f, frame, theta);
  report.objective_value = current;
  report.iterations = start.iterations + it;
  report.certificate_gap = gap;
  report.converged = gap <= cfg.tol;
  return report;
}

template <GroupRiskFunction F>
SolverReport solve(Criterion c, const F& f, const BargainingFrame& frame, double radius, const SolverConfig& cfg = {}) {
  switch (c) {
    case Criterion::ri: return solve_maximin_ri(f, frame, radius, cfg);
    case Criterion::leximin: return solve_leximin_ri(f, frame, radius, cfg);
    case Criterion::gdro: return solve_gdro(f, frame, radius, cfg);
    case Criterion::mmv: return solve_mmv(f, frame, radius, cfg);
    case Criterion::mmr: return solve_mmr(f, frame, radius, cfg);
    case Criterion::nash: return solve_nash(f, frame, radius, cfg);
  }
  throw PreconditionError("solve: unknown criterion");
}

// ---------------------------------------------------------------------------
// Criterion values and their (super)gradients
// ---------------------------------------------------------------------------

/// Criterion value at θ in the units reported by SolverReport::objective_value.
template <GroupRiskFunction F>
double criterion_value(Criterion c, const F& f, const BargainingFrame& frame, const Vector& theta) {
  const std::size_t m = f.group_count();
  double v = 0.0;
  switch (c) {
    case Criterion::ri:
    case Criterion::leximin:
      v = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < m; ++g) v = std::min(v, frame.rho(g, f.risk(g, theta)));
      return v;
    case Criterion::gdro:
      v = -std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < m; ++g) v = std::max(v, f.risk(g, theta));
      return v;
    case Criterion::mmv:
      v = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < m; ++g) v = std::min(v, frame.baseline(g) - f.risk(g, theta));
      return v;
    case Criterion::mmr:
      v = -std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < m; ++g) v = std::max(v, f.risk(g, theta) - frame.ideal(g));
      return v;
    case Criterion::nash:
      for (std::size_t g = 0; g < m; ++g) {
        const double gain = frame.baseline(g) - f.risk(g, theta);
        if (!(gain > 0.0)) return -std::numeric_limits<double>::infinity();
        v += std::log(gain);
      }
      return v;
  }
  return v;
}

/// A (super)gradient of criterion_value: the active group's gradient for the
/// max/min criteria, the exact gradient for nash.
template <GroupRiskFunction F>
Vector criterion_gradient(Criterion c, const F& f, const BargainingFrame& frame, const Vector& theta) {
  const std::size_t m = f.group_count();
  if (c == Criterion::nash) {
    Vector s = Vector::Zero(f.dimension());
    for (std::size_t g = 0; g < m; ++g) s -= f.gradient(g, theta) / (frame.baseline(g) - f.risk(g, theta));
    return s;
  }
  std::size_t arg = 0;
  double best = 0.0;
  for (std::size_t g = 0; g < m; ++g) {
    const double r = f.risk(g, theta);
    double key = 0.0;
    switch (c) {
      case Criterion::ri:
      case Criterion::leximin: key = -frame.rho(g, r); break;
      case Criterion::gdro: key = r; break;
      case Criterion::mmv: key = r - frame.baseline(g); break;
      case Criterion::mmr: key = r - frame.ideal(g); break;
      case Criterion::nash: break;
    }
    if (g == 0 || key > best) {
      best = key;
      arg = g;
    }
  }
  const Vector grad = f.gradient(arg, theta);
  switch (c) {
    case Criterion::ri:
    case Criterion::leximin: return -grad / frame.gap(arg);
    case Criterion::mmv: return -grad;
    default: return grad;
  }
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_SOLVERS_HPP
