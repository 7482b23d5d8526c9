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

#ifndef FAIRBARGAIN_GEOMETRY_HPP
#define FAIRBARGAIN_GEOMETRY_HPP

#include "fairbargain/core.hpp"
#include "fairbargain/risk_models.hpp"
#include "fairbargain/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace fairbargain {

// ---------------------------------------------------------------------------
// Risk-set sampling
// ---------------------------------------------------------------------------

/// Risk profiles of a parameter sample, stored row-major.
struct RiskSample {
  std::size_t group_count = 0;
  Eigen::Index dimension = 0;
  std::vector<double> thetas;  // size() × dimension
  std::vector<double> risks;   // size() × group_count
  double grid_step = 0.0;      // parameter spacing of the generating grid (0 for random samples)

  std::size_t size() const { return group_count == 0 ? 0 : risks.size() / group_count; }
  std::span<const double> risk(std::size_t i) const { return {risks.data() + i * group_count, group_count}; }
  Vector theta(std::size_t i) const {
    return Eigen::Map<const Vector>(thetas.data() + i * static_cast<std::size_t>(dimension), dimension);
  }
  std::vector<RiskProfile> profiles() const {
    std::vector<RiskProfile> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.emplace_back(std::vector<double>(risk(i).begin(), risk(i).end()));
    return out;
  }
};

namespace detail {

/// Maps the cube [−1,1]^d onto the unit ball (d ≤ 3), boundary to boundary.
inline Vector cube_to_ball(const Vector& c) {
  Vector out = c;
  if (c.size() == 2) {
    out(0) = c(0) * std::sqrt(1.0 - 0.5 * c(1) * c(1));
    out(1) = c(1) * std::sqrt(1.0 - 0.5 * c(0) * c(0));
  } else if (c.size() == 3) {
    const double x2 = c(0) * c(0), y2 = c(1) * c(1), z2 = c(2) * c(2);
    out(0) = c(0) * std::sqrt(std::max(0.0, 1.0 - y2 / 2 - z2 / 2 + y2 * z2 / 3));
    out(1) = c(1) * std::sqrt(std::max(0.0, 1.0 - z2 / 2 - x2 / 2 + z2 * x2 / 3));
    out(2) = c(2) * std::sqrt(std::max(0.0, 1.0 - x2 / 2 - y2 / 2 + x2 * y2 / 3));
  }
  return out;
}

}  // namespace detail

/// For d ≤ 3: `grid` points per axis over the cube mapped onto the ball, so the
/// sample has grid^d points. For d > 3: `grid` uniform draws from the ball.
template <GroupRiskFunction F>
RiskSample sample_risk_set(const F& f, double radius, std::size_t grid, std::uint64_t seed = 1) {
  if (grid == 0) throw PreconditionError("sample_risk_set: resolution must be positive");
  const Eigen::Index d = f.dimension();
  RiskSample s;
  s.group_count = f.group_count();
  s.dimension = d;
  auto push = [&](const Vector& theta) {
    s.thetas.insert(s.thetas.end(), theta.data(), theta.data() + d);
    for (std::size_t g = 0; g < s.group_count; ++g) s.risks.push_back(f.risk(g, theta));
  };
  if (d <= 3) {
    s.grid_step = grid > 1 ? 2.0 * radius / static_cast<double>(grid - 1) : 0.0;
    std::size_t total = 1;
    for (Eigen::Index j = 0; j < d; ++j) total *= grid;
    s.thetas.reserve(total * static_cast<std::size_t>(d));
    s.risks.reserve(total * s.group_count);
    Vector c(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (Eigen::Index j = 0; j < d; ++j) {
        const std::size_t k = rem % grid;
        rem /= grid;
        c(j) = grid > 1 ? -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(grid - 1) : 0.0;
      }
      push(radius * detail::cube_to_ball(c));
    }
  } else {
    for (std::size_t i = 0; i < grid; ++i) push(random_point_in_ball(d, radius, seed + i));
  }
  return s;
}

inline RiskSample sample_risk_set(const ProblemSpec& spec, std::size_t grid) {
  return sample_risk_set(population_risks(spec), spec.radius, grid);
}

/// ε = 2·(grid step)·Lip, with Lip the largest Frobenius norm of the risk
/// Jacobian over the sampled parameters.
template <GroupRiskFunction F>
double riskset_tolerance(const F& f, const RiskSample& s) {
  double lip = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vector theta = s.theta(i);
    double sq = 0.0;
    for (std::size_t g = 0; g < s.group_count; ++g) sq += f.gradient(g, theta).squaredNorm();
    lip = std::max(lip, std::sqrt(sq));
  }
  return 2.0 * s.grid_step * lip;
}

// ---------------------------------------------------------------------------
// Pareto frontier in relative-improvement space (two groups)
// ---------------------------------------------------------------------------

struct FrontierPoint {
  double lambda = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

/// Upper boundary points ordered by strictly increasing ρ₁.
struct FrontierTrace {
  std::vector<FrontierPoint> points;

  std::vector<double> lambdas() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.lambda);
    return out;
  }
};

namespace detail {

template <GroupRiskFunction F>
FrontierPoint scalarized_point(const F& f, const BargainingFrame& frame, double radius, double lambda) {
  const std::array<double, 2> w{lambda, 1.0 - lambda};
  const Vector theta =
      minimize_weighted_risk(f, std::span<const double>(w), radius, Vector::Zero(f.dimension()), 1e-10, 200000);
  FrontierPoint p;
  p.lambda = lambda;
  p.r1 = f.risk(0, theta);
  p.r2 = f.risk(1, theta);
  p.rho1 = frame.rho(0, p.r1);
  p.rho2 = frame.rho(1, p.r2);
  return p;
}

/// Sorts by ρ₁, keeps the Pareto-undominated points, merges near-duplicates.
inline FrontierTrace clean_trace(std::vector<FrontierPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.rho1 != b.rho1 ? a.rho1 < b.rho1 : a.rho2 > b.rho2;
  });
  FrontierTrace out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (j == i) continue;
      const std::array<double, 2> a{pts[j].rho1, pts[j].rho2}, b{pts[i].rho1, pts[i].rho2};
      dominated = dominates_upward(a, b);
    }
    if (dominated) continue;
    if (!out.points.empty() && pts[i].rho1 - out.points.back().rho1 <= 1e-12) continue;
    out.points.push_back(pts[i]);
  }
  return out;
}

}  // namespace detail

/// Weighted-sum scalarization min λR₁ + (1−λ)R₂ over the ball for the given
/// weights, mapped to ρ space. With `refine_diagonal`, λ-intervals where ρ₁ − ρ₂
/// changes sign are bisected and the crossing weight is added to the trace.
template <GroupRiskFunction F>
FrontierTrace trace_frontier(const F& f, const BargainingFrame& frame, double radius,
                             const std::vector<double>& lambdas, bool refine_diagonal = true) {
  if (f.group_count() != 2) throw DimensionError("trace_frontier: exactly two groups required");
  detail::require_same_size(2, frame.size(), "trace_frontier frame");
  std::vector<FrontierPoint> pts;
  pts.reserve(lambdas.size() + 4);
  for (double l : lambdas) pts.push_back(detail::scalarized_point(f, frame, radius, l));
  if (refine_diagonal) {
    std::vector<FrontierPoint> by_lambda = pts;
    std::sort(by_lambda.begin(), by_lambda.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    for (std::size_t i = 0; i + 1 < by_lambda.size(); ++i) {
      const double ga = by_lambda[i].rho1 - by_lambda[i].rho2;
      const double gb = by_lambda[i + 1].rho1 - by_lambda[i + 1].rho2;
      if (!((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0))) continue;
      double lo = by_lambda[i].lambda, hi = by_lambda[i + 1].lambda;
      FrontierPoint mid;
      for (int it = 0; it < 60; ++it) {
        const double l = 0.5 * (lo + hi);
        mid = detail::scalarized_point(f, frame, radius, l);
        const double gm = mid.rho1 - mid.rho2;
        if ((gm < 0.0) == (ga < 0.0)) lo = l; else hi = l;
      }
      pts.push_back(mid);
    }
  }
  return detail::clean_trace(std::move(pts));
}

/// `n_weights` evenly spaced λ in [0, 1], endpoints included.
inline std::vector<double> uniform_weights(std::size_t n_weights) {
  if (n_weights < 2) throw PreconditionError("uniform_weights: at least two weights required");
  std::vector<double> l(n_weights);
  for (std::size_t i = 0; i < n_weights; ++i) l[i] = static_cast<double>(i) / static_cast<double>(n_weights - 1);
  return l;
}

inline FrontierTrace trace_frontier(const ProblemSpec& spec, std::size_t n_weights, bool refine_diagonal = true) {
  return trace_frontier(population_risks(spec), population_frame(spec), spec.radius, uniform_weights(n_weights),
                        refine_diagonal);
}

inline void write_frontier_csv(std::ostream& os, const FrontierTrace& trace) {
  os << "lambda,rho1,rho2,r1,r2\n";
  os.precision(17);
  for (const auto& p : trace.points) os << p.lambda << ',' << p.rho1 << ',' << p.rho2 << ',' << p.r1 << ',' << p.r2 << '\n';
}

struct DiagonalCrossing {
  double rho = 0.0;  // common value ρ₁ = ρ₂ at the crossing
  std::size_t segment = 0;
};

/// Sign changes of ρ₂ − ρ₁ along the trace (exact zeros are skipped).
inline std::size_t count_diagonal_crossings(const FrontierTrace& trace) {
  std::size_t count = 0;
  int last = 0;
  for (const auto& p : trace.points) {
    const double g = p.rho2 - p.rho1;
    const int s = g > 0 ? 1 : (g < 0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

/// Crossing of the piecewise-linear frontier with the equal-ρ line.
inline DiagonalCrossing diagonal_intersection(const FrontierTrace& trace) {
  const auto& pts = trace.points;
  auto g = [&](std::size_t i) { return pts[i].rho2 - pts[i].rho1; };
  if (pts.size() < 2 || !(g(0) > 0.0) || !(g(pts.size() - 1) < 0.0))
    throw PreconditionError("diagonal_intersection: trace does not bracket the equal-improvement line");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (g(i) == 0.0) return {pts[i].rho1, i};
    if (i + 1 < pts.size() && g(i) > 0.0 && g(i + 1) < 0.0) {
      double lo = 0.0, hi = 1.0;
      auto at = [&](double s) {
        const double r1 = pts[i].rho1 + s * (pts[i + 1].rho1 - pts[i].rho1);
        const double r2 = pts[i].rho2 + s * (pts[i + 1].rho2 - pts[i].rho2);
        return std::pair{r1, r2 - r1};
      };
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (at(mid).second > 0.0) lo = mid; else hi = mid;
      }
      return {at(0.5 * (lo + hi)).first, i};
    }
  }
  throw PreconditionError("diagonal_intersection: no sign change along the trace");
}

// ---------------------------------------------------------------------------
// Convex hull Pareto check
// ---------------------------------------------------------------------------

struct HullParetoReport {
  double max_violation = 0.0;  // largest distance from a Pareto hull point to the sample
  double tolerance = 0.0;
  std::size_t pareto_faces = 0;
  std::size_t probes = 0;
  bool passed = true;
};

namespace detail {

inline double cross2(const std::array<double, 2>& o, const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Monotone-chain hull, counter-clockwise, collinear points dropped.
inline std::vector<std::array<double, 2>> hull2(std::vector<std::array<double, 2>> p) {
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  std::vector<std::array<double, 2>> h(2 * p.size());
  std::size_t k = 0;
  for (const auto& q : p) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], q) <= 0) --k;
    h[k++] = q;
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

using Vec3 = std::array<double, 3>;

inline Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

struct Face3 {
  std::array<std::size_t, 3> v;
  Vec3 normal;
  double offset;
};

/// Incremental 3-D hull; faces oriented outward.
inline std::vector<Face3> hull3(const std::vector<Vec3>& p) {
  const std::size_t n = p.size();
  if (n < 4) return {};
  double scale = 0.0;
  for (const auto& q : p)
    for (double x : q) scale = std::max(scale, std::abs(x));
  const double eps = 1e-12 * std::max(scale, 1.0) * std::max(scale, 1.0);

  std::size_t i0 = 0, i1 = 0, i2 = 0, i3 = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (dot3(sub3(p[i], p[i0]), sub3(p[i], p[i0])) > dot3(sub3(p[i1], p[i0]), sub3(p[i1], p[i0]))) i1 = i;
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c = cross3(sub3(p[i1], p[i0]), sub3(p[i], p[i0]));
    if (dot3(c, c) > best) {
      best = dot3(c, c);
      i2 = i;
    }
  }
  best = 0.0;
  const Vec3 nrm = cross3(sub3(p[i1], p[i0]), sub3(p[i2], p[i0]));
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::abs(dot3(nrm, sub3(p[i], p[i0])));
    if (v > best) {
      best = v;
      i3 = i;
    }
  }
  if (best <= eps) return {};  // coplanar

  Vec3 centre{};
  for (auto i : {i0, i1, i2, i3})
    for (int k = 0; k < 3; ++k) centre[k] += p[i][k] / 4.0;

  std::vector<Face3> faces;
  auto add_face = [&](std::size_t a, std::size_t b, std::size_t c) {
    Vec3 nn = cross3(sub3(p[b], p[a]), sub3(p[c], p[a]));
    if (dot3(nn, sub3(centre, p[a])) > 0) {
      std::swap(b, c);
      nn = {-nn[0], -nn[1], -nn[2]};
    }
    faces.push_back({{a, b, c}, nn, dot3(nn, p[a])});
  };
  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  for (std::size_t i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    std::vector<bool> visible(faces.size(), false);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const double nn = std::sqrt(dot3(faces[f].normal, faces[f].normal));
      if (dot3(faces[f].normal, p[i]) - faces[f].offset > eps * std::max(nn, 1.0)) {
        visible[f] = true;
        any = true;
      }
    }
    if (!any) continue;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) continue;
      for (int e = 0; e < 3; ++e) edges.insert({faces[f].v[e], faces[f].v[(e + 1) % 3]});
    }
    std::vector<Face3> kept;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (!visible[f]) kept.push_back(faces[f]);
    faces = std::move(kept);
    for (const auto& [a, b] : edges) {
      if (edges.count({b, a})) continue;  // interior edge of the visible region
      const Vec3 nn = cross3(sub3(p[b], p[a]), sub3(p[i], p[a]));
      faces.push_back({{a, b, i}, nn, dot3(nn, p[a])});
    }
  }
  return faces;
}

inline double nearest_distance(const RiskSample& s, std::span<const double> q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = s.risk(i);
    double d2 = 0.0;
    for (std::size_t g = 0; g < q.size(); ++g) d2 += (r[g] - q[g]) * (r[g] - q[g]);
    best = std::min(best, d2);
  }
  return std::sqrt(best);
}

}  // namespace detail

/// Computes the convex hull of the sampled risk profiles (m = 2 or 3), takes its
/// Pareto faces (outward normal strictly negative in every coordinate), and
/// measures how far points on those faces are from the nearest sample. Hulls
/// without interior have no faces and pass.
inline HullParetoReport hull_pareto_check(const RiskSample& s, double tolerance) {
  HullParetoReport rep;
  rep.tolerance = tolerance;
  const std::size_t m = s.group_count;
  if (m != 2 && m != 3) throw DimensionError("hull_pareto_check: two or three groups supported");
  auto probe = [&](std::span<const double> q) {
    ++rep.probes;
    rep.max_violation = std::max(rep.max_violation, detail::nearest_distance(s, q));
  };
  if (m == 2) {
    std::vector<std::array<double, 2>> pts(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) pts[i] = {s.risk(i)[0], s.risk(i)[1]};
    // a degenerate hull (point or segment) has no faces; its vertices are samples
    const auto h = detail::hull2(std::move(pts));
    for (std::size_t i = 0; h.size() >= 3 && i < h.size(); ++i) {
      const auto& a = h[i];
      const auto& b = h[(i + 1) % h.size()];
      const double nx = b[1] - a[1], ny = -(b[0] - a[0]);  // outward for a CCW hull
      if (!(nx < 0.0 && ny < 0.0)) continue;
      ++rep.pareto_faces;
      for (double t : {0.25, 0.5, 0.75}) {
        const std::array<double, 2> q{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
        probe(q);
      }
    }
  } else {
    std::vector<detail::Vec3> pts(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) pts[i] = {s.risk(i)[0], s.risk(i)[1], s.risk(i)[2]};
    for (const auto& f : detail::hull3(pts)) {
      if (!(f.normal[0] < 0.0 && f.normal[1] < 0.0 && f.normal[2] < 0.0)) continue;
      ++rep.pareto_faces;
      const auto& a = pts[f.v[0]];
      const auto& b = pts[f.v[1]];
      const auto& c = pts[f.v[2]];
      const std::array<std::array<double, 3>, 4> weights{
          {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};
      for (const auto& w : weights) {
        std::array<double, 3> q{};
        for (int k = 0; k < 3; ++k) q[k] = w[0] * a[k] + w[1] * b[k] + w[2] * c[k];
        probe(q);
      }
    }
  }
  rep.passed = rep.max_violation <= tolerance;
  return rep;
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_GEOMETRY_HPP
