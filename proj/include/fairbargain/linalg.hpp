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

#ifndef FAIRBARGAIN_LINALG_HPP
#define FAIRBARGAIN_LINALG_HPP

#include "fairbargain/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairbargain {

/// Relative cutoff for eigenvalues (and singular values) treated as zero.
inline constexpr double kPseudoInverseCutoff = 1e-10;

/// Euclidean projection onto {‖θ‖ ≤ radius}.
inline Vector project_to_ball(const Vector& theta, double radius) {
  const double n = theta.norm();
  if (n <= radius) return theta;
  return theta * (radius / n);
}

inline bool is_symmetric(const Matrix& a, double tol = 1e-10) {
  return a.rows() == a.cols() && (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

struct BallQuadraticSolution {
  Vector theta;
  double multiplier = 0.0;  // Lagrange multiplier of the ball constraint
  bool on_boundary = false;
};

/// Minimizes θᵀAθ − 2bᵀθ over {‖θ‖ ≤ radius} for symmetric PSD A.
///
/// The unconstrained minimum-norm solution is tried first (pseudo-inverse with
/// relative cutoff kPseudoInverseCutoff). When it leaves the ball, the multiplier
/// μ > 0 with ‖(A + μI)⁻¹b‖ = radius is found by safeguarded Newton on the
/// secular function 1/‖x(μ)‖ − 1/radius.
inline BallQuadraticSolution minimize_quadratic_on_ball(const Matrix& a, const Vector& b, double radius,
                                                        double tol = 1e-10) {
  const Eigen::Index d = b.size();
  if (a.rows() != d || a.cols() != d) throw DimensionError("minimize_quadratic_on_ball: shape mismatch");
  if (!(radius > 0.0)) throw PreconditionError("minimize_quadratic_on_ball: radius must be positive");
  BallQuadraticSolution out;
  out.theta = Vector::Zero(d);
  if (d == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
  const Vector lam = eig.eigenvalues().cwiseMax(0.0);
  const Vector c = eig.eigenvectors().transpose() * b;
  const double cnorm = c.norm();
  if (cnorm == 0.0) return out;

  const double cutoff = kPseudoInverseCutoff * std::max(lam.maxCoeff(), 0.0);
  bool unbounded = false;
  Vector x0 = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lam(i) > cutoff && lam(i) > 0.0) {
      x0(i) = c(i) / lam(i);
    } else if (std::abs(c(i)) > 1e-14 * cnorm) {
      unbounded = true;
    }
  }
  if (!unbounded && x0.norm() <= radius) {
    out.theta = eig.eigenvectors() * x0;
    return out;
  }

  auto norm_at = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double v = c(i) / (lam(i) + mu);
      s += v * v;
    }
    return std::sqrt(s);
  };

  double lo = 0.0;
  double hi = cnorm / radius;  // ‖x(hi)‖ ≤ ‖c‖/hi = radius
  double mu = hi;
  for (int it = 0; it < 200; ++it) {
    const double nx = norm_at(mu);
    if (std::abs(nx - radius) <= tol * radius || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    if (nx > radius) lo = mu; else hi = mu;
    // d/dμ (1/‖x‖) = (Σ c²/(λ+μ)³) / ‖x‖³
    double s3 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) s3 += c(i) * c(i) / std::pow(lam(i) + mu, 3);
    const double phi = 1.0 / nx - 1.0 / radius;
    const double dphi = s3 / (nx * nx * nx);
    double next = mu - phi / dphi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    mu = next;
  }
  Vector x(d);
  for (Eigen::Index i = 0; i < d; ++i) x(i) = c(i) / (lam(i) + mu);
  x *= radius / x.norm();
  out.theta = eig.eigenvectors() * x;
  out.multiplier = mu;
  out.on_boundary = true;
  return out;
}

/// Minimum-norm least squares via the normal equations with truncated spectrum.
inline Vector least_squares(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw DimensionError("least_squares: row mismatch");
  const Matrix gram = x.transpose() * x;
  const Vector rhs = x.transpose() * y;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector lam = eig.eigenvalues();
  const double cutoff = kPseudoInverseCutoff * std::max(lam.maxCoeff(), 0.0);
  const Vector c = eig.eigenvectors().transpose() * rhs;
  Vector z = Vector::Zero(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (lam(i) > cutoff && lam(i) > 0.0) z(i) = c(i) / lam(i);
  return eig.eigenvectors() * z;
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_LINALG_HPP
