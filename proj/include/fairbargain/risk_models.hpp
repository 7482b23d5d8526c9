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

#ifndef FAIRBARGAIN_RISK_MODELS_HPP
#define FAIRBARGAIN_RISK_MODELS_HPP

#include "fairbargain/core.hpp"
#include "fairbargain/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fairbargain {

// ---------------------------------------------------------------------------
// Group risk functions
// ---------------------------------------------------------------------------

/// A family of m convex group risks over a d-dimensional parameter.
template <class F>
concept GroupRiskFunction = requires(const F& f, const Vector& theta, std::size_t g) {
  { f.group_count() } -> std::convertible_to<std::size_t>;
  { f.dimension() } -> std::convertible_to<Eigen::Index>;
  { f.risk(g, theta) } -> std::convertible_to<double>;
  { f.gradient(g, theta) } -> std::convertible_to<Vector>;
};

/// Risk families that minimize nonnegative weighted sums over the ball exactly.
template <class F>
concept ExactWeightedMinimizer =
    GroupRiskFunction<F> && requires(const F& f, std::span<const double> w, double radius) {
      { f.minimize_weighted(w, radius) } -> std::convertible_to<Vector>;
    };

/// Risk families that also provide group Hessians.
template <class F>
concept HessianRiskFunction = GroupRiskFunction<F> && requires(const F& f, const Vector& theta, std::size_t g) {
  { f.hessian(g, theta) } -> std::convertible_to<Matrix>;
};

template <GroupRiskFunction F>
RiskProfile risk_profile(const F& f, const Vector& theta) {
  std::vector<double> r(f.group_count());
  for (std::size_t g = 0; g < r.size(); ++g) r[g] = f.risk(g, theta);
  return RiskProfile(std::move(r));
}

/// Convex quadratic risks R_g(θ) = θᵀA_gθ − 2b_gᵀθ + c_g with A_g PSD.
class QuadraticGroupRisks {
 public:
  struct Term {
    Matrix a;
    Vector b;
    double c = 0.0;
  };

  QuadraticGroupRisks() = default;
  explicit QuadraticGroupRisks(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw DimensionError("QuadraticGroupRisks: no groups");
    const Eigen::Index d = terms_.front().b.size();
    for (const auto& t : terms_) {
      if (t.b.size() != d || t.a.rows() != d || t.a.cols() != d)
        throw DimensionError("QuadraticGroupRisks: inconsistent dimensions");
    }
  }

  std::size_t group_count() const noexcept { return terms_.size(); }
  Eigen::Index dimension() const noexcept { return terms_.front().b.size(); }
  const Term& term(std::size_t g) const { return terms_[g]; }

  double risk(std::size_t g, const Vector& theta) const {
    const auto& t = terms_[g];
    const double v = theta.dot(t.a * theta) - 2.0 * t.b.dot(theta) + t.c;
    return std::max(v, 0.0);
  }

  Vector gradient(std::size_t g, const Vector& theta) const {
    const auto& t = terms_[g];
    return 2.0 * (t.a * theta - t.b);
  }

  Matrix hessian(std::size_t g, const Vector&) const { return 2.0 * terms_[g].a; }

  Vector minimize_weighted(std::span<const double> w, double radius) const {
    detail::require_same_size(terms_.size(), w.size(), "minimize_weighted");
    const Eigen::Index d = dimension();
    Matrix a = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    for (std::size_t g = 0; g < terms_.size(); ++g) {
      a += w[g] * terms_[g].a;
      b += w[g] * terms_[g].b;
    }
    return minimize_quadratic_on_ball(a, b, radius).theta;
  }

 private:
  std::vector<Term> terms_;
};

/// Per-group affine transform c_g·R_g + a_g of another risk family (c_g > 0).
template <GroupRiskFunction F>
class AffineTransformedRisks {
 public:
  AffineTransformedRisks(F base, std::vector<double> scale, std::vector<double> shift)
      : base_(std::move(base)), scale_(std::move(scale)), shift_(std::move(shift)) {
    detail::require_same_size(base_.group_count(), scale_.size(), "AffineTransformedRisks scale");
    detail::require_same_size(base_.group_count(), shift_.size(), "AffineTransformedRisks shift");
    for (double c : scale_)
      if (!(c > 0.0)) throw PreconditionError("AffineTransformedRisks: scales must be positive");
  }

  std::size_t group_count() const { return base_.group_count(); }
  Eigen::Index dimension() const { return base_.dimension(); }
  double risk(std::size_t g, const Vector& theta) const {
    return scale_[g] * base_.risk(g, theta) + shift_[g];
  }
  Vector gradient(std::size_t g, const Vector& theta) const {
    return scale_[g] * base_.gradient(g, theta);
  }
  Matrix hessian(std::size_t g, const Vector& theta) const
    requires HessianRiskFunction<F>
  {
    return scale_[g] * base_.hessian(g, theta);
  }

  Vector minimize_weighted(std::span<const double> w, double radius) const
    requires ExactWeightedMinimizer<F>
  {
    std::vector<double> scaled(w.begin(), w.end());
    for (std::size_t g = 0; g < scaled.size(); ++g) scaled[g] *= scale_[g];
    return base_.minimize_weighted(scaled, radius);
  }

  BargainingFrame transform(const BargainingFrame& frame) const {
    std::vector<double> b(frame.size()), i(frame.size());
    for (std::size_t g = 0; g < frame.size(); ++g) {
      b[g] = scale_[g] * frame.baseline(g) + shift_[g];
      i[g] = scale_[g] * frame.ideal(g) + shift_[g];
    }
    return BargainingFrame(std::move(b), std::move(i));
  }

 private:
  F base_;
  std::vector<double> scale_;
  std::vector<double> shift_;
};

// ---------------------------------------------------------------------------
// Population linear-Gaussian model
// ---------------------------------------------------------------------------

struct GroupLinearModel {
  Vector beta;
  double sigma2 = 1.0;
  Matrix cov;

  void validate() const {
    if (cov.rows() != beta.size() || cov.cols() != beta.size())
      throw DimensionError("GroupLinearModel: covariance shape does not match beta");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw PreconditionError("GroupLinearModel: sigma2 must be positive");
    if (!is_symmetric(cov, 1e-10)) throw PreconditionError("GroupLinearModel: covariance not symmetric");
    if (beta.size() > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < -1e-10)
        throw PreconditionError("GroupLinearModel: covariance not positive semidefinite");
    }
  }

  /// ‖β‖²_Σ, the risk reduction available from the zero predictor.
  double signal() const { return beta.dot(cov * beta); }
};

/// Groups sharing a parameter ball {‖θ‖ ≤ radius}; the baseline is θ = 0.
struct ProblemSpec {
  std::vector<GroupLinearModel> groups;
  double radius = 1.0;

  std::size_t group_count() const noexcept { return groups.size(); }
  Eigen::Index dimension() const { return groups.empty() ? 0 : groups.front().beta.size(); }

  void validate() const {
    if (groups.size() < 2) throw PreconditionError("ProblemSpec: at least two groups required");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw PreconditionError("ProblemSpec: radius must be positive and finite");
    const Eigen::Index d = dimension();
    if (d < 1) throw DimensionError("ProblemSpec: dimension must be >= 1");
    for (const auto& g : groups) {
      if (g.beta.size() != d) throw DimensionError("ProblemSpec: groups disagree on dimension");
      g.validate();
    }
  }
};

/// R_g(θ) = (θ−β_g)ᵀΣ_g(θ−β_g) + σ_g² as quadratic terms.
inline QuadraticGroupRisks population_risks(const ProblemSpec& spec) {
  spec.validate();
  std::vector<QuadraticGroupRisks::Term> terms;
  terms.reserve(spec.groups.size());
  for (const auto& g : spec.groups) {
    const Matrix a = 0.5 * (g.cov + g.cov.transpose());
    terms.push_back({a, a * g.beta, g.signal() + g.sigma2});
  }
  return QuadraticGroupRisks(std::move(terms));
}

inline RiskProfile population_risk(const ProblemSpec& spec, const Vector& theta) {
  if (theta.size() != spec.dimension()) throw DimensionError("population_risk: parameter dimension mismatch");
  std::vector<double> r(spec.groups.size());
  for (std::size_t g = 0; g < r.size(); ++g) {
    const auto& m = spec.groups[g];
    const Vector diff = theta - m.beta;
    r[g] = diff.dot(m.cov * diff) + m.sigma2;
  }
  return RiskProfile(std::move(r));
}

inline BargainingFrame population_frame(const ProblemSpec& spec) {
  spec.validate();
  std::vector<double> baseline(spec.groups.size()), ideal(spec.groups.size());
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& m = spec.groups[g];
    baseline[g] = m.signal() + m.sigma2;
    if (m.beta.norm() <= spec.radius) {
      ideal[g] = m.sigma2;
    } else {
      const Matrix a = 0.5 * (m.cov + m.cov.transpose());
      const Vector theta = minimize_quadratic_on_ball(a, a * m.beta, spec.radius).theta;
      const Vector diff = theta - m.beta;
      ideal[g] = diff.dot(a * diff) + m.sigma2;
    }
  }
  return BargainingFrame(std::move(baseline), std::move(ideal));
}

// ---------------------------------------------------------------------------
// Empirical data
// ---------------------------------------------------------------------------

enum class LossKind { squared, logistic };
enum class KernelKind { gaussian, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double bandwidth = 1.0;
  double norm_bound = 1.0;  // R in ‖f‖_H ≤ R

  void validate() const {
    if (kind == KernelKind::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
      throw PreconditionError("KernelSpec: bandwidth must be positive");
    if (!(norm_bound > 0.0 && std::isfinite(norm_bound))) throw PreconditionError("KernelSpec: norm bound must be positive");
  }

  double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const {
    if (kind == KernelKind::linear) return a.dot(b);
    return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
  }
};

struct GroupSamples {
  Matrix x;  // n_g × d
  Vector y;  // n_g
};

struct GroupedDataset {
  std::vector<GroupSamples> groups;
  LossKind loss = LossKind::squared;
  std::optional<KernelSpec> kernel;
  std::vector<std::string> labels;  // group labels in first-appearance order
  double y_offset = 0.0;            // pooled mean removed from y at ingestion
  double radius = std::numeric_limits<double>::infinity();  // parameter ball for linear predictors

  std::size_t group_count() const noexcept { return groups.size(); }
  Eigen::Index dimension() const { return groups.empty() ? 0 : groups.front().x.cols(); }

  void validate() const {
    if (groups.empty()) throw EmptySetError("GroupedDataset: no groups");
    const Eigen::Index d = dimension();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& s = groups[g];
      if (s.x.rows() == 0) throw EmptySetError(detail::format_index("GroupedDataset: empty group", g));
      if (s.x.cols() != d) throw DimensionError("GroupedDataset: feature dimension differs across groups");
      if (s.y.size() != s.x.rows()) throw DimensionError("GroupedDataset: label count mismatch");
      if (loss == LossKind::logistic) {
        for (Eigen::Index i = 0; i < s.y.size(); ++i)
          if (s.y(i) != 0.0 && s.y(i) != 1.0)
            throw PreconditionError(detail::format_index("GroupedDataset: logistic labels must be 0/1", g));
      }
    }
    if (kernel) kernel->validate();
    if (kernel && loss != LossKind::squared)
      throw PreconditionError("GroupedDataset: kernel predictors support squared loss only");
    if (!(radius > 0.0)) throw PreconditionError("GroupedDataset: radius must be positive");
  }

  /// Overall label mean (π₀ for classification).
  double pooled_label_mean() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
      s += g.y.sum();
      n += static_cast<std::size_t>(g.y.size());
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
  }
};

/// Constant prediction (a probability under logistic loss).
struct ConstantPredictor {
  double value = 0.0;
};

/// f(x) = Σ αᵢ k(cᵢ, x).
struct KernelExpansion {
  Matrix centers;
  Vector alpha;
  KernelSpec kernel;

  double operator()(const Eigen::Ref<const Vector>& x) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < centers.rows(); ++i) s += alpha(i) * kernel(centers.row(i).transpose(), x);
    return s;
  }

  double rkhs_norm() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < centers.rows(); ++i)
      for (Eigen::Index j = 0; j < centers.rows(); ++j)
        s += alpha(i) * alpha(j) * kernel(centers.row(i).transpose(), centers.row(j).transpose());
    return std::sqrt(std::max(s, 0.0));
  }
};

using Predictor = std::variant<Vector, ConstantPredictor, KernelExpansion>;

namespace detail {

/// log(1 + eᶻ) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logistic_loss(double y, double z) { return softplus(z) - y * z; }

inline Matrix kernel_matrix(const KernelSpec& k, const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = k(a.row(i).transpose(), b.row(j).transpose());
  return out;
}

template <class Score>
double mean_loss(const GroupSamples& s, LossKind loss, Score&& score) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    const double z = score(i);
    total += loss == LossKind::squared ? (s.y(i) - z) * (s.y(i) - z) : logistic_loss(s.y(i), z);
  }
  return total / static_cast<double>(s.x.rows());
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace detail

/// Per-group sample mean of the loss.
inline RiskProfile empirical_risk(const GroupedDataset& ds, const Predictor& predictor) {
  ds.validate();
  std::vector<double> risks(ds.groups.size());
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    const auto& s = ds.groups[g];
    risks[g] = std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Vector>) {
            if (p.size() != s.x.cols()) throw DimensionError("empirical_risk: parameter dimension mismatch");
            const Vector z = s.x * p;
            return detail::mean_loss(s, ds.loss, [&](Eigen::Index i) { return z(i); });
          } else if constexpr (std::is_same_v<T, ConstantPredictor>) {
            if (ds.loss == LossKind::logistic) {
              if (!(p.value > 0.0 && p.value < 1.0))
                throw PreconditionError("empirical_risk: constant probability must lie in (0,1)");
              const double z = detail::logit(p.value);
              return detail::mean_loss(s, ds.loss, [&](Eigen::Index) { return z; });
            }
            return detail::mean_loss(s, ds.loss, [&](Eigen::Index) { return p.value; });
          } else {
            if (p.centers.cols() != s.x.cols()) throw DimensionError("empirical_risk: kernel center dimension mismatch");
            return detail::mean_loss(s, ds.loss, [&](Eigen::Index i) { return p(s.x.row(i).transpose()); });
          }
        },
        predictor);
  }
  return RiskProfile(std::move(risks));
}

/// Empirical squared-loss risks as exact quadratics from sufficient statistics.
inline QuadraticGroupRisks empirical_squared_risks(const GroupedDataset& ds) {
  ds.validate();
  if (ds.loss != LossKind::squared) throw PreconditionError("empirical_squared_risks: squared loss required");
  std::vector<QuadraticGroupRisks::Term> terms;
  for (const auto& s : ds.groups) {
    const double n = static_cast<double>(s.x.rows());
    terms.push_back({s.x.transpose() * s.x / n, s.x.transpose() * s.y / n, s.y.squaredNorm() / n});
  }
  return QuadraticGroupRisks(std::move(terms));
}

/// Mean logistic loss log(1 + e^{θᵀx}) − y·θᵀx per group.
class LogisticGroupRisks {
 public:
  explicit LogisticGroupRisks(const GroupedDataset& ds) : groups_(ds.groups) {
    ds.validate();
    if (ds.loss != LossKind::logistic) throw PreconditionError("LogisticGroupRisks: logistic loss required");
  }

  std::size_t group_count() const noexcept { return groups_.size(); }
  Eigen::Index dimension() const { return groups_.front().x.cols(); }

  double risk(std::size_t g, const Vector& theta) const {
    const auto& s = groups_[g];
    const Vector z = s.x * theta;
    return detail::mean_loss(s, LossKind::logistic, [&](Eigen::Index i) { return z(i); });
  }

  Vector gradient(std::size_t g, const Vector& theta) const {
    const auto& s = groups_[g];
    const Vector z = s.x * theta;
    Vector resid(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) resid(i) = detail::sigmoid(z(i)) - s.y(i);
    return s.x.transpose() * resid / static_cast<double>(s.x.rows());
  }

  Matrix hessian(std::size_t g, const Vector& theta) const {
    const auto& s = groups_[g];
    const Vector z = s.x * theta;
    Vector w(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = detail::sigmoid(z(i));
      w(i) = p * (1.0 - p);
    }
    return s.x.transpose() * w.asDiagonal() * s.x / static_cast<double>(s.x.rows());
  }

 private:
  std::vector<GroupSamples> groups_;
};

// ---------------------------------------------------------------------------
// Group-optimal fits
// ---------------------------------------------------------------------------

struct GroupFit {
  Predictor predictor;
  double risk = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline GroupFit fit_squared_linear(const GroupSamples& s, double radius) {
  const double n = static_cast<double>(s.x.rows());
  Vector theta;
  if (std::isfinite(radius)) {
    const Matrix a = s.x.transpose() * s.x / n;
    theta = minimize_quadratic_on_ball(a, s.x.transpose() * s.y / n, radius).theta;
  } else {
    theta = least_squares(s.x, s.y);
  }
  const double risk = (s.y - s.x * theta).squaredNorm() / n;
  return {Predictor(theta), risk, 1};
}

inline GroupFit fit_logistic(const GroupSamples& s, double radius) {
  GroupedDataset one;
  one.groups = {s};
  one.loss = LossKind::logistic;
  const LogisticGroupRisks f(one);
  const Eigen::Index d = s.x.cols();
  Vector theta = Vector::Zero(d);
  double value = f.risk(0, theta);
  constexpr std::size_t kMaxIters = 20000;
  constexpr double kTol = 1e-8;
  double step = 1.0;
  auto stationarity = [&](const Vector& th, const Vector& grad) {
    return (th - project_to_ball(th - grad, radius)).norm();
  };
  for (std::size_t it = 1; it <= kMaxIters; ++it) {
    const Vector grad = f.gradient(0, theta);
    const double res = stationarity(theta, grad);
    if (res <= kTol) return {Predictor(theta), value, it};
    const bool on_boundary = theta.norm() >= radius * (1.0 - 1e-12);
    Vector candidate;
    bool accepted = false;
    if (!on_boundary) {
      const Matrix h = f.hessian(0, theta) + 1e-12 * Matrix::Identity(d, d);
      const Vector dir = -h.ldlt().solve(grad);
      for (double t = 1.0; t > 1e-12 && !accepted; t *= 0.5) {
        candidate = project_to_ball(theta + t * dir, radius);
        const double v = f.risk(0, candidate);
        if (v <= value + 1e-4 * grad.dot(candidate - theta)) {
          theta = candidate;
          value = v;
          accepted = true;
        }
      }
    }
    if (!accepted) {
      // projected gradient with backtracking
      step = std::min(step * 2.0, 1e6);
      for (; step > 1e-14; step *= 0.5) {
        candidate = project_to_ball(theta - step * grad, radius);
        const double v = f.risk(0, candidate);
        const Vector diff = candidate - theta;
        if (v <= value + grad.dot(diff) + diff.squaredNorm() / (2.0 * step)) {
          theta = candidate;
          value = v;
          accepted = true;
          break;
        }
      }
      if (!accepted) throw ConvergenceError("fit_group_optimal: logistic line search failed", res);
    }
  }
  const double res = stationarity(theta, f.gradient(0, theta));
  if (res <= kTol) return {Predictor(theta), value, kMaxIters};
  throw ConvergenceError("fit_group_optimal: logistic Newton did not converge (residual " +
                             std::to_string(res) + ")",
                         res);
}

/// min (1/n)‖y − Kα‖² s.t. αᵀKα ≤ R²: accelerated projected gradient in the RKHS
/// metric, where the ball projection is a rescaling of α. Terminates on the
/// linearization gap ⟨∇F, f⟩ + R‖∇F‖_H.
inline GroupFit fit_kernel(const GroupSamples& s, const KernelSpec& k) {
  const Eigen::Index n = s.x.rows();
  const double nn = static_cast<double>(n);
  const Matrix kmat = detail::kernel_matrix(k, s.x, s.x);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kmat, Eigen::EigenvaluesOnly);
  const double lmax = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  const double lipschitz = 2.0 * lmax / nn;
  const double r = k.norm_bound;

  auto objective = [&](const Vector& fitted) { return (s.y - fitted).squaredNorm() / nn; };
  auto project = [&](Vector& alpha, Vector& fitted) {
    const double sq = alpha.dot(fitted);
    if (sq > r * r) {
      const double scale = r / std::sqrt(sq);
      alpha *= scale;
      fitted *= scale;
    }
  };

  Vector alpha = Vector::Zero(n), fitted = Vector::Zero(n);
  Vector prev_alpha = alpha, prev_fitted = fitted;
  double t = 1.0;
  double best_value = objective(fitted);
  constexpr std::size_t kMaxIters = 200000;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= kMaxIters; ++it) {
    // certificate at the current iterate
    const Vector grad = 2.0 / nn * (fitted - s.y);  // α-coordinates of ∇F
    const Vector kgrad = kmat * grad;
    const double inner = grad.dot(fitted);                       // ⟨∇F, f⟩_H
    const double gnorm = std::sqrt(std::max(grad.dot(kgrad), 0.0));  // ‖∇F‖_H
    gap = inner + r * gnorm;
    const double value = objective(fitted);
    if (gap <= 1e-10 * std::max(1.0, value))
      return {Predictor(KernelExpansion{s.x, alpha, k}), value, it};

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    Vector ya = alpha + mom * (alpha - prev_alpha);
    Vector yf = fitted + mom * (fitted - prev_fitted);
    const Vector ygrad = 2.0 / nn * (yf - s.y);
    Vector na = ya - ygrad / lipschitz;
    Vector nf = yf - kmat * ygrad / lipschitz;
    project(na, nf);
    prev_alpha = alpha;
    prev_fitted = fitted;
    alpha = std::move(na);
    fitted = std::move(nf);
    t = t_next;
    const double nv = objective(fitted);
    if (nv > best_value) {  // adaptive restart
      t = 1.0;
      prev_alpha = alpha;
      prev_fitted = fitted;
    }
    best_value = std::min(best_value, nv);
  }
  throw ConvergenceError("fit_group_optimal: kernel fit did not converge (gap " + std::to_string(gap) + ")", gap);
}

}  // namespace detail

/// Risk minimizer for one group within the predictor class.
inline GroupFit fit_group_optimal(const GroupedDataset& ds, std::size_t group) {
  ds.validate();
  if (group >= ds.groups.size()) throw DimensionError("fit_group_optimal: group index out of range");
  const auto& s = ds.groups[group];
  if (ds.kernel) return detail::fit_kernel(s, *ds.kernel);
  if (ds.loss == LossKind::logistic) {
    if (!std::isfinite(ds.radius)) {
      const bool has0 = (s.y.array() == 0.0).any();
      const bool has1 = (s.y.array() == 1.0).any();
      if (!(has0 && has1))
        throw PreconditionError("fit_group_optimal: logistic fit needs both labels or a bounded ball");
    }
    return detail::fit_logistic(s, ds.radius);
  }
  return detail::fit_squared_linear(s, ds.radius);
}

/// Zero predictor for regression (labels are centered at ingestion), the pooled
/// label mean for classification.
inline Predictor default_baseline(const GroupedDataset& ds) {
  if (ds.loss == LossKind::logistic) return ConstantPredictor{ds.pooled_label_mean()};
  return ConstantPredictor{0.0};
}

inline BargainingFrame empirical_frame(const GroupedDataset& ds, const Predictor& baseline) {
  const RiskProfile base = empirical_risk(ds, baseline);
  std::vector<double> ideal(ds.groups.size());
  for (std::size_t g = 0; g < ideal.size(); ++g) ideal[g] = fit_group_optimal(ds, g).risk;
  return BargainingFrame(base.vector(), std::move(ideal));
}

inline BargainingFrame empirical_frame(const GroupedDataset& ds) { return empirical_frame(ds, default_baseline(ds)); }

// ---------------------------------------------------------------------------
// Kernel linearization
// ---------------------------------------------------------------------------

/// Exact finite-dimensional coordinates of span{k(xᵢ,·)} over the pooled sample:
/// K = ΦΦᵀ with Φ = UΛ^{1/2}, so f = Σαᵢk(xᵢ,·) has θ = Λ^{1/2}Uᵀα with ‖θ‖ = ‖f‖_H.
struct KernelBasis {
  Matrix centers;
  Matrix alpha_from_theta;  // α = U Λ^{-1/2} θ
  KernelSpec kernel;

  KernelExpansion expansion(const Vector& theta) const {
    return KernelExpansion{centers, alpha_from_theta * theta, kernel};
  }
};

struct LinearizedKernelData {
  GroupedDataset features;  // linear squared-loss dataset in θ-coordinates
  KernelBasis basis;
};

inline LinearizedKernelData linearize_kernel(const GroupedDataset& ds) {
  ds.validate();
  if (!ds.kernel) throw PreconditionError("linearize_kernel: dataset has no kernel");
  Eigen::Index n = 0;
  for (const auto& g : ds.groups) n += g.x.rows();
  Matrix pooled(n, ds.dimension());
  Eigen::Index row = 0;
  for (const auto& g : ds.groups) {
    pooled.middleRows(row, g.x.rows()) = g.x;
    row += g.x.rows();
  }
  const Matrix kmat = detail::kernel_matrix(*ds.kernel, pooled, pooled);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kmat);
  const Vector lam = eig.eigenvalues();
  const double cutoff = kPseudoInverseCutoff * std::max(lam.maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > cutoff && lam(i) > 0.0) keep.push_back(i);
  const auto r = static_cast<Eigen::Index>(keep.size());
  Matrix phi(n, r), back(n, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const double l = lam(keep[static_cast<std::size_t>(j)]);
    phi.col(j) = eig.eigenvectors().col(keep[static_cast<std::size_t>(j)]) * std::sqrt(l);
    back.col(j) = eig.eigenvectors().col(keep[static_cast<std::size_t>(j)]) / std::sqrt(l);
  }
  LinearizedKernelData out;
  out.features = ds;
  out.features.kernel.reset();
  out.features.radius = ds.kernel->norm_bound;
  row = 0;
  for (auto& g : out.features.groups) {
    const Eigen::Index ng = g.x.rows();
    g.x = phi.middleRows(row, ng);
    row += ng;
  }
  out.basis = KernelBasis{pooled, back, *ds.kernel};
  return out;
}

// ---------------------------------------------------------------------------
// Sampling from the linear-Gaussian model
// ---------------------------------------------------------------------------

/// Draws n rows per group: X ~ N(0, Σ_g), Y = β_gᵀX + ε, ε ~ N(0, σ_g²).
inline GroupedDataset draw_dataset(const ProblemSpec& spec, std::size_t n_per_group, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GroupedDataset ds;
  ds.loss = LossKind::squared;
  ds.radius = spec.radius;
  const Eigen::Index d = spec.dimension();
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& m = spec.groups[g];
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m.cov + m.cov.transpose()));
    const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    GroupSamples s;
    s.x.resize(static_cast<Eigen::Index>(n_per_group), d);
    s.y.resize(static_cast<Eigen::Index>(n_per_group));
    const double sd = std::sqrt(m.sigma2);
    Vector z(d);
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
      s.x.row(i) = (root * z).transpose();
      s.y(i) = s.x.row(i).dot(m.beta) + sd * normal(rng);
    }
    ds.groups.push_back(std::move(s));
    ds.labels.push_back("g" + std::to_string(g + 1));
  }
  return ds;
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_RISK_MODELS_HPP
