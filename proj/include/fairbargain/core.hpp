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

#ifndef FAIRBARGAIN_CORE_HPP
#define FAIRBARGAIN_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fairbargain {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. Every failure raised by the library derives from Error so the
// CLI can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A group has no room for improvement: baseline risk minus ideal risk is below
/// kMinFrameGap.
class DegenerateFrameError : public Error {
 public:
  using Error::Error;
};

/// No feasible point strictly improves every group over the baseline.
class DegenerateBargainingError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class EmptySetError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Smallest admissible baseline-to-ideal gap, in loss units.
inline constexpr double kMinFrameGap = 1e-10;

namespace detail {

inline std::string format_index(const char* what, std::size_t g) {
  std::ostringstream os;
  os << what << " (group " << g << ")";
  return os.str();
}

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": expected length " << a << ", got " << b;
    throw DimensionError(os.str());
  }
}

}  // namespace detail

/// Expected loss per group.
class RiskProfile {
 public:
  RiskProfile() = default;

  explicit RiskProfile(std::vector<double> risks) : risks_(std::move(risks)) {
    if (risks_.empty()) throw DimensionError("RiskProfile: group count must be >= 1");
    for (std::size_t g = 0; g < risks_.size(); ++g) {
      if (!std::isfinite(risks_[g]) || risks_[g] < 0.0)
        throw PreconditionError(detail::format_index("RiskProfile: risk must be finite and >= 0", g));
    }
  }

  RiskProfile(std::initializer_list<double> risks) : RiskProfile(std::vector<double>(risks)) {}

  std::size_t size() const noexcept { return risks_.size(); }
  double operator[](std::size_t g) const { return risks_[g]; }
  std::span<const double> values() const noexcept { return risks_; }
  const std::vector<double>& vector() const noexcept { return risks_; }

  friend bool operator==(const RiskProfile&, const RiskProfile&) = default;

 private:
  std::vector<double> risks_;
};

/// Relative improvements: 0 at the baseline, 1 at the group's ideal risk.
class ImprovementProfile {
 public:
  ImprovementProfile() = default;

  explicit ImprovementProfile(std::vector<double> rhos) : rhos_(std::move(rhos)) {
    if (rhos_.empty()) throw DimensionError("ImprovementProfile: group count must be >= 1");
    for (std::size_t g = 0; g < rhos_.size(); ++g) {
      if (!std::isfinite(rhos_[g]))
        throw PreconditionError(detail::format_index("ImprovementProfile: non-finite entry", g));
    }
  }

  ImprovementProfile(std::initializer_list<double> rhos)
      : ImprovementProfile(std::vector<double>(rhos)) {}

  std::size_t size() const noexcept { return rhos_.size(); }
  double operator[](std::size_t g) const { return rhos_[g]; }
  std::span<const double> values() const noexcept { return rhos_; }
  const std::vector<double>& vector() const noexcept { return rhos_; }

  double min() const { return *std::min_element(rhos_.begin(), rhos_.end()); }

  friend bool operator==(const ImprovementProfile&, const ImprovementProfile&) = default;

 private:
  std::vector<double> rhos_;
};

/// Disagreement (baseline) and ideal risks of a bargaining problem.
class BargainingFrame {
 public:
  BargainingFrame() = default;

  BargainingFrame(std::vector<double> baseline_risks, std::vector<double> ideal_risks)
      : baseline_(std::move(baseline_risks)), ideal_(std::move(ideal_risks)) {
    if (baseline_.empty()) throw DimensionError("BargainingFrame: group count must be >= 1");
    detail::require_same_size(baseline_.size(), ideal_.size(), "BargainingFrame ideal risks");
    for (std::size_t g = 0; g < baseline_.size(); ++g) {
      if (!std::isfinite(baseline_[g]) || !std::isfinite(ideal_[g]))
        throw PreconditionError(detail::format_index("BargainingFrame: non-finite entry", g));
      if (baseline_[g] - ideal_[g] < kMinFrameGap) {
        std::ostringstream os;
        os << "degenerate frame: group " << g << " has baseline risk " << baseline_[g]
           << " and ideal risk " << ideal_[g] << " (no potential for improvement)";
        throw DegenerateFrameError(os.str());
      }
    }
  }

  std::size_t size() const noexcept { return baseline_.size(); }
  const std::vector<double>& baseline_risks() const noexcept { return baseline_; }
  const std::vector<double>& ideal_risks() const noexcept { return ideal_; }
  double baseline(std::size_t g) const { return baseline_[g]; }
  double ideal(std::size_t g) const { return ideal_[g]; }
  double gap(std::size_t g) const { return baseline_[g] - ideal_[g]; }

  /// Smallest per-group improvement potential.
  double min_gap() const {
    double d = gap(0);
    for (std::size_t g = 1; g < size(); ++g) d = std::min(d, gap(g));
    return d;
  }

  double rho(std::size_t g, double risk) const { return (baseline_[g] - risk) / gap(g); }

 private:
  std::vector<double> baseline_;
  std::vector<double> ideal_;
};

struct SolverReport {
  std::string method;
  Vector parameter;
  RiskProfile risk_profile;
  ImprovementProfile improvement_profile;
  // Criterion value in the criterion's own units: min rho for ri/leximin, max risk
  // for gdro, min gain for mmv, max regret for mmr, sum of log gains for nash.
  double objective_value = 0.0;
  std::size_t iterations = 0;
  double certificate_gap = 0.0;
  bool converged = false;
};

inline ImprovementProfile to_improvement(std::span<const double> risks, const BargainingFrame& frame) {
  detail::require_same_size(frame.size(), risks.size(), "to_improvement");
  std::vector<double> rhos(risks.size());
  for (std::size_t g = 0; g < risks.size(); ++g) rhos[g] = frame.rho(g, risks[g]);
  return ImprovementProfile(std::move(rhos));
}

inline ImprovementProfile to_improvement(const RiskProfile& r, const BargainingFrame& frame) {
  return to_improvement(r.values(), frame);
}

inline RiskProfile from_improvement(const ImprovementProfile& rho, const BargainingFrame& frame) {
  detail::require_same_size(frame.size(), rho.size(), "from_improvement");
  std::vector<double> risks(rho.size());
  for (std::size_t g = 0; g < rho.size(); ++g)
    risks[g] = frame.baseline(g) - rho[g] * frame.gap(g);
  return RiskProfile(std::move(risks));
}

// Dominance in risk space (lower is better).
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  bool strict = false;
  for (std::size_t g = 0; g < a.size(); ++g) {
    if (a[g] > b[g]) return false;
    if (a[g] < b[g]) strict = true;
  }
  return strict;
}

/// Every coordinate strictly lower.
inline bool strictly_dominates(std::span<const double> a, std::span<const double> b) {
  for (std::size_t g = 0; g < a.size(); ++g)
    if (!(a[g] < b[g])) return false;
  return true;
}

// Dominance in improvement space (higher is better).
inline bool dominates_upward(std::span<const double> a, std::span<const double> b) {
  bool strict = false;
  for (std::size_t g = 0; g < a.size(); ++g) {
    if (a[g] < b[g]) return false;
    if (a[g] > b[g]) strict = true;
  }
  return strict;
}

/// Pareto-optimal subset in risk space. Exact duplicates are collapsed first;
/// output keeps the order of first appearance.
inline std::vector<RiskProfile> pareto_filter(std::span<const RiskProfile> points) {
  if (points.empty()) throw EmptySetError("pareto_filter: empty input");
  const std::size_t m = points.front().size();
  std::vector<RiskProfile> unique;
  unique.reserve(points.size());
  for (const auto& p : points) {
    detail::require_same_size(m, p.size(), "pareto_filter");
    if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
  }
  std::vector<RiskProfile> front;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < unique.size() && !dominated; ++j)
      dominated = j != i && dominates(unique[j].values(), unique[i].values());
    if (!dominated) front.push_back(unique[i]);
  }
  return front;
}

inline std::vector<RiskProfile> pareto_filter(const std::vector<RiskProfile>& points) {
  return pareto_filter(std::span<const RiskProfile>(points));
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_CORE_HPP
