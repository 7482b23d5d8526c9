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

#ifndef FAIRBARGAIN_DISCRETE_HPP
#define FAIRBARGAIN_DISCRETE_HPP

#include "fairbargain/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace fairbargain {

/// A finite set of candidate risk profiles with the frame they are judged in.
/// Points are stored row-major so large enumeration grids stay compact.
class DiscreteFeasibleSet {
 public:
  DiscreteFeasibleSet(std::size_t group_count, std::vector<double> flat_risks, BargainingFrame frame)
      : m_(group_count), flat_(std::move(flat_risks)), frame_(std::move(frame)) {
    validate();
  }

  DiscreteFeasibleSet(const std::vector<RiskProfile>& points, BargainingFrame frame) : frame_(std::move(frame)) {
    if (points.empty()) throw EmptySetError("DiscreteFeasibleSet: no points");
    m_ = points.front().size();
    flat_.reserve(points.size() * m_);
    for (const auto& p : points) {
      detail::require_same_size(m_, p.size(), "DiscreteFeasibleSet point");
      flat_.insert(flat_.end(), p.values().begin(), p.values().end());
    }
    validate();
  }

  std::size_t size() const noexcept { return flat_.size() / m_; }
  std::size_t group_count() const noexcept { return m_; }
  const BargainingFrame& frame() const noexcept { return frame_; }
  std::span<const double> point(std::size_t i) const { return {flat_.data() + i * m_, m_}; }
  RiskProfile profile(std::size_t i) const { return RiskProfile(std::vector<double>(point(i).begin(), point(i).end())); }
  ImprovementProfile improvement(std::size_t i) const { return to_improvement(point(i), frame_); }

 private:
  void validate() const {
    if (m_ == 0 || flat_.empty()) throw EmptySetError("DiscreteFeasibleSet: no points");
    if (flat_.size() % m_ != 0) throw DimensionError("DiscreteFeasibleSet: ragged point storage");
    detail::require_same_size(m_, frame_.size(), "DiscreteFeasibleSet frame");
  }

  std::size_t m_ = 0;
  std::vector<double> flat_;
  BargainingFrame frame_;
};

struct DiscreteChoice {
  std::size_t index = 0;
  RiskProfile risks;
  ImprovementProfile rhos;
};

namespace detail {

/// Sorted ascending utilities, compared lexicographically.
inline std::vector<double> sorted_ascending(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

inline int lex_compare(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  return 0;
}

inline std::vector<double> rho_vector(const DiscreteFeasibleSet& s, std::size_t i) {
  const auto p = s.point(i);
  std::vector<double> out(p.size());
  for (std::size_t g = 0; g < p.size(); ++g) out[g] = s.frame().rho(g, p[g]);
  return out;
}

/// Leximin over utility vectors returned by `utility`, restricted to `eligible`
/// points. Lowest index wins exact ties.
template <class Utility, class Eligible>
std::optional<std::size_t> leximin_index(const DiscreteFeasibleSet& s, Utility&& utility, Eligible&& eligible) {
  std::optional<std::size_t> best;
  std::vector<double> best_key;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!eligible(i)) continue;
    auto key = sorted_ascending(utility(i));
    if (!best || lex_compare(key, best_key) > 0) {
      best = i;
      best_key = std::move(key);
    }
  }
  return best;
}

/// Maximizes a scalar score; exact ties refined by leximin on rho, then lowest index.
template <class Score, class Eligible>
std::optional<std::size_t> argmax_with_leximin(const DiscreteFeasibleSet& s, Score&& score, Eligible&& eligible) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!eligible(i)) continue;
    const double v = score(i);
    if (!any || v > best) {
      best = v;
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return leximin_index(
      s, [&](std::size_t i) { return rho_vector(s, i); },
      [&](std::size_t i) { return eligible(i) && score(i) == best; });
}

inline DiscreteChoice make_choice(const DiscreteFeasibleSet& s, std::size_t i) {
  return {i, s.profile(i), s.improvement(i)};
}

inline auto all_points() {
  return [](std::size_t) { return true; };
}

}  // namespace detail

/// Lexicographically maximal sorted relative-improvement vector.
inline DiscreteChoice leximin(const DiscreteFeasibleSet& s) {
  const auto i = detail::leximin_index(
      s, [&](std::size_t k) { return detail::rho_vector(s, k); }, detail::all_points());
  return detail::make_choice(s, *i);
}

/// Maximizes min_g ρ_g; ties broken by leximin.
inline DiscreteChoice ks_maximin(const DiscreteFeasibleSet& s) {
  const auto i = detail::argmax_with_leximin(
      s,
      [&](std::size_t k) {
        const auto r = detail::rho_vector(s, k);
        return *std::min_element(r.begin(), r.end());
      },
      detail::all_points());
  return detail::make_choice(s, *i);
}

/// Minimizes the worst group risk.
inline DiscreteChoice gdro(const DiscreteFeasibleSet& s) {
  const auto i = detail::argmax_with_leximin(
      s,
      [&](std::size_t k) {
        const auto p = s.point(k);
        return -*std::max_element(p.begin(), p.end());
      },
      detail::all_points());
  return detail::make_choice(s, *i);
}

/// Maximizes the smallest absolute risk reduction from the baseline.
inline DiscreteChoice mmv(const DiscreteFeasibleSet& s) {
  const auto& f = s.frame();
  const auto i = detail::argmax_with_leximin(
      s,
      [&](std::size_t k) {
        const auto p = s.point(k);
        double v = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < p.size(); ++g) v = std::min(v, f.baseline(g) - p[g]);
        return v;
      },
      detail::all_points());
  return detail::make_choice(s, *i);
}

/// Minimizes the worst regret against each group's ideal risk.
inline DiscreteChoice mmr(const DiscreteFeasibleSet& s) {
  const auto& f = s.frame();
  const auto i = detail::argmax_with_leximin(
      s,
      [&](std::size_t k) {
        const auto p = s.point(k);
        double v = -std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < p.size(); ++g) v = std::max(v, p[g] - f.ideal(g));
        return -v;
      },
      detail::all_points());
  return detail::make_choice(s, *i);
}

/// Maximizes the product of gains among points improving every group.
inline DiscreteChoice nash(const DiscreteFeasibleSet& s) {
  const auto& f = s.frame();
  auto improves_all = [&](std::size_t k) {
    const auto p = s.point(k);
    for (std::size_t g = 0; g < p.size(); ++g)
      if (!(f.baseline(g) - p[g] > 0.0)) return false;
    return true;
  };
  const auto i = detail::argmax_with_leximin(
      s,
      [&](std::size_t k) {
        const auto p = s.point(k);
        double v = 0.0;
        for (std::size_t g = 0; g < p.size(); ++g) v += std::log(f.baseline(g) - p[g]);
        return v;
      },
      improves_all);
  if (!i) throw DegenerateBargainingError("nash: no candidate improves every group over the baseline");
  return detail::make_choice(s, *i);
}

/// Leximin on absolute gains from the baseline.
inline DiscreteChoice egalitarian(const DiscreteFeasibleSet& s) {
  const auto& f = s.frame();
  const auto i = detail::leximin_index(
      s,
      [&](std::size_t k) {
        const auto p = s.point(k);
        std::vector<double> gains(p.size());
        for (std::size_t g = 0; g < p.size(); ++g) gains[g] = f.baseline(g) - p[g];
        return gains;
      },
      detail::all_points());
  return detail::make_choice(s, *i);
}

/// Minimax regret refined lexicographically on the regrets themselves.
inline DiscreteChoice equal_loss(const DiscreteFeasibleSet& s) {
  const auto& f = s.frame();
  const auto i = detail::leximin_index(
      s,
      [&](std::size_t k) {
        const auto p = s.point(k);
        std::vector<double> neg_regret(p.size());
        for (std::size_t g = 0; g < p.size(); ++g) neg_regret[g] = f.ideal(g) - p[g];
        return neg_regret;
      },
      detail::all_points());
  return detail::make_choice(s, *i);
}

/// Leximin over the d-comprehensive closure of the set.
///
/// The closure {y : x ≤ y ≤ baseline for some x in S with x ≤ baseline} is
/// represented by the corners of every such box, appended after the original
/// points; the winner over the augmented candidates must be an original point
/// and must agree with leximin(s).
inline DiscreteChoice comprehensive_closure_leximin(const DiscreteFeasibleSet& s) {
  const auto& f = s.frame();
  const std::size_t m = s.group_count();
  bool has_baseline = false;
  for (std::size_t i = 0; i < s.size() && !has_baseline; ++i) {
    const auto p = s.point(i);
    has_baseline = std::equal(p.begin(), p.end(), f.baseline_risks().begin());
  }
  if (!has_baseline)
    throw PreconditionError("comprehensive_closure_leximin: the baseline risk vector must be a member of the set");
  if (m > 20) throw DimensionError("comprehensive_closure_leximin: too many groups for corner enumeration");

  std::vector<double> flat;
  flat.reserve(s.size() * m);
  for (std::size_t i = 0; i < s.size(); ++i) flat.insert(flat.end(), s.point(i).begin(), s.point(i).end());
  const std::size_t corners = std::size_t{1} << m;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto p = s.point(i);
    bool inside = true;
    for (std::size_t g = 0; g < m; ++g) inside = inside && p[g] <= f.baseline(g);
    if (!inside) continue;
    for (std::size_t mask = 1; mask < corners; ++mask) {
      for (std::size_t g = 0; g < m; ++g) flat.push_back((mask >> g) & 1U ? f.baseline(g) : p[g]);
    }
  }
  const DiscreteFeasibleSet closure(m, std::move(flat), f);
  const auto on_closure = leximin(closure);
  const auto plain = leximin(s);
  if (on_closure.index >= s.size() || on_closure.index != plain.index)
    throw Error("comprehensive_closure_leximin: closure winner differs from the leximin winner");
  return plain;
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_DISCRETE_HPP
