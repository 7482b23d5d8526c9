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

// Shared fixtures for the unit and acceptance suites.

#ifndef FAIRBARGAIN_TESTS_SUPPORT_HPP
#define FAIRBARGAIN_TESTS_SUPPORT_HPP

#include "fairbargain.hpp"

#include <random>
#include <vector>

namespace fairbargain::testing {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) out(r, c++) = v;
    ++r;
  }
  return out;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// β = (2, 7), σ² = (1, 9), unit covariance, radius 10.
inline ProblemSpec motivating_spec(double radius = 10.0) {
  ProblemSpec s;
  s.radius = radius;
  s.groups.push_back({vec({2.0}), 1.0, mat({{1.0}})});
  s.groups.push_back({vec({7.0}), 9.0, mat({{1.0}})});
  return s;
}

/// Two groups on the unit disk: β₁ = (0.4, 0), Σ₁ = [[1, .5], [.5, 1]]; β₂ = (0.4, 0.6), Σ₂ = I.
inline ProblemSpec disk_spec() {
  ProblemSpec s;
  s.radius = 1.0;
  s.groups.push_back({vec({0.4, 0.0}), 1.0, mat({{1.0, 0.5}, {0.5, 1.0}})});
  s.groups.push_back({vec({0.4, 0.6}), 1.0, mat({{1.0, 0.0}, {0.0, 1.0}})});
  return s;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double floor = 0.1) {
  std::normal_distribution<double> n;
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = n(rng);
  return a * a.transpose() / static_cast<double>(d) + floor * Matrix::Identity(d, d);
}

/// Random positive-definite linear-Gaussian spec.
inline ProblemSpec random_spec(std::mt19937_64& rng, std::size_t m, Eigen::Index d, double radius) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.2, 2.0);
  ProblemSpec s;
  s.radius = radius;
  for (std::size_t g = 0; g < m; ++g) {
    Vector beta(d);
    for (Eigen::Index j = 0; j < d; ++j) beta(j) = 1.5 * n(rng);
    s.groups.push_back({beta, u(rng), random_spd(rng, d)});
  }
  return s;
}

inline std::vector<RiskProfile> random_profiles(std::mt19937_64& rng, std::size_t count, std::size_t m, double lo,
                                                double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<RiskProfile> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> r(m);
    for (auto& x : r) x = u(rng);
    out.emplace_back(std::move(r));
  }
  return out;
}

}  // namespace fairbargain::testing

#endif  // FAIRBARGAIN_TESTS_SUPPORT_HPP
