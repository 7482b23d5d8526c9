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

#ifndef FAIRBARGAIN_ORACLE_HPP
#define FAIRBARGAIN_ORACLE_HPP

#include "fairbargain/discrete.hpp"
#include "fairbargain/geometry.hpp"
#include "fairbargain/solvers.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace fairbargain {

/// Lattice {h·k : k ∈ ℤ^d} restricted to the ball. Throws when more than
/// `max_points` candidates would be enumerated.
template <GroupRiskFunction F>
RiskSample sample_lattice(const F& f, double radius, double step, std::size_t max_points = 20'000'000) {
  if (!(step > 0.0) || !(radius > 0.0)) throw PreconditionError("sample_lattice: step and radius must be positive");
  const Eigen::Index d = f.dimension();
  const auto k = static_cast<long long>(std::floor(radius / step * (1.0 + 1e-12)));
  const double per_axis = 2.0 * static_cast<double>(k) + 1.0;
  if (std::pow(per_axis, static_cast<double>(d)) > 4.0 * static_cast<double>(max_points))
    throw PreconditionError("sample_lattice: grid too fine for the parameter dimension");
  RiskSample s;
  s.group_count = f.group_count();
  s.dimension = d;
  s.grid_step = step;
  std::vector<long long> idx(static_cast<std::size_t>(d), -k);
  Vector theta(d);
  const double r2 = radius * radius * (1.0 + 1e-12);
  while (true) {
    for (Eigen::Index j = 0; j < d; ++j) theta(j) = step * static_cast<double>(idx[static_cast<std::size_t>(j)]);
    if (theta.squaredNorm() <= r2) {
      if (s.size() >= max_points) throw PreconditionError("sample_lattice: point budget exceeded");
      s.thetas.insert(s.thetas.end(), theta.data(), theta.data() + d);
      for (std::size_t g = 0; g < s.group_count; ++g) s.risks.push_back(f.risk(g, theta));
    }
    std::size_t j = 0;
    while (j < idx.size() && ++idx[j] > k) idx[j++] = -k;
    if (j == idx.size()) break;
  }
  return s;
}

struct OracleChoice {
  Vector theta;
  DiscreteChoice choice;
  double objective = 0.0;  // same units as SolverReport::objective_value
};

/// Discrete counterpart of `solve(c, ...)` over an enumerated sample.
template <GroupRiskFunction F>
OracleChoice oracle_solve(Criterion c, const F& f, const BargainingFrame& frame, const RiskSample& sample) {
  const DiscreteFeasibleSet set(sample.group_count, sample.risks, frame);
  OracleChoice out;
  switch (c) {
    case Criterion::ri: out.choice = ks_maximin(set); break;
    case Criterion::leximin: out.choice = leximin(set); break;
    case Criterion::gdro: out.choice = gdro(set); break;
    case Criterion::mmv: out.choice = mmv(set); break;
    case Criterion::mmr: out.choice = mmr(set); break;
    case Criterion::nash: out.choice = nash(set); break;
  }
  out.theta = sample.theta(out.choice.index);
  out.objective = criterion_value(c, f, frame, out.theta);
  return out;
}

template <GroupRiskFunction F>
OracleChoice oracle_solve(Criterion c, const F& f, const BargainingFrame& frame, double radius, double step) {
  return oracle_solve(c, f, frame, sample_lattice(f, radius, step));
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_ORACLE_HPP
