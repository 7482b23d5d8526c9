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

#ifndef FAIRBARGAIN_EMPIRICAL_STUDY_HPP
#define FAIRBARGAIN_EMPIRICAL_STUDY_HPP

#include "fairbargain/core.hpp"
#include "fairbargain/risk_models.hpp"
#include "fairbargain/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

namespace fairbargain {

/// Acceptance band for the log-log slope of median gap against n.
inline constexpr std::pair<double, double> kRateSlopeBand{-0.65, -0.35};
/// Floor applied to clipped gaps before taking logs.
inline constexpr double kGapFloor = 1e-8;

struct ConvergenceResult {
  std::vector<std::size_t> sample_sizes;
  // gaps[i][t]: population ρ-gap of the empirical solution for sample_sizes[i], trial t
  std::vector<std::vector<double>> gaps;
  // median over trials of max_g |empirical frame − population frame| entries
  std::vector<double> frame_errors;
  double fitted_slope = 0.0;
  double frame_slope = 0.0;
  double population_value = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t rejected = 0;  // resampled trials (degenerate or under-gapped empirical frames)

  bool slope_in_band() const { return fitted_slope >= kRateSlopeBand.first && fitted_slope <= kRateSlopeBand.second; }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for (sample-size index, trial, attempt), independent of evaluation order.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t n_index, std::size_t trial, std::size_t attempt) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ static_cast<std::uint64_t>(n_index));
  s = splitmix64(s ^ static_cast<std::uint64_t>(trial));
  return splitmix64(s ^ static_cast<std::uint64_t>(attempt));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace detail

/// Log-log slope of the median clipped gap against n.
inline double fit_rate_slope(const std::vector<std::size_t>& ns, const std::vector<std::vector<double>>& gaps) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> clipped = gaps[i];
    for (double& g : clipped) g = std::max(g, kGapFloor);
    lx.push_back(std::log(static_cast<double>(ns[i])));
    ly.push_back(std::log(detail::median(std::move(clipped))));
  }
  return detail::ls_slope(lx, ly);
}

/// Monte Carlo study of the empirical maximin-RI estimator: for every n and trial,
/// fit on n draws per group and score the fitted parameter under population risks.
inline ConvergenceResult run_convergence(const ProblemSpec& spec, const std::vector<std::size_t>& ns,
                                         std::size_t trials, std::uint64_t seed, SolverConfig cfg = {}) {
  spec.validate();
  if (trials < 20) throw PreconditionError("run_convergence: at least 20 trials required");
  if (ns.empty()) throw PreconditionError("run_convergence: no sample sizes");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw PreconditionError("run_convergence: sample sizes must be strictly increasing");
  cfg.initial.reset();
  cfg.seed = 0;

  const auto pop = population_risks(spec);
  const auto pop_frame = population_frame(spec);
  SolverConfig tight = cfg;
  tight.tol = std::min(cfg.tol, 1e-9);
  const double pop_value = solve_maximin_ri(pop, pop_frame, spec.radius, tight).objective_value;
  const double delta = pop_frame.min_gap();

  ConvergenceResult res;
  res.sample_sizes = ns;
  res.trials = trials;
  res.seed = seed;
  res.population_value = pop_value;
  constexpr std::size_t kMaxAttempts = 1000;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    std::vector<double> gaps(trials), ferr(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      bool done = false;
      for (std::size_t attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
        const auto ds = draw_dataset(spec, ns[ni], detail::trial_seed(seed, ni, t, attempt));
        BargainingFrame frame;
        try {
          frame = empirical_frame(ds);
        } catch (const DegenerateFrameError&) {
          ++res.rejected;
          continue;
        }
        if (!(frame.min_gap() > 0.5 * delta)) {
          ++res.rejected;
          continue;
        }
        const auto rep = solve_maximin_ri(empirical_squared_risks(ds), frame, spec.radius, cfg);
        gaps[t] = pop_value - criterion_value(Criterion::ri, pop, pop_frame, rep.parameter);
        double e = 0.0;
        for (std::size_t g = 0; g < frame.size(); ++g) {
          e = std::max(e, std::abs(frame.baseline(g) - pop_frame.baseline(g)));
          e = std::max(e, std::abs(frame.ideal(g) - pop_frame.ideal(g)));
        }
        ferr[t] = e;
        done = true;
      }
      if (!done) throw DegenerateFrameError("run_convergence: could not draw a nondegenerate empirical frame");
    }
    res.gaps.push_back(std::move(gaps));
    res.frame_errors.push_back(detail::median(std::move(ferr)));
  }
  res.fitted_slope = fit_rate_slope(ns, res.gaps);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(ns[i])));
    ly.push_back(std::log(std::max(res.frame_errors[i], kGapFloor)));
  }
  res.frame_slope = detail::ls_slope(lx, ly);
  return res;
}

struct GapCertificate {
  double delta = 0.0;
  std::vector<double> quantiles;  // per sample size, (1−δ)-quantile of the gaps
  bool non_increasing = true;
};

/// Empirical (1−δ)-quantile of the gaps per n and whether it is non-increasing in n.
inline GapCertificate gap_certificate(const ConvergenceResult& result, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("gap_certificate: delta must lie in (0,1)");
  GapCertificate cert;
  cert.delta = delta;
  for (const auto& row : result.gaps) {
    if (row.empty()) throw EmptySetError("gap_certificate: empty trial row");
    std::vector<double> s = row;
    std::sort(s.begin(), s.end());
    const double pos = std::ceil((1.0 - delta) * static_cast<double>(s.size()));
    const std::size_t idx = std::min(s.size() - 1, static_cast<std::size_t>(std::max(pos, 1.0)) - 1);
    cert.quantiles.push_back(s[idx]);
  }
  for (std::size_t i = 1; i < cert.quantiles.size(); ++i)
    if (cert.quantiles[i] > cert.quantiles[i - 1]) cert.non_increasing = false;
  return cert;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "n,trial,gap\n";
  os.precision(17);
  for (std::size_t i = 0; i < r.sample_sizes.size(); ++i)
    for (std::size_t t = 0; t < r.gaps[i].size(); ++t) os << r.sample_sizes[i] << ',' << t << ',' << r.gaps[i][t] << '\n';
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_EMPIRICAL_STUDY_HPP
