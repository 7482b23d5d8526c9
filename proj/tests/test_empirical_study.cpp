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

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace fb = fairbargain;

namespace {

const std::vector<std::size_t> kStandardNs{100, 400, 1600, 6400, 25600};

const fb::ConvergenceResult& standard_run() {
  static const auto r = fb::run_convergence(fb::testing::motivating_spec(), kStandardNs, 50, 7);
  return r;
}

TEST(RunConvergence, LargeSampleIsNearPopulationOptimum) {
  const auto spec = fb::testing::motivating_spec();
  const auto ds = fb::draw_dataset(spec, 1000000, 11);
  const auto rep = fb::solve_maximin_ri(fb::empirical_squared_risks(ds), fb::empirical_frame(ds), spec.radius);
  const double value = fb::criterion_value(fb::Criterion::ri, fb::population_risks(spec), fb::population_frame(spec),
                                           rep.parameter);
  EXPECT_LE(56.0 / 81.0 - value, 0.01);
  EXPECT_NEAR(rep.parameter(0), 28.0 / 9.0, 0.05);
}

TEST(RunConvergence, DeterministicForSeed) {
  const auto spec = fb::testing::motivating_spec();
  const auto a = fb::run_convergence(spec, {100, 400}, 20, 99);
  const auto b = fb::run_convergence(spec, {100, 400}, 20, 99);
  EXPECT_EQ(a.gaps, b.gaps);
  EXPECT_EQ(a.frame_errors, b.frame_errors);
  EXPECT_EQ(a.fitted_slope, b.fitted_slope);
  EXPECT_EQ(a.rejected, b.rejected);
  const auto c = fb::run_convergence(spec, {100, 400}, 20, 100);
  EXPECT_NE(a.gaps, c.gaps);
}

TEST(RunConvergence, RateSlopeInBand) {
  const auto& r = standard_run();
  EXPECT_TRUE(r.slope_in_band()) << r.fitted_slope;
  EXPECT_GE(r.fitted_slope, -0.65);
  EXPECT_LE(r.fitted_slope, -0.35);
  EXPECT_NEAR(r.population_value, 56.0 / 81.0, 1e-8);
  EXPECT_EQ(r.trials, 50u);
  EXPECT_EQ(r.sample_sizes, kStandardNs);
}

TEST(RunConvergence, GapsRespectSolverTolerance) {
  for (const auto& row : standard_run().gaps) {
    EXPECT_EQ(row.size(), 50u);
    for (double g : row) EXPECT_GE(g, -1e-5);
  }
}

TEST(RunConvergence, FrameConcentrates) {
  const auto& r = standard_run();
  for (std::size_t i = 0; i + 1 < r.frame_errors.size(); ++i) EXPECT_LT(r.frame_errors[i + 1], r.frame_errors[i]);
  EXPECT_GE(r.frame_slope, -0.65);
  EXPECT_LE(r.frame_slope, -0.35);
}

TEST(RunConvergence, SmallSamplesAreResampled) {
  const auto r = fb::run_convergence(fb::testing::motivating_spec(), {3, 6}, 20, 5);
  EXPECT_GT(r.rejected, 0u);
  EXPECT_EQ(r.gaps.size(), 2u);
}

TEST(RunConvergence, Preconditions) {
  const auto spec = fb::testing::motivating_spec();
  EXPECT_THROW(fb::run_convergence(spec, {100, 400}, 19, 1), fb::PreconditionError);
  EXPECT_THROW(fb::run_convergence(spec, {400, 100}, 20, 1), fb::PreconditionError);
  EXPECT_THROW(fb::run_convergence(spec, {}, 20, 1), fb::PreconditionError);
}

TEST(GapCertificate, StandardRunQuantilesNonIncreasing) {
  const auto cert = fb::gap_certificate(standard_run(), 0.1);
  EXPECT_EQ(cert.quantiles.size(), kStandardNs.size());
  EXPECT_TRUE(cert.non_increasing);
}

TEST(GapCertificate, SingleSampleSizePasses) {
  const auto r = fb::run_convergence(fb::testing::motivating_spec(), {400}, 20, 3);
  EXPECT_TRUE(fb::gap_certificate(r, 0.1).non_increasing);
}

TEST(GapCertificate, ShuffledRowsFail) {
  auto r = standard_run();
  std::reverse(r.gaps.begin(), r.gaps.end());
  EXPECT_FALSE(fb::gap_certificate(r, 0.1).non_increasing);
}

TEST(GapCertificate, QuantileDefinitionAndErrors) {
  fb::ConvergenceResult r;
  r.gaps = {{5, 1, 4, 2, 3, 6, 7, 8, 9, 10}};
  EXPECT_EQ(fb::gap_certificate(r, 0.1).quantiles[0], 9.0);
  EXPECT_EQ(fb::gap_certificate(r, 0.5).quantiles[0], 5.0);
  EXPECT_THROW(fb::gap_certificate(r, 0.0), fb::PreconditionError);
  EXPECT_THROW(fb::gap_certificate(r, 1.0), fb::PreconditionError);
}

TEST(FitRateSlope, RecoversExponentAndClipsNonPositiveGaps) {
  const std::vector<std::size_t> ns{100, 400, 1600};
  std::vector<std::vector<double>> gaps;
  for (auto n : ns) gaps.push_back({3.0 / std::sqrt(static_cast<double>(n))});
  EXPECT_NEAR(fb::fit_rate_slope(ns, gaps), -0.5, 1e-12);
  EXPECT_NEAR(fb::fit_rate_slope({10, 100}, {{-1.0}, {0.0}}), 0.0, 1e-12);
}

TEST(ConvergenceCsv, HeaderAndRows) {
  const auto r = fb::run_convergence(fb::testing::motivating_spec(), {100, 200}, 20, 2);
  std::ostringstream os;
  fb::write_convergence_csv(os, r);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n,trial,gap");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 40u);
}

}  // namespace
