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
#include <random>

namespace fb = fairbargain;
using fb::Vector;
using fb::testing::mat;
using fb::testing::vec;

namespace {

/// Euclidean distance from q to the polyline through the trace points.
double distance_to_trace(const fb::FrontierTrace& t, double x, double y) {
  double best = std::numeric_limits<double>::infinity();
  const auto& p = t.points;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double ax = p[i].rho1, ay = p[i].rho2, bx = p[i + 1].rho1, by = p[i + 1].rho2;
    const double len2 = (bx - ax) * (bx - ax) + (by - ay) * (by - ay);
    double s = len2 > 0 ? ((x - ax) * (bx - ax) + (y - ay) * (by - ay)) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    best = std::min(best, std::hypot(x - ax - s * (bx - ax), y - ay - s * (by - ay)));
  }
  if (p.size() == 1) best = std::hypot(x - p[0].rho1, y - p[0].rho2);
  return best;
}

fb::RiskSample manual_sample(const std::vector<std::array<double, 2>>& pts) {
  fb::RiskSample s;
  s.group_count = 2;
  s.dimension = 1;
  for (const auto& p : pts) {
    s.thetas.push_back(0.0);
    s.risks.push_back(p[0]);
    s.risks.push_back(p[1]);
  }
  return s;
}

TEST(SampleRiskSet, DiskMinimaReachIdealRisks) {
  const auto sample = fb::sample_risk_set(fb::testing::disk_spec(), 201);
  ASSERT_EQ(sample.size(), 201u * 201u);
  for (std::size_t g = 0; g < 2; ++g) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sample.size(); ++i) lo = std::min(lo, sample.risk(i)[g]);
    EXPECT_NEAR(lo, 1.0, 1e-3);
  }
  for (std::size_t i = 0; i < sample.size(); ++i) EXPECT_LE(sample.theta(i).norm(), 1.0 + 1e-12);
}

TEST(SampleRiskSet, TinyBallCollapsesToBaseline) {
  auto spec = fb::testing::disk_spec();
  spec.radius = 1e-9;
  const auto frame = fb::population_frame(fb::testing::disk_spec());
  const auto sample = fb::sample_risk_set(spec, 11);
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t g = 0; g < 2; ++g) EXPECT_NEAR(sample.risk(i)[g], frame.baseline(g), 1e-7);
}

TEST(SampleRiskSet, MotivatingRegretScan) {
  auto spec = fb::testing::motivating_spec(8.0);
  const auto frame = fb::population_frame(fb::testing::motivating_spec());
  const auto sample = fb::sample_risk_set(spec, 16001);  // step 1e-3 over [−8, 8]
  EXPECT_NEAR(sample.grid_step, 1e-3, 1e-15);
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double regret = std::max(sample.risk(i)[0] - frame.ideal(0), sample.risk(i)[1] - frame.ideal(1));
    if (regret < best) best = regret, arg = sample.theta(i)(0);
  }
  EXPECT_NEAR(arg, 4.5, 1e-3);
}

TEST(SampleRiskSet, ResolutionAndHighDimension) {
  EXPECT_THROW(fb::sample_risk_set(fb::testing::disk_spec(), 0), fb::PreconditionError);
  std::mt19937_64 rng(51);
  const auto spec = fb::testing::random_spec(rng, 2, 5, 1.0);
  const auto s = fb::sample_risk_set(fb::population_risks(spec), spec.radius, 300);
  EXPECT_EQ(s.size(), 300u);
  EXPECT_EQ(s.grid_step, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LE(s.theta(i).norm(), 1.0 + 1e-12);
}

TEST(TraceFrontier, IdenticalGroupsCollapseToUtopia) {
  fb::ProblemSpec s;
  s.radius = 5;
  s.groups = {{vec({3, -1}), 1.0, mat({{1, 0}, {0, 1}})}, {vec({3, -1}), 1.0, mat({{1, 0}, {0, 1}})}};
  const auto t = fb::trace_frontier(s, 50);
  ASSERT_EQ(t.points.size(), 1u);
  EXPECT_NEAR(t.points[0].rho1, 1.0, 1e-9);
  EXPECT_NEAR(t.points[0].rho2, 1.0, 1e-9);
  EXPECT_THROW(fb::diagonal_intersection(t), fb::PreconditionError);
}

TEST(TraceFrontier, MotivatingModel) {
  const auto spec = fb::testing::motivating_spec();
  const auto t = fb::trace_frontier(spec, 201);
  EXPECT_LE(distance_to_trace(t, 56.0 / 81.0, 56.0 / 81.0), 1e-3);
  EXPECT_LE(distance_to_trace(t, -0.5625, 0.87245), 1e-3);
  const auto& last = t.points.back();  // λ = 1: all weight on group 1, θ = 2
  EXPECT_NEAR(last.rho1, 1.0, 1e-9);
  EXPECT_NEAR(last.rho2, 24.0 / 49.0, 1e-9);
  EXPECT_DOUBLE_EQ(last.lambda, 1.0);
}

TEST(TraceFrontier, OrderedAndUndominated) {
  std::mt19937_64 rng(52);
  for (int k = 0; k < 20; ++k) {
    const auto t = fb::trace_frontier(fb::testing::random_spec(rng, 2, 1 + k % 3, 1.0 + k % 2), 101);
    for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
      EXPECT_LT(t.points[i].rho1, t.points[i + 1].rho1);
      EXPECT_LE(t.points[i + 1].rho2, t.points[i].rho2 + 1e-12);
    }
    for (const auto& a : t.points)
      for (const auto& b : t.points)
        EXPECT_FALSE(fb::strictly_dominates(std::array{-a.rho1, -a.rho2}, std::array{-b.rho1, -b.rho2}));
  }
}

TEST(TraceFrontier, AffineTransportIsPointForPoint) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> c(0.2, 5.0);
  for (int k = 0; k < 10; ++k) {
    const auto spec = fb::testing::random_spec(rng, 2, 2, 1.5);
    const auto f = fb::population_risks(spec);
    const auto frame = fb::population_frame(spec);
    const std::vector<double> scale{c(rng), c(rng)}, shift{c(rng), c(rng)};
    const fb::AffineTransformedRisks g(f, scale, shift);
    const auto lambdas = fb::uniform_weights(41);
    // equal minimizers need weights rescaled by the group scales
    std::vector<double> moved;
    for (double l : lambdas) moved.push_back((l / scale[0]) / (l / scale[0] + (1 - l) / scale[1]));
    const auto a = fb::trace_frontier(f, frame, spec.radius, lambdas, false);
    const auto b = fb::trace_frontier(g, g.transform(frame), spec.radius, moved, false);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      EXPECT_NEAR(a.points[i].rho1, b.points[i].rho1, 1e-9);
      EXPECT_NEAR(a.points[i].rho2, b.points[i].rho2, 1e-9);
    }
  }
}

TEST(TraceFrontier, RequiresTwoGroups) {
  std::mt19937_64 rng(54);
  EXPECT_THROW(fb::trace_frontier(fb::testing::random_spec(rng, 3, 2, 1.0), 11), fb::DimensionError);
  EXPECT_THROW(fb::uniform_weights(1), fb::PreconditionError);
}

TEST(DiagonalIntersection, MotivatingModelMatchesSolver) {
  const auto spec = fb::testing::motivating_spec();
  const auto x = fb::diagonal_intersection(fb::trace_frontier(spec, 201));
  EXPECT_NEAR(x.rho, 56.0 / 81.0, 1e-3);
  const auto r = fb::solve_maximin_ri(fb::population_risks(spec), fb::population_frame(spec), spec.radius);
  EXPECT_NEAR(x.rho, r.objective_value, 1e-6);
}

TEST(DiagonalIntersection, SymmetricSpec) {
  fb::ProblemSpec s;
  s.radius = 3;
  s.groups = {{vec({1, 2}), 1.0, mat({{2, 0.3}, {0.3, 1}})}, {vec({2, 1}), 1.0, mat({{1, 0.3}, {0.3, 2}})}};
  const auto t = fb::trace_frontier(s, 101);
  const auto x = fb::diagonal_intersection(t);
  // the λ = 1/2 scalarization is the symmetric point
  const auto mid = std::find_if(t.points.begin(), t.points.end(), [](const auto& p) { return p.lambda == 0.5; });
  ASSERT_NE(mid, t.points.end());
  EXPECT_NEAR(mid->rho1, mid->rho2, 1e-9);
  EXPECT_NEAR(x.rho, mid->rho1, 1e-9);
}

TEST(DiagonalIntersection, UniqueCrossingOnRandomSpecs) {
  std::mt19937_64 rng(55);
  int tested = 0;
  for (int k = 0; tested < 100; ++k) {
    const auto spec = fb::testing::random_spec(rng, 2, 1 + k % 3, 0.5 + k % 3);
    const auto t = fb::trace_frontier(spec, 101);
    if (t.points.size() == 1 && t.points[0].rho1 > 1 - 1e-9 && t.points[0].rho2 > 1 - 1e-9) continue;  // ideal feasible
    ++tested;
    EXPECT_EQ(fb::count_diagonal_crossings(t), 1u);
    const auto r = fb::solve_maximin_ri(fb::population_risks(spec), fb::population_frame(spec), spec.radius);
    EXPECT_NEAR(fb::diagonal_intersection(t).rho, r.objective_value, 1e-5);
  }
}

TEST(DiagonalIntersection, NotBracketed) {
  fb::FrontierTrace t;
  t.points = {{0.0, 0.1, 0.9, 0, 0}, {1.0, 0.2, 0.8, 0, 0}};
  EXPECT_THROW(fb::diagonal_intersection(t), fb::PreconditionError);
  EXPECT_EQ(fb::count_diagonal_crossings(t), 0u);
}

TEST(HullParetoCheck, DiskRiskSetIsRealizable) {
  const auto spec = fb::testing::disk_spec();
  const auto f = fb::population_risks(spec);
  const auto sample = fb::sample_risk_set(f, spec.radius, 201);
  const auto rep = fb::hull_pareto_check(sample, fb::riskset_tolerance(f, sample));
  EXPECT_TRUE(rep.passed) << rep.max_violation << " > " << rep.tolerance;
  EXPECT_GT(rep.pareto_faces, 0u);
}

TEST(HullParetoCheck, TwoPointSamplePasses) {
  const auto rep = fb::hull_pareto_check(manual_sample({{1, 2}, {2, 1}}), 0.0);
  EXPECT_TRUE(rep.passed);
  EXPECT_EQ(rep.max_violation, 0.0);
}

TEST(HullParetoCheck, CrescentReportsViolation) {
  // the region between two arcs around the origin bulges away from it, so the
  // chord joining its ends is a Pareto face of the hull far from every sample
  std::vector<std::array<double, 2>> pts;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.5 * M_PI * i / 200.0;
    for (double r : {1.0, 1.1, 1.2}) pts.push_back({r * std::cos(t), r * std::sin(t)});
  }
  const auto rep = fb::hull_pareto_check(manual_sample(pts), 0.05);
  EXPECT_FALSE(rep.passed);
  EXPECT_NEAR(rep.max_violation, 1.0 - std::sqrt(0.5), 0.05);
}

TEST(HullParetoCheck, ThreeGroups) {
  std::mt19937_64 rng(56);
  const auto spec = fb::testing::random_spec(rng, 3, 2, 1.0);
  const auto f = fb::population_risks(spec);
  const auto sample = fb::sample_risk_set(f, spec.radius, 61);
  const auto rep = fb::hull_pareto_check(sample, fb::riskset_tolerance(f, sample));
  EXPECT_TRUE(rep.passed) << rep.max_violation << " > " << rep.tolerance;
  EXPECT_THROW(fb::hull_pareto_check(fb::sample_risk_set(fb::testing::random_spec(rng, 4, 2, 1.0), 5), 1.0),
               fb::DimensionError);
}

}  // namespace
