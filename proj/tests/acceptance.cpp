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

// Acceptance run: one PASS/FAIL line per criterion with pinned tolerances.

#include "cli.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

namespace fb = fairbargain;
using fb::BargainingFrame;
using fb::Criterion;
using fb::DiscreteFeasibleSet;
using fb::RiskProfile;
using fb::Vector;
using nlohmann::json;

namespace {

const std::string kData = FAIRBARGAIN_DATA_DIR;

constexpr Criterion kAll[] = {Criterion::ri, Criterion::leximin, Criterion::gdro,
                              Criterion::mmv, Criterion::mmr, Criterion::nash};

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates named sub-checks; the first failures are kept for the report line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_ < 3) detail_ += (detail_.empty() ? "" : "; ") + what;
    ++failures_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome outcome() const {
    if (failures_ == 0) return {true, notes_};
    return {false, std::to_string(failures_) + " failed: " + detail_};
  }

 private:
  std::size_t failures_ = 0;
  std::string detail_, notes_;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Model {
  fb::QuadraticGroupRisks f;
  BargainingFrame frame;
  double radius;
};

Model model(const fb::ProblemSpec& s) { return {fb::population_risks(s), fb::population_frame(s), s.radius}; }

json cli_json(std::vector<std::string> args, int* code) {
  std::ostringstream out, err;
  *code = fb::cli::run_cli(std::move(args), out, err);
  return json::parse(out.str());
}

DiscreteFeasibleSet make_set(const std::vector<RiskProfile>& pts, std::vector<double> base, std::vector<double> ideal) {
  return DiscreteFeasibleSet(pts, BargainingFrame(std::move(base), std::move(ideal)));
}

BargainingFrame frame_from_set(const std::vector<RiskProfile>& pts, const std::vector<double>& base) {
  std::vector<double> ideal(base.size(), std::numeric_limits<double>::infinity());
  for (const auto& p : pts)
    for (std::size_t g = 0; g < base.size(); ++g) ideal[g] = std::min(ideal[g], p[g]);
  return BargainingFrame(base, ideal);
}

bool ideal_feasible(const fb::FrontierTrace& t) {
  return t.points.size() == 1 && t.points[0].rho1 > 1 - 1e-9 && t.points[0].rho2 > 1 - 1e-9;
}

// 1. motivating model through the CLI
Outcome motivating_reproduction() {
  Checks c;
  int code = 0;
  const auto j = cli_json({"solve", "--spec", kData + "/motivating.json", "--methods", "ri,mmr"}, &code);
  c.expect(code == 0, "exit code " + std::to_string(code));
  const auto& ri = j["methods"]["ri"];
  const auto& mmr = j["methods"]["mmr"];
  const double r0 = mmr["rhos"][0], r1 = mmr["rhos"][1];
  c.expect(std::abs(r0 + 0.5625) <= 1e-3 && std::abs(r1 - 0.87245) <= 1e-3, "mmr rho");
  for (double v : ri["rhos"]) c.expect(std::abs(v - 56.0 / 81.0) <= 1e-3, "ri rho " + fmt("%.6f", v));
  const double tm = mmr["theta"][0], tr = ri["theta"][0];
  c.expect(std::abs(tm - 4.5) <= 1e-3, "mmr theta");
  c.expect(std::abs(tr - 28.0 / 9.0) <= 1e-3, "ri theta");
  c.note("mmr rho=(" + fmt("%.5f", r0) + "," + fmt("%.5f", r1) + ") theta=" + fmt("%.5f", tm));
  c.note("ri rho=" + fmt("%.5f", ri["rhos"][0].get<double>()) + " theta=" + fmt("%.5f", tr));
  return c.outcome();
}

// 2. achievable reductions of the motivating frame
Outcome achievable_reductions() {
  Checks c;
  int code = 0;
  const auto j = cli_json({"solve", "--spec", kData + "/motivating.json", "--methods", "ri"}, &code);
  const auto& fr = j["frame"];
  const double g0 = fr["baseline"][0].get<double>() - fr["ideal"][0].get<double>();
  const double g1 = fr["baseline"][1].get<double>() - fr["ideal"][1].get<double>();
  c.expect(code == 0, "exit code");
  c.expect(g0 == 4.0 && g1 == 49.0, "reductions (" + fmt("%.17g", g0) + "," + fmt("%.17g", g1) + ")");
  c.note("baseline-ideal=(" + fmt("%g", g0) + "," + fmt("%g", g1) + ")");
  return c.outcome();
}

// 3. no-harm on random specs, with an MMR witness
Outcome no_harm() {
  Checks c;
  std::mt19937_64 rng(301);
  double worst = 1.0, mmr_worst = 1.0;
  for (int k = 0; k < 200; ++k) {
    const auto m = model(fb::testing::random_spec(rng, 2 + k % 3, 1 + k % 4, 0.5 + k % 3));
    const auto r = fb::solve_maximin_ri(m.f, m.frame, m.radius);
    worst = std::min(worst, r.improvement_profile.min());
    mmr_worst = std::min(mmr_worst, fb::solve_mmr(m.f, m.frame, m.radius).improvement_profile.min());
  }
  c.expect(worst >= -1e-5, "ri min rho " + fmt("%.3g", worst));
  c.expect(mmr_worst < -0.1, "no mmr witness");
  c.note("ri min rho=" + fmt("%.3g", worst) + " mmr min rho=" + fmt("%.3f", mmr_worst));
  return c.outcome();
}

// 4. diagonal crossing equals the maximin value
Outcome diagonal_equivalence() {
  Checks c;
  std::mt19937_64 rng(401);
  int tested = 0, skipped = 0;
  double worst = 0.0;
  for (int k = 0; tested < 100; ++k) {
    const auto spec = fb::testing::random_spec(rng, 2, 1 + k % 3, 0.5 + k % 3);
    const auto t = fb::trace_frontier(spec, 101);
    if (ideal_feasible(t)) {
      ++skipped;
      continue;
    }
    ++tested;
    const auto crossings = fb::count_diagonal_crossings(t);
    c.expect(crossings == 1, std::to_string(crossings) + " crossings");
    if (crossings == 0) continue;
    const auto r = fb::solve_maximin_ri(fb::population_risks(spec), fb::population_frame(spec), spec.radius);
    worst = std::max(worst, std::abs(fb::diagonal_intersection(t).rho - r.objective_value));
  }
  c.expect(worst <= 2e-3, "max diff " + fmt("%.3g", worst));
  c.note("max |diag-solver|=" + fmt("%.2g", worst) + " over 100 specs (" + std::to_string(skipped) +
         " ideal-feasible skipped)");
  return c.outcome();
}

// 5. continuous solvers against lattice oracles
Outcome oracle_equivalence() {
  Checks c;
  double worst = 0.0;
  for (const auto& [name, spec, step] : {std::tuple{"motivating", fb::testing::motivating_spec(), 1e-4},
                                         std::tuple{"disk", fb::testing::disk_spec(), 1e-3}}) {
    const auto m = model(spec);
    const auto sample = fb::sample_lattice(m.f, m.radius, step);
    for (auto crit : kAll) {
      const auto r = fb::solve(crit, m.f, m.frame, m.radius);
      const auto o = fb::oracle_solve(crit, m.f, m.frame, sample);
      const double d = std::abs(r.objective_value - o.objective);
      worst = std::max(worst, d);
      c.expect(d <= 1e-3, std::string(name) + " " + std::string(fb::criterion_name(crit)) + " " + fmt("%.3g", d));
    }
  }
  c.note("max |solver-oracle|=" + fmt("%.2g", worst) + " over 12 solves");
  return c.outcome();
}

// 6. bargaining axioms
Outcome axioms() {
  Checks c;
  // (a) scale invariance
  {
    std::mt19937_64 rng(601);
    std::uniform_real_distribution<double> scale(0.1, 10.0), shift(0.0, 5.0);
    double drift = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t m = 2 + static_cast<std::size_t>(trial % 3);
      const auto pts = fb::testing::random_profiles(rng, 40, m, 0.0, 1.0);
      std::vector<double> a(m), b(m), base(m), ideal(m);
      for (std::size_t g = 0; g < m; ++g) {
        a[g] = scale(rng);
        b[g] = shift(rng);
        base[g] = a[g] + b[g];
        ideal[g] = b[g];
      }
      std::vector<RiskProfile> moved;
      for (const auto& p : pts) {
        std::vector<double> r(m);
        for (std::size_t g = 0; g < m; ++g) r[g] = a[g] * p[g] + b[g];
        moved.emplace_back(std::move(r));
      }
      const auto s0 = make_set(pts, std::vector<double>(m, 1.0), std::vector<double>(m, 0.0));
      const auto s1 = make_set(moved, base, ideal);
      for (auto solve : {fb::ks_maximin, fb::leximin}) {
        const auto w0 = solve(s0), w1 = solve(s1);
        c.expect(w0.index == w1.index, "SI index");
        for (std::size_t g = 0; g < m; ++g) drift = std::max(drift, std::abs(w0.rhos[g] - w1.rhos[g]));
      }
    }
    c.expect(drift <= 1e-9, "SI drift " + fmt("%.3g", drift));
    const auto s0 = make_set({{2, 3.1}, {3, 2.5}}, {4, 4}, {1, 1});
    const auto s1 = make_set({{2, 1.55}, {3, 1.25}}, {4, 2}, {1, 0.5});
    c.expect(fb::gdro(s0).index != fb::gdro(s1).index || fb::mmr(s0).index != fb::mmr(s1).index, "SI witness");
    c.note("SI drift=" + fmt("%.1g", drift));
  }
  // (b) symmetry
  {
    std::mt19937_64 rng(602);
    using Solver = fb::DiscreteChoice (*)(const DiscreteFeasibleSet&);
    const Solver solvers[] = {fb::ks_maximin, fb::leximin, fb::gdro,        fb::mmv,
                              fb::mmr,        fb::nash,    fb::egalitarian, fb::equal_loss};
    for (int trial = 0; trial < 100; ++trial) {
      const auto pts = fb::testing::random_profiles(rng, 30, 2, 0.1, 0.9);
      std::vector<RiskProfile> swapped;
      for (const auto& p : pts) swapped.push_back(RiskProfile({p[1], p[0]}));
      const auto a = make_set(pts, {1.0, 1.2}, {0.0, 0.05});
      const auto b = make_set(swapped, {1.2, 1.0}, {0.05, 0.0});
      for (auto solve : solvers) {
        const auto ca = solve(a), cb = solve(b);
        c.expect(ca.index == cb.index && ca.risks[0] == cb.risks[1] && ca.risks[1] == cb.risks[0], "SYM mirror");
      }
    }
  }
  // (c) individual monotonicity on nested balls that keep every group optimum,
  // restricted to pairs where the smaller ball binds
  {
    std::mt19937_64 rng(603);
    const double tol = fb::SolverConfig{}.tol;
    int pairs = 0, draws = 0;
    double worst = 0.0;
    while (pairs < 50 && draws < 20000) {
      ++draws;
      auto s = fb::testing::random_spec(rng, 2, 2, 1.0);
      double reach = 0.0;
      for (const auto& g : s.groups) reach = std::max(reach, g.beta.norm());
      s.radius = reach;
      auto big = s;
      big.radius = 1.5 * reach;
      const auto sm = model(s), bm = model(big);
      const auto a = fb::solve_maximin_ri(sm.f, sm.frame, s.radius);
      if (a.parameter.norm() < s.radius * (1 - 1e-6)) continue;
      ++pairs;
      const auto b = fb::solve_maximin_ri(bm.f, bm.frame, big.radius);
      for (std::size_t g = 0; g < 2; ++g) worst = std::max(worst, a.improvement_profile[g] - b.improvement_profile[g]);
    }
    c.expect(pairs == 50, "IM found " + std::to_string(pairs) + " binding pairs");
    c.expect(worst <= 10 * tol, "IM rho loss " + fmt("%.3g", worst));
    c.note("IM max rho loss=" + fmt("%.2g", worst) + " over " + std::to_string(pairs) + " pairs");
  }
  // (d) independence of irrelevant alternatives
  {
    const std::vector<double> base{10, 10};
    const std::vector<RiskProfile> full{{4, 4}, {2, 5.5}, {1, 9.9}, {9.9, 1}};
    const std::vector<RiskProfile> reduced{{4, 4}, {2, 5.5}, {1, 9.9}};
    const auto before = fb::ks_maximin(DiscreteFeasibleSet(full, frame_from_set(full, base)));
    const auto after = fb::ks_maximin(DiscreteFeasibleSet(reduced, frame_from_set(reduced, base)));
    c.expect(before.index != after.index, "KS IIA witness did not move");
    std::mt19937_64 rng(604);
    const std::vector<double> b3{1.0, 1.0, 1.0};
    for (int trial = 0; trial < 100; ++trial) {
      const auto pts = fb::testing::random_profiles(rng, 40, 3, 0.0, 0.95);
      const auto win = fb::nash(DiscreteFeasibleSet(pts, frame_from_set(pts, b3)));
      std::vector<RiskProfile> kept{pts[win.index]};
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != win.index && rng() % 2 == 0) kept.push_back(pts[i]);
      const auto again = fb::nash(DiscreteFeasibleSet(kept, frame_from_set(kept, b3)));
      c.expect(again.risks == win.risks, "Nash IIA");
    }
  }
  return c.outcome();
}

// 7. comprehensive closure
Outcome closure() {
  Checks c;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(700 + seed);
    const std::size_t m = 2 + seed % 3;
    auto pts = fb::testing::random_profiles(rng, 30, m, 0.0, 1.5);
    std::vector<double> base(m, 1.0);
    pts.emplace_back(base);
    const auto s = make_set(pts, base, std::vector<double>(m, 0.0));
    c.expect(fb::comprehensive_closure_leximin(s).index == fb::leximin(s).index, "index differs");
  }
  c.note("100 sets");
  return c.outcome();
}

// 8. hull realizability and the crescent control
Outcome hull_geometry() {
  Checks c;
  const auto spec = fb::testing::disk_spec();
  const auto f = fb::population_risks(spec);
  const auto sample = fb::sample_risk_set(f, spec.radius, 201);
  const auto rep = fb::hull_pareto_check(sample, fb::riskset_tolerance(f, sample));
  c.expect(rep.passed, "disk violation " + fmt("%.3g", rep.max_violation));
  std::vector<double> flat;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.5 * M_PI * i / 200.0;
    for (double r : {1.0, 1.1, 1.2}) {
      flat.push_back(r * std::cos(t));
      flat.push_back(r * std::sin(t));
    }
  }
  fb::RiskSample crescent;
  crescent.group_count = 2;
  crescent.dimension = 1;
  crescent.thetas.assign(flat.size() / 2, 0.0);
  crescent.risks = std::move(flat);
  const auto neg = fb::hull_pareto_check(crescent, 0.05);
  c.expect(!neg.passed, "crescent passed");
  c.note("disk violation=" + fmt("%.2g", rep.max_violation) + " tol=" + fmt("%.2g", rep.tolerance) +
         ", crescent violation=" + fmt("%.3f", neg.max_violation));
  return c.outcome();
}

// 9. convergence rate of the empirical estimator
Outcome convergence_rate() {
  Checks c;
  const auto res = fb::run_convergence(fb::testing::motivating_spec(), {100, 400, 1600, 6400, 25600}, 50, 0);
  const auto cert = fb::gap_certificate(res, 0.1);
  c.expect(res.slope_in_band(), "slope " + fmt("%.3f", res.fitted_slope));
  c.expect(cert.non_increasing, "quantiles increase");
  c.note("slope=" + fmt("%.3f", res.fitted_slope) + " band [-0.65,-0.35], 0.9-quantiles non-increasing");
  return c.outcome();
}

template <class F>
void gradient_checks(Checks& c, const F& f, const BargainingFrame& frame, double radius, const Vector& center,
                     const char* family, double* worst) {
  const auto d = f.dimension();
  constexpr double h = 1e-6;
  for (auto crit : {Criterion::ri, Criterion::gdro, Criterion::mmv, Criterion::mmr, Criterion::nash}) {
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 100 && seed < 100000; ++seed) {
      const bool nash = crit == Criterion::nash;
      const Vector th = (nash ? center : Vector(Vector::Zero(d))) + fb::random_point_in_ball(d, nash ? 0.05 : radius, seed);
      std::vector<double> keys;
      for (std::size_t g = 0; g < f.group_count(); ++g) {
        const double r = f.risk(g, th);
        switch (crit) {
          case Criterion::ri: keys.push_back(-frame.rho(g, r)); break;
          case Criterion::gdro: keys.push_back(r); break;
          case Criterion::mmv: keys.push_back(r - frame.baseline(g)); break;
          case Criterion::mmr: keys.push_back(r - frame.ideal(g)); break;
          default: keys.push_back(frame.baseline(g) - r); break;
        }
      }
      std::sort(keys.rbegin(), keys.rend());
      // skip kinks of the max criteria and the edge of the nash domain
      if (nash ? keys.back() < 1e-3 : keys[0] - keys[1] < 1e-3) continue;
      const Vector an = fb::criterion_gradient(crit, f, frame, th);
      Vector fd(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        Vector e = Vector::Zero(d);
        e(j) = h;
        fd(j) = (fb::criterion_value(crit, f, frame, th + e) - fb::criterion_value(crit, f, frame, th - e)) / (2 * h);
      }
      const double rel = (an - fd).norm() / std::max(an.norm(), 1.0);
      *worst = std::max(*worst, rel);
      c.expect(rel <= 1e-4, std::string(family) + " " + std::string(fb::criterion_name(crit)) + " " + fmt("%.3g", rel));
      ++checked;
    }
    c.expect(checked == 100, std::string(family) + " " + std::string(fb::criterion_name(crit)) + " short of points");
  }
}

// 10. analytic supergradients against central differences
Outcome gradients() {
  Checks c;
  double worst = 0.0;
  std::mt19937_64 rng(1001);
  const auto m = model(fb::testing::random_spec(rng, 3, 3, 2.0));
  gradient_checks(c, m.f, m.frame, m.radius, fb::solve_maximin_ri(m.f, m.frame, m.radius).parameter, "quadratic",
                  &worst);

  fb::GroupedDataset ds;
  ds.loss = fb::LossKind::logistic;
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  for (const Vector& beta : {fb::testing::vec({1.0, -0.5}), fb::testing::vec({-0.3, 1.2}), fb::testing::vec({0.8, 0.8})}) {
    fb::GroupSamples s;
    s.x.resize(200, 2);
    s.y.resize(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      s.x(i, 0) = z(rng);
      s.x(i, 1) = z(rng);
      s.y(i) = u(rng) < 1.0 / (1.0 + std::exp(-s.x.row(i).dot(beta))) ? 1.0 : 0.0;
    }
    ds.groups.push_back(std::move(s));
  }
  ds.radius = 3.0;
  const fb::LogisticGroupRisks lf(ds);
  const auto lframe = fb::empirical_frame(ds);
  gradient_checks(c, lf, lframe, ds.radius, fb::solve_maximin_ri(lf, lframe, ds.radius).parameter, "logistic",
                  &worst);
  c.note("max relative error=" + fmt("%.2g", worst) + " over 1000 points");
  return c.outcome();
}

}  // namespace

int main() {
  struct Criterion_ {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const Criterion_ criteria[] = {
      {"motivating model rho and theta (1e-3)", 1.0, motivating_reproduction},
      {"motivating achievable reductions (exact)", 1.0, achievable_reductions},
      {"no-harm on 200 random specs (-1e-5)", 30.0, no_harm},
      {"diagonal crossing vs maximin on 100 specs (2e-3)", 60.0, diagonal_equivalence},
      {"solvers vs lattice oracles (1e-3)", 120.0, oracle_equivalence},
      {"axioms SI/SYM/IM/IIA", 60.0, axioms},
      {"closure leximin equals leximin on 100 sets", 60.0, closure},
      {"risk-set hull realizability and crescent control", 60.0, hull_geometry},
      {"empirical rate slope in [-0.65,-0.35]", 300.0, convergence_rate},
      {"supergradients vs finite differences (1e-4)", 60.0, gradients},
  };
  int failed = 0, index = 0;
  for (const auto& cr : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.limit_s) {
      o.pass = false;
      o.detail += " runtime over " + fmt("%g", cr.limit_s) + " s";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", index, cr.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
