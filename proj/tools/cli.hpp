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

// Command implementations for the fairbargain executable.

#ifndef FAIRBARGAIN_TOOLS_CLI_HPP
#define FAIRBARGAIN_TOOLS_CLI_HPP

#include "fairbargain.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fairbargain::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kDegenerate = 3, kUnsupported = 4 };

using Json = nlohmann::ordered_json;

/// Reads a flat (or subcommand-nested) JSON object as command-line settings.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->count() == 0 || opt->get_lnames().front() == "config") continue;
      const auto& res = opt->results();
      j[opt->get_lnames().front()] = res.size() == 1 ? Json(res.front()) : Json(res);
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: expected a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const Json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
        item.inputs.push_back(joined);
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Options {
  std::string spec;
  std::string data;
  std::string out;
  std::string summary;
  std::string methods = "ri,leximin,gdro,mmv,mmr,nash";
  std::string loss = "squared";
  std::string kernel;
  double bandwidth = 1.0;
  double kernel_radius = 1.0;
  std::optional<double> radius;
  double tol = 1e-6;
  std::size_t max_iters = 100000;
  std::uint64_t seed = 0;
  std::optional<double> oracle_grid;
  std::size_t weights = 200;
  std::size_t grid = 101;
  std::size_t trials = 50;
  std::size_t n = 1000;
  std::vector<std::size_t> ns{100, 400, 1600, 6400, 25600};
};

/// Raised for invalid flag combinations.
class UsageError : public Error {
 public:
  using Error::Error;
};

using RiskModel = std::variant<QuadraticGroupRisks, LogisticGroupRisks>;

struct Problem {
  RiskModel risks;
  BargainingFrame frame;
  double radius = 1.0;
  std::vector<std::string> labels;
  std::optional<ProblemSpec> spec;
  std::string source;
  std::string loss = "squared";
  double y_offset = 0.0;

  std::size_t group_count() const { return frame.size(); }
  Eigen::Index dimension() const { return std::visit([](const auto& f) { return f.dimension(); }, risks); }
};

inline LossKind parse_loss(const std::string& s) {
  if (s == "squared") return LossKind::squared;
  if (s == "logistic") return LossKind::logistic;
  throw UsageError("unknown loss '" + s + "' (expected squared or logistic)");
}

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "linear") return KernelKind::linear;
  throw UsageError("unknown kernel '" + s + "' (expected gaussian or linear)");
}

inline Problem load_problem(const Options& o) {
  if (o.spec.empty() == o.data.empty()) throw UsageError("exactly one of --spec or --data is required");
  if (!o.spec.empty()) {
    ProblemSpec spec = load_problem_spec(o.spec);
    if (o.radius) {
      spec.radius = *o.radius;
      try {
        spec.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
    Problem p{population_risks(spec), population_frame(spec), spec.radius, {}, spec, "spec"};
    for (std::size_t g = 0; g < spec.groups.size(); ++g) p.labels.push_back("g" + std::to_string(g + 1));
    return p;
  }
  const LossKind loss = parse_loss(o.loss);
  GroupedDataset ds = load_dataset_csv(o.data, loss);
  ds.radius = o.radius.value_or(10.0);
  if (!(ds.radius > 0.0) || !std::isfinite(ds.radius)) throw UsageError("--radius must be positive and finite");
  if (!o.kernel.empty()) {
    if (loss != LossKind::squared) throw UsageError("kernel predictors support squared loss only");
    ds.kernel = KernelSpec{parse_kernel(o.kernel), o.bandwidth, o.kernel_radius};
    ds.kernel->validate();
    const auto lin = linearize_kernel(ds);
    Problem p{empirical_squared_risks(lin.features), empirical_frame(lin.features), o.kernel_radius, ds.labels,
              std::nullopt, "data"};
    p.y_offset = ds.y_offset;
    return p;
  }
  if (loss == LossKind::logistic) {
    Problem p{LogisticGroupRisks(ds), empirical_frame(ds), ds.radius, ds.labels, std::nullopt, "data", "logistic"};
    return p;
  }
  Problem p{empirical_squared_risks(ds), empirical_frame(ds), ds.radius, ds.labels, std::nullopt, "data"};
  p.y_offset = ds.y_offset;
  return p;
}

inline std::vector<Criterion> parse_methods(const std::string& list) {
  std::vector<Criterion> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_criterion(item));
    } catch (const Error&) {
      throw UsageError("unknown method '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--methods is empty");
  return out;
}

inline SolverConfig solver_config(const Options& o) {
  SolverConfig cfg;
  cfg.tol = o.tol;
  cfg.max_iters = o.max_iters;
  cfg.seed = o.seed;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json array(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json array(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty())
    out << content;
  else
    write_file_atomic(path, content);
}

inline SolverReport run_solver(Criterion c, const Problem& p, const SolverConfig& cfg) {
  return std::visit([&](const auto& f) { return solve(c, f, p.frame, p.radius, cfg); }, p.risks);
}

inline Json frame_json(const Problem& p) {
  Json frame;
  Json base = Json::array(), ideal = Json::array();
  for (std::size_t g = 0; g < p.group_count(); ++g) {
    base.push_back(p.frame.baseline(g));
    ideal.push_back(p.frame.ideal(g));
  }
  frame["baseline"] = std::move(base);
  frame["ideal"] = std::move(ideal);
  return frame;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const auto methods = parse_methods(o.methods);
  const auto cfg = solver_config(o);
  const Problem p = load_problem(o);
  Json report;
  report["command"] = "solve";
  report["source"] = p.source;
  report["loss"] = p.loss;
  report["groups"] = p.labels;
  report["dimension"] = p.dimension();
  report["radius"] = p.radius;
  report["tol"] = cfg.tol;
  report["y_offset"] = p.y_offset;
  report["frame"] = frame_json(p);
  Json per = Json::object();
  bool certified = true;
  for (Criterion c : methods) {
    const auto rep = run_solver(c, p, cfg);
    Json m;
    m["theta"] = array(rep.parameter);
    m["risks"] = array(rep.risk_profile.values());
    m["rhos"] = array(rep.improvement_profile.values());
    m["objective"] = rep.objective_value;
    m["certificate_gap"] = rep.certificate_gap;
    m["iterations"] = rep.iterations;
    m["converged"] = rep.converged;
    per[std::string(criterion_name(c))] = std::move(m);
    if (!(rep.certificate_gap <= cfg.tol)) {
      certified = false;
      err << criterion_name(c) << ": certificate gap " << rep.certificate_gap << " exceeds tol " << cfg.tol << '\n';
    }
  }
  report["methods"] = std::move(per);
  report["all_certified"] = certified;
  emit(o.out, report.dump(2) + "\n", out);
  return certified ? kOk : kCheckFailed;
}

inline int cmd_compare(const Options& o, std::ostream& out, std::ostream&) {
  const auto methods = parse_methods(o.methods);
  const auto cfg = solver_config(o);
  const Problem p = load_problem(o);
  const std::size_t m = p.group_count();
  const Eigen::Index d = p.dimension();
  std::optional<RiskSample> lattice;
  if (o.oracle_grid) {
    lattice = std::visit([&](const auto& f) { return sample_lattice(f, p.radius, *o.oracle_grid); }, p.risks);
  }

  std::ostringstream csv;
  csv << "method";
  for (Eigen::Index j = 0; j < d; ++j) csv << ",theta_" << (j + 1);
  for (std::size_t g = 0; g < m; ++g) csv << ",r_" << (g + 1);
  for (std::size_t g = 0; g < m; ++g) csv << ",rho_" << (g + 1);
  csv << ",min_rho,max_risk,max_regret";
  if (lattice) csv << ",objective,oracle_objective,oracle_min_rho";
  csv << '\n';
  for (Criterion c : methods) {
    const auto rep = run_solver(c, p, cfg);
    csv << criterion_name(c);
    for (Eigen::Index j = 0; j < d; ++j) csv << ',' << num(rep.parameter(j));
    double max_risk = -std::numeric_limits<double>::infinity();
    double max_regret = max_risk;
    for (std::size_t g = 0; g < m; ++g) {
      csv << ',' << num(rep.risk_profile[g]);
      max_risk = std::max(max_risk, rep.risk_profile[g]);
      max_regret = std::max(max_regret, rep.risk_profile[g] - p.frame.ideal(g));
    }
    for (std::size_t g = 0; g < m; ++g) csv << ',' << num(rep.improvement_profile[g]);
    csv << ',' << num(rep.improvement_profile.min()) << ',' << num(max_risk) << ',' << num(max_regret);
    if (lattice) {
      const auto orc = std::visit([&](const auto& f) { return oracle_solve(c, f, p.frame, *lattice); }, p.risks);
      csv << ',' << num(rep.objective_value) << ',' << num(orc.objective) << ',' << num(orc.choice.rhos.min());
    }
    csv << '\n';
  }
  emit(o.out, csv.str(), out);
  return kOk;
}

inline int cmd_frontier(const Options& o, std::ostream& out, std::ostream& err) {
  const Problem p = load_problem(o);
  if (p.group_count() != 2) {
    err << "frontier: requires exactly two groups, got " << p.group_count() << '\n';
    return kUnsupported;
  }
  if (o.weights < 2) throw UsageError("--weights must be at least 2");
  const auto trace = std::visit(
      [&](const auto& f) { return trace_frontier(f, p.frame, p.radius, uniform_weights(o.weights)); }, p.risks);
  std::ostringstream csv;
  write_frontier_csv(csv, trace);
  emit(o.out, csv.str(), out);
  return kOk;
}

inline int cmd_riskset(const Options& o, std::ostream& out, std::ostream&) {
  const Problem p = load_problem(o);
  if (o.grid == 0) throw UsageError("--grid must be positive");
  const auto sample = std::visit(
      [&](const auto& f) { return sample_risk_set(f, p.radius, o.grid, o.seed == 0 ? 1 : o.seed); }, p.risks);
  std::ostringstream csv;
  for (Eigen::Index j = 0; j < sample.dimension; ++j) csv << (j ? "," : "") << "theta_" << (j + 1);
  for (std::size_t g = 0; g < sample.group_count; ++g) csv << ",r_" << (g + 1);
  csv << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto d = static_cast<std::size_t>(sample.dimension);
    for (std::size_t j = 0; j < d; ++j) csv << (j ? "," : "") << num(sample.thetas[i * d + j]);
    for (std::size_t g = 0; g < sample.group_count; ++g) csv << ',' << num(sample.risks[i * sample.group_count + g]);
    csv << '\n';
  }
  emit(o.out, csv.str(), out);
  return kOk;
}

inline int cmd_converge(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.data.empty()) throw UsageError("converge: requires --spec (population risks are needed)");
  const auto cfg = solver_config(o);
  const Problem p = load_problem(o);
  const auto result = run_convergence(*p.spec, o.ns, o.trials, o.seed, cfg);
  const auto cert = gap_certificate(result, 0.1);
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_convergence_csv(csv, result);
    write_file_atomic(o.out, csv.str());
  }
  Json summary;
  summary["slope"] = result.fitted_slope;
  summary["band"] = {kRateSlopeBand.first, kRateSlopeBand.second};
  summary["pass"] = result.slope_in_band();
  summary["frame_slope"] = result.frame_slope;
  summary["population_value"] = result.population_value;
  summary["ns"] = result.sample_sizes;
  summary["trials"] = result.trials;
  summary["seed"] = result.seed;
  summary["rejected"] = result.rejected;
  summary["delta"] = cert.delta;
  summary["quantiles"] = cert.quantiles;
  summary["quantiles_non_increasing"] = cert.non_increasing;
  emit(o.summary, summary.dump(2) + "\n", out);
  if (!result.slope_in_band()) err << "converge: slope " << result.fitted_slope << " outside band\n";
  return result.slope_in_band() ? kOk : kCheckFailed;
}

inline int cmd_draw(const Options& o, std::ostream& out, std::ostream&) {
  if (o.spec.empty() || !o.data.empty()) throw UsageError("draw: requires --spec");
  if (o.n == 0) throw UsageError("--n must be positive");
  ProblemSpec spec = load_problem_spec(o.spec);
  std::ostringstream csv;
  write_dataset_csv(csv, draw_dataset(spec, o.n, o.seed));
  emit(o.out, csv.str(), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Fair multi-group prediction via bargaining solutions", "fairbargain"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  std::optional<double> radius, oracle;
  app.add_option("--spec", o.spec, "JSON problem spec");
  app.add_option("--data", o.data, "CSV dataset (group,y,x1,...,xd)");
  app.add_option("--out", o.out, "Output path (stdout when omitted)");
  app.add_option("--summary", o.summary, "converge: summary JSON path (stdout when omitted)");
  app.add_option("--methods", o.methods, "Comma-separated list of ri,leximin,gdro,mmv,mmr,nash");
  app.add_option("--loss", o.loss, "Data loss: squared or logistic");
  app.add_option("--kernel", o.kernel, "Kernel predictor class: gaussian or linear");
  app.add_option("--bandwidth", o.bandwidth, "Gaussian kernel bandwidth");
  app.add_option("--kernel-radius", o.kernel_radius, "RKHS norm bound");
  app.add_option("--radius", radius, "Parameter ball radius (data default 10; overrides the spec)");
  app.add_option("--tol", o.tol, "Certificate tolerance");
  app.add_option("--max-iters", o.max_iters, "Iteration budget per solve");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--oracle-grid", oracle, "compare: lattice step of the discrete oracle");
  app.add_option("--weights", o.weights, "frontier: number of scalarization weights");
  app.add_option("--grid", o.grid, "riskset: points per axis");
  app.add_option("--trials", o.trials, "converge: Monte Carlo trials per sample size");
  app.add_option("--n", o.n, "draw: rows per group");
  app.add_option("--ns", o.ns, "converge: comma-separated sample sizes")->delimiter(',');

  int status = kOk;
  auto bind = [&](const char* name, const char* help, int (*fn)(const Options&, std::ostream&, std::ostream&)) {
    app.add_subcommand(name, help)->callback([&, fn] {
      o.radius = radius;
      o.oracle_grid = oracle;
      status = fn(o, out, err);
    });
  };
  bind("solve", "Solve each method and write a JSON report", cmd_solve);
  bind("compare", "Write a CSV comparison table of methods", cmd_compare);
  bind("frontier", "Trace the two-group frontier in relative-improvement space", cmd_frontier);
  bind("riskset", "Sample the feasible risk set on a grid", cmd_riskset);
  bind("converge", "Monte Carlo study of the empirical estimator", cmd_converge);
  bind("draw", "Draw a CSV dataset from a problem spec", cmd_draw);

  std::vector<const char*> argv{"fairbargain"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DegenerateFrameError& e) {
    err << "degenerate frame: " << e.what() << '\n';
    return kDegenerate;
  } catch (const DegenerateBargainingError& e) {
    err << "degenerate bargaining problem: " << e.what() << '\n';
    return kDegenerate;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return status;
}

}  // namespace fairbargain::cli

#endif  // FAIRBARGAIN_TOOLS_CLI_HPP
