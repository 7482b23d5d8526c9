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

#ifndef FAIRBARGAIN_IO_HPP
#define FAIRBARGAIN_IO_HPP

#include "fairbargain/core.hpp"
#include "fairbargain/risk_models.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairbargain {

/// Malformed configuration or data file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// JSON problem specs
// ---------------------------------------------------------------------------

namespace detail {

inline Vector json_vector(const nlohmann::json& j, std::string_view what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json vector_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

/// Parses `{ "radius": r, "groups": [ { "beta": [...], "sigma2": s, "cov": [[...]] } ] }`.
/// A missing "cov" means the identity. The result is validated.
inline ProblemSpec parse_problem_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("problem spec: expected an object");
  if (!j.contains("radius") || !j["radius"].is_number()) throw ParseError("problem spec: numeric \"radius\" required");
  if (!j.contains("groups") || !j["groups"].is_array()) throw ParseError("problem spec: \"groups\" array required");
  ProblemSpec spec;
  spec.radius = j["radius"].get<double>();
  for (const auto& gj : j["groups"]) {
    if (!gj.is_object() || !gj.contains("beta") || !gj.contains("sigma2"))
      throw ParseError("problem spec: each group needs \"beta\" and \"sigma2\"");
    GroupLinearModel g;
    g.beta = detail::json_vector(gj["beta"], "beta");
    if (!gj["sigma2"].is_number()) throw ParseError("problem spec: \"sigma2\" must be a number");
    g.sigma2 = gj["sigma2"].get<double>();
    const auto d = g.beta.size();
    if (gj.contains("cov")) {
      const auto& cj = gj["cov"];
      if (!cj.is_array() || static_cast<Eigen::Index>(cj.size()) != d)
        throw ParseError("problem spec: \"cov\" must be a d×d array");
      g.cov.resize(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        const Vector row = detail::json_vector(cj[static_cast<std::size_t>(r)], "cov");
        if (row.size() != d) throw ParseError("problem spec: \"cov\" must be a d×d array");
        g.cov.row(r) = row.transpose();
      }
    } else {
      g.cov = Matrix::Identity(d, d);
    }
    spec.groups.push_back(std::move(g));
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("problem spec: ") + e.what());
  }
  return spec;
}

inline nlohmann::json to_json(const ProblemSpec& spec) {
  nlohmann::json j;
  j["radius"] = spec.radius;
  auto groups = nlohmann::json::array();
  for (const auto& g : spec.groups) {
    nlohmann::json gj;
    gj["beta"] = detail::vector_json(g.beta);
    gj["sigma2"] = g.sigma2;
    auto cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < g.cov.rows(); ++r) cov.push_back(detail::vector_json(g.cov.row(r).transpose()));
    gj["cov"] = std::move(cov);
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline ProblemSpec load_problem_spec(const std::filesystem::path& path) {
  return parse_problem_spec(read_json_file(path));
}

// ---------------------------------------------------------------------------
// CSV datasets
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_number(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw ParseError("dataset line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads `group,y,x1,...,xd`. Groups are indexed in first-appearance order.
/// Under squared loss y is centred on its pooled mean, which is kept in y_offset.
inline GroupedDataset read_dataset_csv(std::istream& in, LossKind loss = LossKind::squared) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line);
      break;
    }
  }
  if (header.size() < 3 || header[0] != "group" || header[1] != "y")
    throw ParseError("dataset: header must be group,y,x1,...,xd");
  const std::size_t d = header.size() - 2;

  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;  // per group, flattened (y, x...)
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != d + 2)
      throw ParseError("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(d + 2) + " fields");
    auto [it, inserted] = index.try_emplace(cells[0], labels.size());
    if (inserted) {
      labels.push_back(cells[0]);
      rows.emplace_back();
    }
    auto& dst = rows[it->second];
    for (std::size_t c = 1; c < cells.size(); ++c) dst.push_back(detail::parse_number(cells[c], lineno));
  }
  if (labels.empty()) throw ParseError("dataset: no rows");

  GroupedDataset ds;
  ds.loss = loss;
  ds.labels = labels;
  const auto width = static_cast<Eigen::Index>(d + 1);
  for (const auto& r : rows) {
    const auto n = static_cast<Eigen::Index>(r.size()) / width;
    GroupSamples s;
    s.x.resize(n, static_cast<Eigen::Index>(d));
    s.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s.y(i) = r[static_cast<std::size_t>(i * width)];
      for (Eigen::Index j = 0; j < s.x.cols(); ++j) s.x(i, j) = r[static_cast<std::size_t>(i * width + 1 + j)];
    }
    ds.groups.push_back(std::move(s));
  }
  if (loss == LossKind::squared) {
    ds.y_offset = ds.pooled_label_mean();
    for (auto& s : ds.groups) s.y.array() -= ds.y_offset;
  }
  try {
    ds.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  return ds;
}

inline GroupedDataset load_dataset_csv(const std::filesystem::path& path, LossKind loss = LossKind::squared) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_dataset_csv(in, loss);
}

/// Writes `group,y,x1,...,xd` rows in group order, restoring y_offset.
inline void write_dataset_csv(std::ostream& os, const GroupedDataset& ds) {
  os << "group,y";
  for (Eigen::Index j = 0; j < ds.dimension(); ++j) os << ",x" << (j + 1);
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    const auto& s = ds.groups[g];
    const std::string label = g < ds.labels.size() ? ds.labels[g] : "g" + std::to_string(g + 1);
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
      os << label << ',';
      put(s.y(i) + ds.y_offset);
      for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
        os << ',';
        put(s.x(i, j));
      }
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Writes `content` to a sibling temporary and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ParseError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ParseError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace fairbargain

#endif  // FAIRBARGAIN_IO_HPP
