/*
 * Copyright 2026 The islab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "islab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "islab/errors.hpp"

namespace islab {

std::string to_string(Task t) {
  switch (t) {
    case Task::binary: return "binary";
    case Task::multiclass: return "multiclass";
    case Task::regression: return "regression";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "binary") return Task::binary;
  if (name == "multiclass") return Task::multiclass;
  if (name == "regression") return Task::regression;
  throw std::invalid_argument("unknown task '" + std::string(name) +
                              "' (expected binary, multiclass or regression)");
}

double linear_eta(double x1, double x2, double noise) { return 100.0 + x1 + x2 + noise; }

double nonlinear_eta(double x1, double x2, double noise) {
  return 100.0 + x1 + x2 + x1 * x2 + x1 * x1 + x2 * x2 + noise;
}

namespace {

constexpr double kNoiseStd = 0.01;

template <typename Eta>
Dataset generate(std::size_t n, double rho, std::uint64_t seed, const GeneratorOptions& options,
                 Eta eta) {
  if (n < 2) throw std::invalid_argument("generator: need at least 2 rows");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("generator: rho outside [0, 1]");
  Dataset ds;
  ds.task = Task::binary;
  ds.n_classes = 2;
  ds.columns = {"x1", "x2", "x3", "x4"};
  ds.x = Matrix(n, 4);
  ds.y.resize(n);
  ds.latent.resize(n);
  const Rng root(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.substream(i);
    double x[4];
    for (double& v : x) v = rng.uniform(-10.0, 10.0);
    if (options.zero_x2) x[1] = 0.0;
    x[2] = rho * x[0] + (1.0 - rho) * x[2];
    const double noise = gauss_sample(rng, 0.0, kNoiseStd);
    for (std::size_t c = 0; c < 4; ++c) ds.x(i, c) = x[c];
    ds.latent[i] = eta(x[0], x[1], noise);
  }
  const double med = median(ds.latent);
  for (std::size_t i = 0; i < n; ++i) ds.y[i] = ds.latent[i] >= med ? 1.0 : 0.0;
  return ds;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset gen_linear(std::size_t n, double rho, std::uint64_t seed, const GeneratorOptions& options) {
  return generate(n, rho, seed, options, linear_eta);
}

Dataset gen_nonlinear(std::size_t n, double rho, std::uint64_t seed,
                      const GeneratorOptions& options) {
  return generate(n, rho, seed, options, nonlinear_eta);
}

Dataset read_csv(std::istream& in, std::string_view target_column, Task task) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw FormatError("csv: empty file");
  const std::vector<std::string> header = split_line(line);
  std::size_t target = header.size();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (trim(header[c]) == target_column) target = c;
  if (target == header.size())
    throw FormatError("csv: target column '" + std::string(target_column) + "' not found");

  Dataset ds;
  ds.task = task;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != target) ds.columns.emplace_back(trim(header[c]));

  std::vector<double> cells;
  std::vector<std::string> targets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> row = split_line(line);
    if (row.size() != header.size())
      throw FormatError("csv: line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(header.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == target) {
        targets.emplace_back(trim(row[c]));
        continue;
      }
      double v;
      if (!parse_number(row[c], v))
        throw FormatError("csv: non-numeric value '" + row[c] + "' at line " +
                          std::to_string(line_no) + ", column '" + header[c] + "'");
      cells.push_back(v);
    }
  }
  if (targets.empty()) throw FormatError("csv: no data rows");

  const std::size_t n = targets.size();
  const std::size_t v = header.size() - 1;
  ds.x = Matrix(n, v);
  std::copy(cells.begin(), cells.end(), ds.x.flat().begin());
  ds.y.resize(n);

  if (task == Task::regression) {
    ds.n_classes = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!parse_number(targets[i], ds.y[i]))
        throw FormatError("csv: non-numeric regression target '" + targets[i] + "'");
    return ds;
  }

  // keep integer labels that already form 0..c-1, otherwise number by first appearance
  bool integral = true;
  double top = -1.0;
  for (std::size_t i = 0; i < n && integral; ++i) {
    double val;
    integral = parse_number(targets[i], val) && val >= 0.0 && val == std::floor(val);
    if (integral) {
      ds.y[i] = val;
      top = std::max(top, val);
    }
  }
  if (integral) {
    ds.n_classes = static_cast<std::size_t>(top) + 1;
  } else {
    std::map<std::string, std::size_t> codes;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = codes.emplace(targets[i], codes.size());
      ds.y[i] = static_cast<double>(it->second);
    }
    ds.n_classes = codes.size();
  }
  if (task == Task::binary) {
    if (ds.n_classes > 2) throw FormatError("csv: binary task but target has more than 2 classes");
    ds.n_classes = 2;
  }
  return ds;
}

Dataset load_csv(const std::string& path, std::string_view target_column, Task task) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file '" + path + "'");
  return read_csv(in, target_column, task);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  for (std::size_t c = 0; c < ds.covariates(); ++c)
    out << (c < ds.columns.size() ? ds.columns[c] : "x" + std::to_string(c + 1)) << ',';
  out << "y\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.covariates(); ++c) out << ds.x(i, c) << ',';
    out << ds.y[i] << '\n';
  }
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(ds, out);
}

std::pair<Dataset, ScalingRecord> minmax_scale(const Dataset& ds, ConstantColumnPolicy policy) {
  ScalingRecord rec;
  for (std::size_t c = 0; c < ds.covariates(); ++c) {
    double lo = ds.x(0, c), hi = ds.x(0, c);
    for (std::size_t i = 1; i < ds.size(); ++i) {
      lo = std::min(lo, ds.x(i, c));
      hi = std::max(hi, ds.x(i, c));
    }
    if (!(hi > lo)) {
      if (policy == ConstantColumnPolicy::error)
        throw std::invalid_argument("minmax_scale: column " + std::to_string(c) + " is constant");
      continue;
    }
    rec.kept_columns.push_back(c);
    rec.offset.push_back(lo);
    rec.scale.push_back(hi - lo);
  }
  Dataset out = apply_scaling(ds, rec);
  return {std::move(out), rec};
}

Dataset apply_scaling(const Dataset& ds, const ScalingRecord& rec) {
  Dataset out = ds;
  out.x = Matrix(ds.size(), rec.kept_columns.size());
  out.columns.clear();
  for (std::size_t j = 0; j < rec.kept_columns.size(); ++j) {
    const std::size_t c = rec.kept_columns[j];
    if (c >= ds.covariates()) throw std::invalid_argument("apply_scaling: column out of range");
    if (c < ds.columns.size()) out.columns.push_back(ds.columns[c]);
    for (std::size_t i = 0; i < ds.size(); ++i)
      out.x(i, j) = (ds.x(i, c) - rec.offset[j]) / rec.scale[j];
  }
  out.scaling = rec;
  return out;
}

Matrix invert_scaling(const Matrix& scaled, const ScalingRecord& rec) {
  if (scaled.cols() != rec.kept_columns.size())
    throw std::invalid_argument("invert_scaling: column count mismatch");
  Matrix out(scaled.rows(), scaled.cols());
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j)
      out(i, j) = scaled(i, j) * rec.scale[j] + rec.offset[j];
  return out;
}

TargetScaling fit_target_scaling(std::span<const double> y) {
  if (y.size() < 2) throw std::invalid_argument("fit_target_scaling: need at least 2 targets");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
  if (!(sd > 0.0)) throw std::invalid_argument("fit_target_scaling: constant target");
  return {mean, sd};
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.task = ds.task;
  out.n_classes = ds.n_classes;
  out.columns = ds.columns;
  out.scaling = ds.scaling;
  out.target_scaling = ds.target_scaling;
  out.x = Matrix(rows.size(), ds.covariates());
  out.y.resize(rows.size());
  if (!ds.latent.empty()) out.latent.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= ds.size()) throw std::invalid_argument("subset: row index out of range");
    std::copy(ds.x.row(r).begin(), ds.x.row(r).end(), out.x.row(i).begin());
    out.y[i] = ds.y[r];
    if (!ds.latent.empty()) out.latent[i] = ds.latent[r];
  }
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train, std::uint64_t seed) {
  if (n_train >= ds.size())
    throw std::invalid_argument("split: n_train must be smaller than the dataset");
  Rng rng(seed);
  const std::vector<std::size_t> idx = shuffled_indices(ds.size(), rng);
  const std::span<const std::size_t> all(idx);
  return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

}  // namespace islab
