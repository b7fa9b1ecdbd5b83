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

#ifndef ISLAB_DATA_HPP
#define ISLAB_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "islab/core_math.hpp"

namespace islab {

enum class Task { binary, multiclass, regression };

std::string to_string(Task t);
Task parse_task(std::string_view name);

// Per-column affine map x' = (x - offset) / scale, applied to the kept columns.
struct ScalingRecord {
  std::vector<std::size_t> kept_columns;  // indices into the unscaled columns
  std::vector<double> offset;
  std::vector<double> scale;
};

// Standardization of regression targets: y' = (y - mean) / stddev.
struct TargetScaling {
  double mean = 0.0;
  double stddev = 1.0;
};

struct Dataset {
  Matrix x;  // n x v
  Vector y;  // labels in [0, n_classes) or real targets
  Task task = Task::binary;
  std::size_t n_classes = 2;
  std::vector<std::string> columns;
  std::optional<ScalingRecord> scaling;
  std::optional<TargetScaling> target_scaling;
  Vector latent;  // generating eta for synthetic data, empty otherwise

  std::size_t size() const { return x.rows(); }
  std::size_t covariates() const { return x.cols(); }
};

// Hooks used by tests to probe the generating formula.
struct GeneratorOptions {
  bool zero_x2 = false;
};

double linear_eta(double x1, double x2, double noise);
double nonlinear_eta(double x1, double x2, double noise);

// Four U(-10, 10) covariates with x3 <- rho * x1 + (1 - rho) * x3; y = 1 iff
// eta >= median(eta) over the generated sample. Row i draws from substream i
// of `seed`.
Dataset gen_linear(std::size_t n, double rho, std::uint64_t seed,
                   const GeneratorOptions& options = {});
Dataset gen_nonlinear(std::size_t n, double rho, std::uint64_t seed,
                      const GeneratorOptions& options = {});

// Header row required. Feature cells must be numeric; the target column may
// hold any tokens for classification tasks and is label-encoded: integer
// labels already in [0, c) are kept, anything else is numbered by first
// appearance.
Dataset read_csv(std::istream& in, std::string_view target_column, Task task);
Dataset load_csv(const std::string& path, std::string_view target_column, Task task);

// Writes features then the target column "y".
void write_csv(const Dataset& ds, std::ostream& out);
void save_csv(const Dataset& ds, const std::string& path);

enum class ConstantColumnPolicy { error, drop };

std::pair<Dataset, ScalingRecord> minmax_scale(const Dataset& ds,
                                               ConstantColumnPolicy policy =
                                                   ConstantColumnPolicy::error);
Dataset apply_scaling(const Dataset& ds, const ScalingRecord& record);
Matrix invert_scaling(const Matrix& scaled, const ScalingRecord& record);

TargetScaling fit_target_scaling(std::span<const double> y);

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);
// Seeded shuffle, then the first n_train rows form the training set.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train, std::uint64_t seed);
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace islab

#endif  // ISLAB_DATA_HPP
