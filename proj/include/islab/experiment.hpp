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

#ifndef ISLAB_EXPERIMENT_HPP
#define ISLAB_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "islab/data.hpp"
#include "islab/network.hpp"
#include "islab/trainer.hpp"

namespace islab {

enum class ModelKind { islab_lrt, blr, is_ann_l1 };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view name);

struct DatasetConfig {
  std::string name;       // label used in result rows
  std::string generator;  // "linear", "nonlinear" or "csv"
  // synthetic
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  // csv
  std::string train_csv;
  std::string test_csv;  // empty: split train_csv with n_train
  std::string target = "y";
  Task task = Task::binary;
  bool minmax = false;
  ConstantColumnPolicy constant_columns = ConstantColumnPolicy::error;
  bool standardize_target = false;
};

struct EvalConfig {
  std::size_t mc_samples = 100;
  std::size_t ece_bins = 10;
  std::vector<double> pinball_levels;
};

struct ExperimentConfig {
  std::string tag = "experiment";
  DatasetConfig data;
  ModelKind kind = ModelKind::islab_lrt;
  NetworkSpec spec;
  TrainConfig train;
  std::size_t n_seeds = 1;
  std::uint64_t base_seed = 0;
  EvalConfig eval;
  std::string out_dir = ".";

  std::uint64_t seed(std::size_t k) const { return base_seed + k; }
};

// Throws ConfigError naming the offending field. Relative CSV paths resolve
// against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

struct Splits {
  Dataset train;
  Dataset test;
};

Splits build_data(const ExperimentConfig& cfg);

// Per-seed seeds for initialization, training and evaluation draws.
std::uint64_t init_seed(std::uint64_t seed);
std::uint64_t train_seed(std::uint64_t seed);
std::uint64_t eval_seed(std::uint64_t seed);

struct SeedRun {
  Network net;
  TrainLog log;
};

SeedRun train_one(const ExperimentConfig& cfg, const Dataset& train_set, std::size_t k,
                  const EpochCallback& on_epoch = {});

std::string model_filename(const ExperimentConfig& cfg, std::size_t k);
std::string log_filename(const ExperimentConfig& cfg, std::size_t k);
std::string results_filename(const ExperimentConfig& cfg);

struct ResultRow {
  std::string dataset;
  std::string model;
  std::string variant;
  std::string metric;
  std::string value;
  std::string seed;
};

// Task metrics for the full and sparse variants, plus structure summaries of
// the sparse model.
std::vector<ResultRow> evaluate(const ExperimentConfig& cfg, const Network& net,
                                const Dataset& test, std::size_t k);

// "median (min, max)" per (variant, metric), plus mean inclusion rates.
std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows);

std::string format_number(double v);
std::string format_summary(std::vector<double> values);

void write_results(const std::vector<ResultRow>& rows, std::ostream& out);

// Looks up a per-seed value; throws if absent.
double result_value(const std::vector<ResultRow>& rows, std::string_view variant,
                    std::string_view metric, std::string_view seed);

}  // namespace islab

#endif  // ISLAB_EXPERIMENT_HPP
