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

// Command-line driver: train, eval, paths, explain, gen-data, run.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "islab/errors.hpp"
#include "islab/experiment.hpp"
#include "islab/explain.hpp"
#include "islab/structure.hpp"

namespace fs = std::filesystem;
using namespace islab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::string model;
  std::string input;
  std::optional<std::size_t> row;
  std::size_t output = 0;
  bool quiet = false;
};

ExperimentConfig configure(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required for this command");
  ExperimentConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.samples) {
    if (*o.samples < 1) throw ConfigError("--samples must be >= 1");
    cfg.eval.mc_samples = *o.samples;
  }
  return cfg;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << contents;
}

void cmd_train(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  const Splits data = build_data(cfg);
  for (std::size_t k = 0; k < cfg.n_seeds; ++k) {
    if (!o.quiet)
      std::cerr << cfg.tag << ": training seed " << cfg.seed(k) << " (" << k + 1 << "/"
                << cfg.n_seeds << ")\n";
    EpochCallback progress;
    if (!o.quiet)
      progress = [&](const EpochRecord& r) {
        if (r.epoch % 10 == 0 || r.epoch == cfg.train.epochs)
          std::cerr << "  epoch " << r.epoch << " loss " << r.loss << " metric " << r.metric
                    << '\n';
      };
    const SeedRun run = train_one(cfg, data.train, k, progress);
    save_network(run.net, out_path(cfg, model_filename(cfg, k)).string());
    std::ostringstream log;
    run.log.write_csv(log);
    write_file(out_path(cfg, log_filename(cfg, k)), log.str());
  }
}

std::vector<ResultRow> eval_rows(const ExperimentConfig& cfg, const Splits& data) {
  std::vector<ResultRow> rows;
  for (std::size_t k = 0; k < cfg.n_seeds; ++k) {
    const fs::path path = fs::path(cfg.out_dir) / model_filename(cfg, k);
    if (!fs::exists(path))
      throw std::runtime_error("model file '" + path.string() + "' not found; run train first");
    const Network net = load_network(path.string());
    const auto seed_rows = evaluate(cfg, net, data.test, k);
    rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
  }
  const auto agg = aggregate(rows);
  rows.insert(rows.end(), agg.begin(), agg.end());
  return rows;
}

void cmd_eval(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  const Splits data = build_data(cfg);
  std::ostringstream csv;
  write_results(eval_rows(cfg, data), csv);
  write_file(out_path(cfg, results_filename(cfg)), csv.str());
  std::cout << csv.str();
}

void cmd_run(const Options& o) {
  cmd_train(o);
  cmd_eval(o);
}

void cmd_gen_data(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  const Splits data = build_data(cfg);
  save_csv(data.train, out_path(cfg, cfg.tag + "_train.csv").string());
  save_csv(data.test, out_path(cfg, cfg.tag + "_test.csv").string());
}

void cmd_paths(const Options& o) {
  if (o.model.empty()) throw ConfigError("--model is required for paths");
  const Network net = load_network(o.model);
  const GlobalExplanation g = global_explain(net);
  const std::string dot = to_dot(g.graph, net);
  const std::string json = to_json(g.graph, net).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << dot << json;
    return;
  }
  fs::create_directories(o.out);
  const std::string stem = fs::path(o.model).stem().string();
  write_file(fs::path(o.out) / (stem + "_paths.dot"), dot);
  write_file(fs::path(o.out) / (stem + "_paths.json"), json);
  std::ostringstream maps;
  write_covariate_maps(g, maps);
  write_file(fs::path(o.out) / (stem + "_maps.csv"), maps.str());
}

std::vector<double> parse_row(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw ConfigError("--input: '" + cell + "' is not a number");
    out.push_back(v);
  }
  return out;
}

void cmd_explain(const Options& o) {
  if (o.model.empty()) throw ConfigError("--model is required for explain");
  const Network net = load_network(o.model);
  std::vector<double> x;
  std::vector<std::string> names;
  if (!o.input.empty()) {
    x = parse_row(o.input);
  } else if (o.row) {
    const ExperimentConfig cfg = configure(o);
    const Splits data = build_data(cfg);
    if (*o.row >= data.test.size()) throw ConfigError("--row is past the end of the test set");
    const auto r = data.test.x.row(*o.row);
    x.assign(r.begin(), r.end());
    names = data.test.columns;
  } else {
    throw ConfigError("explain needs --input or --config with --row");
  }
  const std::size_t n = o.samples.value_or(100);
  if (n < 1) throw ConfigError("--samples must be >= 1");
  Rng rng(o.seed.value_or(0));
  ExplanationReport report = explain_with_uncertainty(net, x, n, rng, o.output);
  report.covariate_names = names;
  const std::string json = to_json(report).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << json;
  } else {
    fs::create_directories(fs::path(o.out).parent_path().empty() ? "." : fs::path(o.out).parent_path());
    write_file(o.out, json);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"islab: sparse input-skip Bayesian neural networks"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--out", o.out, "output directory (or file for explain)");
    sub->add_option("--seed", o.seed, "base seed override");
    sub->add_option("--samples", o.samples, "Monte Carlo samples");
    sub->add_flag("--quiet", o.quiet, "suppress progress output");
  };

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&);
  };
  const Command commands[] = {
      {"train", "train one model per seed", cmd_train},
      {"eval", "evaluate trained models and write the results table", cmd_eval},
      {"run", "train then eval", cmd_run},
      {"paths", "export the active-path graph of a model", cmd_paths},
      {"explain", "local explanation with credible intervals", cmd_explain},
      {"gen-data", "write the configured train/test data as CSV", cmd_gen_data},
  };
  void (*selected)(const Options&) = nullptr;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (std::string(c.name) == "paths" || std::string(c.name) == "explain")
      sub->add_option("--model", o.model, "model file");
    if (std::string(c.name) == "explain") {
      sub->add_option("--input", o.input, "comma-separated covariate values");
      sub->add_option("--row", o.row, "test-set row index (with --config)");
      sub->add_option("--output", o.output, "output node to explain");
    }
    sub->callback([&selected, run = c.run] { selected = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    selected(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
