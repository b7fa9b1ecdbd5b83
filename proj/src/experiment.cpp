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

#include "islab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "islab/errors.hpp"
#include "islab/metrics.hpp"
#include "islab/structure.hpp"

namespace islab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::islab_lrt: return "islab-lrt";
    case ModelKind::blr: return "blr";
    case ModelKind::is_ann_l1: return "is-ann-l1";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "islab-lrt") return ModelKind::islab_lrt;
  if (name == "blr") return ModelKind::blr;
  if (name == "is-ann-l1") return ModelKind::is_ann_l1;
  throw std::invalid_argument("unknown model type '" + std::string(name) +
                              "' (expected islab-lrt, blr or is-ann-l1)");
}

namespace {

// Typed access to one JSON object with field-path diagnostics and a check
// for unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  T get(const char* key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const char* key) {
    if (!has(key)) throw ConfigError("missing required field '" + where(key) + "'");
    return convert<T>(key);
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  std::string where(const char* key) const {
    if (path_.empty()) return key;
    return *key ? path_ + "." + key : path_;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown field '" + where(key.c_str()) + "'");
  }

  // Wraps parse_* helpers so their messages carry the field path.
  template <typename F>
  auto parse(const char* key, const std::string& text, F f) const {
    try {
      return f(text);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("field '" + where(key) + "': " + e.what());
    }
  }

 private:
  template <typename T>
  T convert(const char* key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field '" + where(key) + "' has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::pair<double, double> range(Section& s, const char* key, std::pair<double, double> fallback) {
  if (!s.has(key)) return fallback;
  const auto v = s.get<std::vector<double>>(key, {});
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() != 2 || v[0] > v[1])
    throw ConfigError("field '" + s.where(key) + "' must be [min, max] or [value]");
  return {v[0], v[1]};
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).string();
}

Likelihood likelihood_for(Task t) {
  switch (t) {
    case Task::binary: return Likelihood::bernoulli;
    case Task::multiclass: return Likelihood::categorical;
    case Task::regression: return Likelihood::gaussian;
  }
  return Likelihood::bernoulli;
}

std::string task_name(Likelihood l) {
  return l == Likelihood::gaussian ? "regression" : "classification";
}

// Binary heads keep one column, P(y = 1).
Matrix mean_params(const std::vector<Matrix>& draws) {
  Matrix mean(draws.front().rows(), draws.front().cols());
  for (const Matrix& d : draws)
    for (std::size_t i = 0; i < d.size(); ++i) mean.flat()[i] += d.flat()[i];
  for (double& v : mean.flat()) v /= static_cast<double>(draws.size());
  return mean;
}

}  // namespace

ExperimentConfig parse_config(const json& root, const std::string& base_dir) {
  ExperimentConfig cfg;
  Section top(root, "");
  cfg.tag = top.get<std::string>("tag", cfg.tag);
  if (cfg.tag.empty() || cfg.tag.find_first_of("/\\") != std::string::npos)
    throw ConfigError("field 'tag' must be a non-empty file-name-safe string");
  cfg.n_seeds = top.get<std::size_t>("n_seeds", 1);
  if (cfg.n_seeds < 1) throw ConfigError("field 'n_seeds' must be >= 1");
  cfg.base_seed = top.get<std::uint64_t>("base_seed", 0);
  cfg.out_dir = resolve(base_dir, top.get<std::string>("out_dir", "."));

  {
    Section d = top.child("dataset");
    DatasetConfig& dc = cfg.data;
    dc.generator = d.require<std::string>("generator");
    dc.name = d.get<std::string>("name", dc.generator);
    if (dc.generator == "linear" || dc.generator == "nonlinear") {
      dc.n_train = d.require<std::size_t>("n_train");
      dc.n_test = d.require<std::size_t>("n_test");
      dc.rho = d.get<double>("rho", 0.0);
      dc.seed = d.get<std::uint64_t>("seed", 0);
      dc.task = Task::binary;
      if (dc.n_train < 1 || dc.n_test < 1)
        throw ConfigError("fields 'dataset.n_train' and 'dataset.n_test' must be >= 1");
      if (!(dc.rho >= 0.0 && dc.rho <= 1.0)) throw ConfigError("field 'dataset.rho' outside [0, 1]");
    } else if (dc.generator == "csv") {
      dc.train_csv = resolve(base_dir, d.require<std::string>("train"));
      dc.test_csv = resolve(base_dir, d.get<std::string>("test", ""));
      dc.target = d.get<std::string>("target", dc.target);
      dc.task = d.parse("task", d.require<std::string>("task"), parse_task);
      dc.n_train = d.get<std::size_t>("n_train", 0);
      dc.seed = d.get<std::uint64_t>("seed", 0);
      dc.minmax = d.get<bool>("minmax", false);
      const std::string policy = d.get<std::string>("constant_columns", "error");
      if (policy == "drop")
        dc.constant_columns = ConstantColumnPolicy::drop;
      else if (policy != "error")
        throw ConfigError("field 'dataset.constant_columns' must be 'error' or 'drop'");
      dc.standardize_target = d.get<bool>("standardize_target", dc.task == Task::regression);
      if (!fs::exists(dc.train_csv))
        throw ConfigError("field 'dataset.train': file '" + dc.train_csv + "' does not exist");
      if (!dc.test_csv.empty() && !fs::exists(dc.test_csv))
        throw ConfigError("field 'dataset.test': file '" + dc.test_csv + "' does not exist");
      if (dc.test_csv.empty() && dc.n_train == 0)
        throw ConfigError("field 'dataset.n_train' is required when no test file is given");
    } else {
      throw ConfigError("field 'dataset.generator' must be linear, nonlinear or csv");
    }
    d.finish();
  }

  {
    Section m = top.child("model");
    NetworkSpec& s = cfg.spec;
    cfg.kind = m.parse("type", m.require<std::string>("type"), parse_model_kind);
    s.mode = cfg.kind == ModelKind::is_ann_l1 ? ModelMode::deterministic_l1 : ModelMode::variational;
    s.hidden_widths = m.get<std::vector<std::size_t>>("hidden", {});
    if (cfg.kind == ModelKind::blr && !s.hidden_widths.empty())
      throw ConfigError("field 'model.hidden' must be empty for blr");
    if (cfg.kind != ModelKind::blr && s.hidden_widths.empty())
      throw ConfigError("field 'model.hidden' must list at least one layer width");
    s.activation = m.parse("activation", m.get<std::string>("activation", "sigmoid"),
                           parse_activation);
    s.likelihood = likelihood_for(cfg.data.task);
    if (m.has("likelihood")) {
      const Likelihood l =
          m.parse("likelihood", m.get<std::string>("likelihood", ""), parse_likelihood);
      if (l != s.likelihood)
        throw ConfigError("field 'model.likelihood': '" + to_string(l) + "' does not fit a " +
                          to_string(cfg.data.task) + " task");
    }
    s.noise_variance = m.get<double>("noise_variance", 1.0);
    s.prior.prior_std = m.get<double>("prior_std", s.prior.prior_std);
    s.prior.psi = m.get<double>("psi", s.prior.psi);
    s.sigma_init = m.get<double>("sigma_init", s.sigma_init);
    s.mu_init = m.get<double>("mu_init", s.mu_init);
    Section li = m.child("lambda_init");
    const auto hidden = range(li, "hidden", {s.inclusion_init.hidden_min, s.inclusion_init.hidden_max});
    const auto cov =
        range(li, "covariate", {s.inclusion_init.covariate_min, s.inclusion_init.covariate_max});
    li.finish();
    s.inclusion_init = {hidden.first, hidden.second, cov.first, cov.second};
    Section l1 = m.child("l1");
    s.l1.lambda_reg = l1.get<double>("lambda", s.l1.lambda_reg);
    s.l1.prune_threshold = l1.get<double>("threshold", s.l1.prune_threshold);
    l1.finish();
    m.finish();
  }

  {
    Section t = top.child("train");
    TrainConfig& tc = cfg.train;
    tc.lr = t.require<double>("lr");
    tc.epochs = t.require<std::size_t>("epochs");
    tc.iters_per_epoch = t.require<std::size_t>("iters_per_epoch");
    tc.n_train_mc_samples = t.get<std::size_t>("mc_samples", 1);
    tc.adam.beta1 = t.get<double>("beta1", tc.adam.beta1);
    tc.adam.beta2 = t.get<double>("beta2", tc.adam.beta2);
    tc.adam.epsilon = t.get<double>("epsilon", tc.adam.epsilon);
    t.finish();
    if (!(tc.lr > 0.0)) throw ConfigError("field 'train.lr' must be > 0");
    tc.validate();
  }

  {
    Section e = top.child("eval");
    cfg.eval.mc_samples = e.get<std::size_t>("mc_samples", cfg.eval.mc_samples);
    cfg.eval.ece_bins = e.get<std::size_t>("ece_bins", cfg.eval.ece_bins);
    cfg.eval.pinball_levels = e.get<std::vector<double>>("pinball_levels", default_pinball_levels());
    e.finish();
    if (cfg.eval.mc_samples < 1) throw ConfigError("field 'eval.mc_samples' must be >= 1");
    if (cfg.eval.ece_bins < 1) throw ConfigError("field 'eval.ece_bins' must be >= 1");
    for (double tau : cfg.eval.pinball_levels)
      if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("field 'eval.pinball_levels' outside (0, 1)");
  }
  top.finish();

  // Shape checks that do not need the data yet.
  NetworkSpec probe = cfg.spec;
  probe.n_covariates = 1;
  probe.n_outputs = probe.likelihood == Likelihood::categorical ? 2 : 1;
  try {
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field 'model': ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string());
}

Splits build_data(const ExperimentConfig& cfg) {
  const DatasetConfig& dc = cfg.data;
  Splits out;
  if (dc.generator == "linear" || dc.generator == "nonlinear") {
    const std::size_t n = dc.n_train + dc.n_test;
    Dataset all = dc.generator == "linear" ? gen_linear(n, dc.rho, dc.seed)
                                           : gen_nonlinear(n, dc.rho, dc.seed);
    auto [train, test] = split(all, dc.n_train, mix_seed(dc.seed, 0x73706c6974));
    out.train = std::move(train);
    out.test = std::move(test);
  } else {
    Dataset train = load_csv(dc.train_csv, dc.target, dc.task);
    if (dc.test_csv.empty()) {
      auto [tr, te] = split(train, dc.n_train, dc.seed);
      out.train = std::move(tr);
      out.test = std::move(te);
    } else {
      out.train = std::move(train);
      out.test = load_csv(dc.test_csv, dc.target, dc.task);
      if (out.test.covariates() != out.train.covariates())
        throw ConfigError("dataset.test has a different number of columns than dataset.train");
      if (dc.task == Task::multiclass)
        out.train.n_classes = out.test.n_classes =
            std::max(out.train.n_classes, out.test.n_classes);
    }
  }
  if (dc.minmax) {
    auto [scaled, record] = minmax_scale(out.train, dc.constant_columns);
    out.train = std::move(scaled);
    out.test = apply_scaling(out.test, record);
  }
  if (dc.standardize_target && dc.task == Task::regression) {
    const TargetScaling ts = fit_target_scaling(out.train.y);
    for (Dataset* ds : {&out.train, &out.test}) {
      for (double& v : ds->y) v = (v - ts.mean) / ts.stddev;
      ds->target_scaling = ts;
    }
  }
  return out;
}

std::uint64_t init_seed(std::uint64_t seed) { return mix_seed(seed, 0x696e6974); }
std::uint64_t train_seed(std::uint64_t seed) { return mix_seed(seed, 0x747261696e); }
std::uint64_t eval_seed(std::uint64_t seed) { return mix_seed(seed, 0x6576616c); }

SeedRun train_one(const ExperimentConfig& cfg, const Dataset& train_set, std::size_t k,
                  const EpochCallback& on_epoch) {
  NetworkSpec spec = cfg.spec;
  spec.n_covariates = train_set.covariates();
  spec.n_outputs = spec.likelihood == Likelihood::categorical ? train_set.n_classes : 1;
  SeedRun run;
  run.net = make_network(spec, init_seed(cfg.seed(k)));
  TrainConfig tc = cfg.train;
  tc.seed = train_seed(cfg.seed(k));
  run.log = train(run.net, train_set, tc, on_epoch);
  return run;
}

std::string model_filename(const ExperimentConfig& cfg, std::size_t k) {
  return cfg.tag + "_seed" + std::to_string(k) + ".model";
}

std::string log_filename(const ExperimentConfig& cfg, std::size_t k) {
  return cfg.tag + "_seed" + std::to_string(k) + "_log.csv";
}

std::string results_filename(const ExperimentConfig& cfg) { return cfg.tag + "_results.csv"; }

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_summary(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("format_summary: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double low = *lo, high = *hi;
  auto fmt = [](double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  return fmt(median(std::move(values))) + " (" + fmt(low) + ", " + fmt(high) + ")";
}

std::vector<ResultRow> evaluate(const ExperimentConfig& cfg, const Network& net,
                                const Dataset& test, std::size_t k) {
  const NetworkSpec& spec = net.spec;
  if (test.covariates() != spec.n_covariates)
    throw std::invalid_argument("model expects " + std::to_string(spec.n_covariates) +
                                " covariates but the test data has " +
                                std::to_string(test.covariates()));
  if (spec.mode != cfg.spec.mode || spec.hidden_widths != cfg.spec.hidden_widths ||
      spec.likelihood != cfg.spec.likelihood)
    throw std::invalid_argument("model file does not match the configured model");

  const std::string seed = std::to_string(cfg.seed(k));
  std::vector<ResultRow> rows;
  auto emit = [&](const std::string& variant, const std::string& metric, double value) {
    rows.push_back({cfg.data.name, to_string(cfg.kind), variant, metric, format_number(value), seed});
  };

  const StructureMask mask = net.variational() ? extract_mpm(net) : threshold_mask(net);
  Rng rng(eval_seed(cfg.seed(k)));
  const std::size_t S = net.variational() ? cfg.eval.mc_samples : 1;

  for (const std::string variant : {"full", "sparse"}) {
    const StructureMask* m = variant == "sparse" ? &mask : nullptr;
    const std::vector<Matrix> draws = predictive_samples(net, test.x, S, rng, m);
    const Matrix mean = mean_params(draws);
    if (task_name(spec.likelihood) == "classification") {
      emit(variant, "accuracy", accuracy(mean, test.y));
      emit(variant, "ece", ece(mean, test.y, cfg.eval.ece_bins));
      emit(variant, "nll", mean_nll(spec, mean, test.y));
    } else {
      // metrics on the original target scale
      const TargetScaling ts = test.target_scaling.value_or(TargetScaling{});
      auto unscale = [&](double v) { return v * ts.stddev + ts.mean; };
      Vector pred(test.size()), y(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        pred[i] = unscale(mean(i, 0));
        y[i] = unscale(test.y[i]);
      }
      NetworkSpec original = spec;
      original.noise_variance = spec.noise_variance * ts.stddev * ts.stddev;
      Matrix pred_params(test.size(), 1);
      std::copy(pred.begin(), pred.end(), pred_params.flat().begin());
      emit(variant, "rmse", rmse(pred, y));
      emit(variant, "pearson", pearson(pred, y));
      emit(variant, "nll", mean_nll(original, pred_params, y));
      // predictive draws include the observation noise
      const auto& taus = cfg.eval.pinball_levels;
      Matrix q(test.size(), taus.size());
      const double noise_sd = std::sqrt(spec.noise_variance);
      for (std::size_t i = 0; i < test.size(); ++i) {
        std::vector<double> ys(draws.size());
        for (std::size_t s = 0; s < draws.size(); ++s)
          ys[s] = unscale(gauss_sample(rng, draws[s](i, 0), noise_sd));
        for (std::size_t t = 0; t < taus.size(); ++t) q(i, t) = quantile(ys, taus[t]);
      }
      emit(variant, "pinball", pinball(q, y, taus));
    }
  }

  const ActivePathGraph graph = active_paths(mask);
  const DepthSummary depth = depth_metrics(graph);
  emit("sparse", "used_weights", static_cast<double>(graph.used_weights));
  emit("sparse", "density", graph.density());
  emit("sparse", "avg_depth", depth.avg_depth);
  emit("sparse", "max_depth", static_cast<double>(depth.max_depth));
  const std::vector<bool> incl = covariate_inclusion(graph);
  // per-covariate rows only for narrow inputs; image data would add hundreds
  if (incl.size() <= 32)
    for (std::size_t i = 0; i < incl.size(); ++i) {
      const std::string name =
          i < test.columns.size() ? test.columns[i] : "x" + std::to_string(i + 1);
      emit("sparse", "incl_" + name, incl[i] ? 1.0 : 0.0);
    }
  else
    emit("sparse", "covariates_included",
         static_cast<double>(std::count(incl.begin(), incl.end(), true)));
  return rows;
}

std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  std::map<std::pair<std::string, std::string>, const ResultRow*> first;
  for (const ResultRow& r : rows) {
    const auto key = std::make_pair(r.variant, r.metric);
    if (!values.count(key)) {
      order.push_back(key);
      first[key] = &r;
    }
    values[key].push_back(std::stod(r.value));
  }
  std::vector<ResultRow> out;
  for (const auto& key : order) {
    const ResultRow& f = *first[key];
    const std::vector<double>& v = values[key];
    out.push_back({f.dataset, f.model, f.variant, f.metric, format_summary(v), "median (min, max)"});
    if (f.metric.rfind("incl_", 0) == 0) {
      double sum = 0.0;
      for (double x : v) sum += x;
      out.push_back({f.dataset, f.model, f.variant, f.metric,
                     format_number(sum / static_cast<double>(v.size())), "rate"});
    }
  }
  return out;
}

void write_results(const std::vector<ResultRow>& rows, std::ostream& out) {
  auto quote = [](const std::string& s) {
    return s.find_first_of(",\"") == std::string::npos ? s : "\"" + s + "\"";
  };
  out << "dataset,model,variant,metric,value,seed\n";
  for (const ResultRow& r : rows)
    out << quote(r.dataset) << ',' << quote(r.model) << ',' << r.variant << ',' << quote(r.metric)
        << ',' << quote(r.value) << ',' << quote(r.seed) << '\n';
}

double result_value(const std::vector<ResultRow>& rows, std::string_view variant,
                    std::string_view metric, std::string_view seed) {
  for (const ResultRow& r : rows)
    if (r.variant == variant && r.metric == metric && r.seed == seed) return std::stod(r.value);
  throw std::out_of_range("no result for " + std::string(variant) + "/" + std::string(metric) +
                          " seed " + std::string(seed));
}

}  // namespace islab
