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

#include "islab/explain.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "islab/errors.hpp"

namespace islab {

namespace {

struct FrozenPass {
  double zeta = 0.0;
  std::vector<std::vector<std::uint8_t>> on;  // ReLU pattern per hidden layer
};

void check_inputs(const NetworkSpec& spec, const WeightSample& weights,
                  std::span<const double> x, std::size_t output) {
  require_piecewise_linear(spec);
  if (weights.layers.size() != spec.depth())
    throw std::invalid_argument("explain: weight sample does not match the network");
  if (x.size() != spec.n_covariates)
    throw std::invalid_argument("explain: input has " + std::to_string(x.size()) +
                                " values, model expects " + std::to_string(spec.n_covariates));
  if (output >= spec.n_outputs) throw std::invalid_argument("explain: output index out of range");
}

FrozenPass record_pattern(const WeightSample& weights, std::span<const double> x,
                          std::size_t output) {
  FrozenPass pass;
  Vector hidden;
  for (std::size_t j = 0; j < weights.layers.size(); ++j) {
    Vector input = hidden;
    input.insert(input.end(), x.begin(), x.end());
    Vector pre = matvec(weights.layers[j].weight, input);
    for (std::size_t p = 0; p < pre.size(); ++p) pre[p] += weights.layers[j].bias[p];
    if (j + 1 == weights.layers.size()) {
      pass.zeta = pre[output];
    } else {
      std::vector<std::uint8_t> on(pre.size());
      hidden.assign(pre.size(), 0.0);
      for (std::size_t p = 0; p < pre.size(); ++p) {
        on[p] = pre[p] > 0.0 ? 1 : 0;
        hidden[p] = on[p] ? pre[p] : 0.0;
      }
      pass.on.push_back(std::move(on));
    }
  }
  return pass;
}

// Linear propagation through the frozen pattern using kept edges only.
double propagate(const WeightSample& weights, const ActivePathGraph& graph,
                 const FrozenPass& pass, std::span<const double> x, bool with_bias,
                 std::size_t output) {
  Vector hidden;
  for (std::size_t j = 0; j < weights.layers.size(); ++j) {
    const DenseLayer& layer = weights.layers[j];
    const LayerMask& kept = graph.kept.layers[j];
    const bool last = j + 1 == weights.layers.size();
    Vector next(layer.weight.rows(), 0.0);
    for (std::size_t p = 0; p < next.size(); ++p) {
      if (last && p != output) continue;
      double s = with_bias ? layer.bias[p] : 0.0;
      for (std::size_t k = 0; k < layer.weight.cols(); ++k) {
        if (!with_bias && !kept(p, k)) continue;
        const double a = k < layer.hidden_inputs ? hidden[k] : x[k - layer.hidden_inputs];
        s += layer.weight(p, k) * a;
      }
      next[p] = last ? s : (pass.on[j][p] ? s : 0.0);
    }
    if (last) return next[output];
    hidden = std::move(next);
  }
  return 0.0;
}

Interval summarize(const Vector& values) {
  Interval out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  out.lower = quantile(values, 0.025);
  out.upper = quantile(values, 0.975);
  // quantile interpolation can land a rounding step outside the mean for
  // near-constant samples
  out.lower = std::min(out.lower, out.mean);
  out.upper = std::max(out.upper, out.mean);
  return out;
}

nlohmann::json interval_json(const Interval& iv) {
  return {{"mean", iv.mean}, {"lower", iv.lower}, {"upper", iv.upper}};
}

}  // namespace

void require_piecewise_linear(const NetworkSpec& spec) {
  if (!spec.hidden_widths.empty() && spec.activation != Activation::relu)
    throw ConfigError("piecewise-linear activation required for local explanations (model uses " +
                      to_string(spec.activation) + ")");
}

LocalExplanation local_explain_empirical(const NetworkSpec& spec, const StructureMask& mask,
                                         const WeightSample& weights, std::span<const double> x,
                                         std::size_t output) {
  check_inputs(spec, weights, x, output);
  const ActivePathGraph graph = active_paths(mask);
  const FrozenPass pass = record_pattern(weights, x, output);

  LocalExplanation out;
  out.linear_predictor = pass.zeta;
  out.slopes.assign(x.size(), 0.0);
  Vector one_hot(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    one_hot[i] = x[i];
    out.slopes[i] = propagate(weights, graph, pass, one_hot, false, output) / x[i];
    one_hot[i] = 0.0;
  }
  out.intercept = propagate(weights, graph, pass, one_hot, true, output);
  return out;
}

LocalExplanation local_explain_gradient(const NetworkSpec& spec, const StructureMask& mask,
                                        const WeightSample& weights, std::span<const double> x,
                                        std::size_t output) {
  check_inputs(spec, weights, x, output);
  (void)mask;  // excluded edges already carry zero weight
  const FrozenPass pass = record_pattern(weights, x, output);

  const std::size_t J = weights.layers.size();
  Vector grad_x(x.size(), 0.0);
  Vector g(weights.layers.back().weight.rows(), 0.0);
  g[output] = 1.0;
  for (std::size_t j = J; j-- > 0;) {
    const DenseLayer& layer = weights.layers[j];
    Vector g_prev(layer.hidden_inputs, 0.0);
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (g[p] == 0.0) continue;
      for (std::size_t k = 0; k < layer.weight.cols(); ++k) {
        const double d = g[p] * layer.weight(p, k);
        if (k < layer.hidden_inputs)
          g_prev[k] += d;
        else
          grad_x[k - layer.hidden_inputs] += d;
      }
    }
    if (j > 0)
      for (std::size_t k = 0; k < g_prev.size(); ++k)
        if (!pass.on[j - 1][k]) g_prev[k] = 0.0;
    g = std::move(g_prev);
  }

  LocalExplanation out;
  out.linear_predictor = pass.zeta;
  out.slopes.assign(x.size(), 0.0);
  double explained = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    out.slopes[i] = grad_x[i];
    explained += grad_x[i] * x[i];
  }
  out.intercept = pass.zeta - explained;
  return out;
}

StructureMask explanation_mask(const Network& net) {
  return net.variational() ? extract_mpm(net) : threshold_mask(net);
}

ExplanationReport explain_with_uncertainty(const Network& net, std::span<const double> x,
                                           std::size_t n_samples, Rng& rng,
                                           std::size_t output) {
  if (n_samples < 1) throw std::invalid_argument("explain: need at least one sample");
  require_piecewise_linear(net.spec);
  const StructureMask mask = explanation_mask(net);

  ExplanationReport r;
  r.output = output;
  r.x.assign(x.begin(), x.end());
  r.zeroed.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.zeroed[i] = x[i] == 0.0;

  Matrix row(1, x.size());
  std::copy(x.begin(), x.end(), row.row(0).begin());
  for (std::size_t s = 0; s < n_samples; ++s) {
    const WeightSample w =
        net.variational() ? draw_weights(net, mask, true, rng) : l1_weights(net, &mask);
    const LocalExplanation e = local_explain_gradient(net.spec, mask, w, x, output);
    r.slope_samples.push_back(e.slopes);
    r.intercept_samples.push_back(e.intercept);
    r.predictor_samples.push_back(e.linear_predictor);
    const Matrix logits = dense_network_forward(net.spec, w, row);
    const Matrix params = output_params(net.spec, logits);
    r.prediction_samples.push_back(params(0, output));
  }

  for (std::size_t i = 0; i < x.size(); ++i) {
    Vector column(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) column[s] = r.slope_samples[s][i];
    r.slopes.push_back(summarize(column));
  }
  r.intercept = summarize(r.intercept_samples);
  r.predictor = summarize(r.predictor_samples);
  r.prediction = summarize(r.prediction_samples);
  return r;
}

nlohmann::json to_json(const ExplanationReport& r) {
  using nlohmann::json;
  json coefs = json::array();
  for (std::size_t i = 0; i < r.slopes.size(); ++i) {
    const std::string name =
        i < r.covariate_names.size() ? r.covariate_names[i] : "x" + std::to_string(i + 1);
    json c = interval_json(r.slopes[i]);
    c["name"] = name;
    c["x"] = r.x[i];
    c["zeroed"] = static_cast<bool>(r.zeroed[i]);
    coefs.push_back(std::move(c));
  }
  return {{"output", r.output},
          {"samples", r.samples()},
          {"coefficients", std::move(coefs)},
          {"intercept", interval_json(r.intercept)},
          {"linear_predictor", interval_json(r.predictor)},
          {"prediction", interval_json(r.prediction)}};
}

GlobalExplanation global_explain(const Network& net) {
  const StructureMask mask = explanation_mask(net);
  GlobalExplanation g;
  g.graph = active_paths(mask);
  const std::size_t J = net.spec.depth();
  const std::size_t v = net.spec.n_covariates;
  for (std::size_t o = 0; o < net.spec.n_outputs; ++o) {
    const ActivePathGraph restricted = active_paths(mask, o);
    Matrix map(J, v);
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t d : restricted.depths[i]) map(J - d, i) = 1.0;
    g.maps.push_back(std::move(map));
  }
  return g;
}

void write_covariate_maps(const GlobalExplanation& g, std::ostream& out) {
  if (g.maps.empty()) return;
  out << "output,layer";
  for (std::size_t i = 0; i < g.maps.front().cols(); ++i) out << ",x" << i + 1;
  out << '\n';
  for (std::size_t o = 0; o < g.maps.size(); ++o)
    for (std::size_t j = 0; j < g.maps[o].rows(); ++j) {
      out << o << ',' << j;
      for (double v : g.maps[o].row(j)) out << ',' << v;
      out << '\n';
    }
}

}  // namespace islab
