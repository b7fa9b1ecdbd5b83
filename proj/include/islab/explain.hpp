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

#ifndef ISLAB_EXPLAIN_HPP
#define ISLAB_EXPLAIN_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "islab/network.hpp"
#include "islab/structure.hpp"

namespace islab {

// zeta(x) = intercept + sum_j slopes[j] * x[j] for one output node.
struct LocalExplanation {
  double intercept = 0.0;
  Vector slopes;
  double linear_predictor = 0.0;
};

// Throws ConfigError unless every hidden layer is piecewise linear (ReLU).
void require_piecewise_linear(const NetworkSpec& spec);

// Propagates each e_i * x_i through the network with the ReLU pattern of x
// frozen, biases zeroed and only active-path edges kept. The intercept is the
// bias-only propagation through the same frozen network. Slopes of covariates
// with x_i = 0 are reported as 0.
LocalExplanation local_explain_empirical(const NetworkSpec& spec, const StructureMask& mask,
                                         const WeightSample& weights, std::span<const double> x,
                                         std::size_t output = 0);

// Slopes are the input gradient of the linear predictor, zeroed where
// x_i = 0; intercept = zeta(x) - sum slopes * x.
LocalExplanation local_explain_gradient(const NetworkSpec& spec, const StructureMask& mask,
                                        const WeightSample& weights, std::span<const double> x,
                                        std::size_t output = 0);

struct Interval {
  double mean = 0.0;
  double lower = 0.0;  // 0.025 empirical quantile
  double upper = 0.0;  // 0.975 empirical quantile
};

struct ExplanationReport {
  std::size_t output = 0;
  Vector x;
  std::vector<std::string> covariate_names;
  std::vector<Vector> slope_samples;  // N x v
  Vector intercept_samples;
  Vector predictor_samples;  // sampled zeta(x)
  Vector prediction_samples;  // head output (probability or mean) for `output`
  std::vector<Interval> slopes;
  Interval intercept;
  Interval predictor;
  Interval prediction;
  std::vector<bool> zeroed;  // x_i == 0, slope forced to 0

  std::size_t samples() const { return intercept_samples.size(); }
};

// N weight draws conditional on the median probability model (or the pruned
// L1 weights), one gradient explanation per draw.
ExplanationReport explain_with_uncertainty(const Network& net, std::span<const double> x,
                                           std::size_t n_samples, Rng& rng,
                                           std::size_t output = 0);

nlohmann::json to_json(const ExplanationReport& report);

// Sparse structure used for explanations: MPM or thresholded L1 weights.
StructureMask explanation_mask(const Network& net);

struct GlobalExplanation {
  ActivePathGraph graph;
  // maps[o](j, i) = 1 iff covariate i enters layer j on an active path to output o.
  std::vector<Matrix> maps;
};

GlobalExplanation global_explain(const Network& net);

// One row per (output, entry layer): output,layer,<v map values>.
void write_covariate_maps(const GlobalExplanation& g, std::ostream& out);

}  // namespace islab

#endif  // ISLAB_EXPLAIN_HPP
