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

#ifndef ISLAB_NETWORK_HPP
#define ISLAB_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "islab/core_math.hpp"
#include "islab/variational_layer.hpp"

namespace islab {

enum class Activation { sigmoid, relu };
enum class Likelihood { bernoulli, categorical, gaussian };
enum class ModelMode { variational, deterministic_l1 };

std::string to_string(Activation a);
std::string to_string(Likelihood l);
std::string to_string(ModelMode m);
// Throw std::invalid_argument on unknown names.
Activation parse_activation(std::string_view name);
Likelihood parse_likelihood(std::string_view name);
ModelMode parse_mode(std::string_view name);

struct L1Settings {
  double lambda_reg = 0.0;
  double prune_threshold = 0.005;

  friend bool operator==(const L1Settings&, const L1Settings&) = default;
};

// Architecture plus everything needed to rebuild the model from scratch.
// An empty hidden_widths list is the Bayesian linear (BLR) special case.
struct NetworkSpec {
  std::size_t n_covariates = 1;
  std::vector<std::size_t> hidden_widths;
  std::size_t n_outputs = 1;
  Activation activation = Activation::sigmoid;
  Likelihood likelihood = Likelihood::bernoulli;
  double noise_variance = 1.0;  // fixed dispersion of the gaussian head
  ModelMode mode = ModelMode::variational;
  L1Settings l1;
  LayerPrior prior;
  InclusionInit inclusion_init;
  double sigma_init = 0.05;
  double mu_init = 0.0;  // half-width of the uniform mean init; 0 means 1/sqrt(fan-in)

  void validate() const;
  // Number of weight layers J (hidden layers + output layer).
  std::size_t depth() const { return hidden_widths.size() + 1; }
  // Hidden-origin columns feeding layer `j` (0-based).
  std::size_t hidden_inputs(std::size_t j) const { return j == 0 ? 0 : hidden_widths[j - 1]; }
  std::size_t layer_outputs(std::size_t j) const {
    return j + 1 == depth() ? n_outputs : hidden_widths[j];
  }
  std::size_t total_weights() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

void to_json(nlohmann::json& j, const NetworkSpec& spec);
void from_json(const nlohmann::json& j, NetworkSpec& spec);

// Live model state. Variational models populate `layers`; the L1 baseline
// populates `dense`.
struct Network {
  NetworkSpec spec;
  std::uint64_t seed = 0;
  std::vector<VariationalLayer> layers;
  std::vector<DenseLayer> dense;

  bool variational() const { return spec.mode == ModelMode::variational; }
  bool all_finite() const;
};

// Builds and initializes a model; layer j draws from substream j of `seed`.
Network make_network(const NetworkSpec& spec, std::uint64_t seed);

// Hidden-layer input for layer j: [activations of layer j-1, x].
Matrix concat_inputs(const Matrix& hidden, const Matrix& x);

struct ForwardCache {
  std::vector<LrtCache> layers;
  std::vector<Matrix> hidden_pre;  // pre-activations of each hidden layer
};

struct SampledForward {
  Matrix logits;  // linear predictor zeta(x), batch x n_outputs
  Matrix params;  // head-transformed output parameters
  ForwardCache cache;
};

// One LRT draw of every layer's pre-activations for all rows of x. Each call
// consumes one value of `rng`; layer j then uses substream j of that value.
SampledForward forward_sample(const Network& net, const Matrix& x, Rng& rng,
                              bool keep_cache = false);

// Head transform: sigmoid (bernoulli), softmax rows (categorical), identity.
Matrix output_params(const NetworkSpec& spec, const Matrix& logits);

// Concrete weights for every layer.
struct WeightSample {
  std::vector<DenseLayer> layers;
};

WeightSample draw_weights(const Network& net, const StructureMask& mask, bool sample_weights,
                          Rng& rng);
// Full-model weights of the L1 baseline (or masked by `mask` when given).
WeightSample l1_weights(const Network& net, const StructureMask* mask = nullptr);

struct DenseTrace {
  std::vector<Matrix> inputs;      // input of each layer
  std::vector<Matrix> hidden_pre;  // pre-activation of each hidden layer
};

Matrix dense_network_forward(const NetworkSpec& spec, const WeightSample& weights,
                             const Matrix& x, DenseTrace* trace = nullptr);

struct DenseGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;
};

DenseGradients dense_network_backward(const NetworkSpec& spec, const WeightSample& weights,
                                      const DenseTrace& trace, const Matrix& grad_logits);

std::vector<LayerGradients> network_backward(const Network& net, const ForwardCache& cache,
                                             const Matrix& grad_logits);

// Log-likelihood of one observation given the head's output parameters.
double log_likelihood(const NetworkSpec& spec, std::span<const double> output_params, double y);

// Sum of negative log-likelihoods over the batch, computed from logits for
// stability; fills d(sum)/d(logits) when `grad` is non-null.
double batch_nll(const NetworkSpec& spec, const Matrix& logits, std::span<const double> y,
                 Matrix* grad = nullptr);

double total_kl(const Network& net);

// Predictive summary over n_samples posterior draws.
struct Prediction {
  Matrix mean;   // average of the per-draw output parameters
  Matrix lower;  // 0.025 empirical quantile (empty unless requested)
  Matrix upper;  // 0.975 empirical quantile
  std::size_t samples = 0;
};

// Draws output parameters n_samples times. Without a mask the full variational
// model is sampled with LRT (the L1 baseline is deterministic); with a mask
// weights are drawn conditional on that structure.
std::vector<Matrix> predictive_samples(const Network& net, const Matrix& x,
                                       std::size_t n_samples, Rng& rng,
                                       const StructureMask* mask = nullptr);

Prediction predict(const Network& net, const Matrix& x, std::size_t n_samples, Rng& rng,
                   const StructureMask* mask = nullptr, bool with_intervals = true);

// Model file: "ISLB" magic, u32 version, u64 header length, JSON header,
// then raw little-endian f64 parameter blocks.
std::string serialize(const Network& net);
Network deserialize(std::string_view bytes);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

// Deterministic baseline: sum of |w| over non-bias weights.
double l1_penalty(const Network& net);
// NLL summed over the batch plus lambda_reg * sum |w|.
double l1_loss(const Network& net, const Matrix& x, std::span<const double> y);

}  // namespace islab

#endif  // ISLAB_NETWORK_HPP
