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

#ifndef ISLAB_VARIATIONAL_LAYER_HPP
#define ISLAB_VARIATIONAL_LAYER_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "islab/core_math.hpp"

namespace islab {

// Spike-and-slab prior shared by every edge of a layer: gamma ~ Bernoulli(psi),
// w | gamma=1 ~ N(0, prior_std^2). Biases carry no inclusion variable and get
// the slab N(0, prior_std^2) directly.
struct LayerPrior {
  double prior_std = 1.0;
  double psi = 0.5;

  void validate() const;
  friend bool operator==(const LayerPrior&, const LayerPrior&) = default;
};

// Uniform ranges for the inclusion logits at initialization, split by whether
// an edge leaves a hidden node or a covariate.
struct InclusionInit {
  double hidden_min = 0.0;
  double hidden_max = 1.0;
  double covariate_min = 0.0;
  double covariate_max = 1.0;

  friend bool operator==(const InclusionInit&, const InclusionInit&) = default;
};

// Mean-field spike-and-slab layer. Column k < hidden_inputs reads hidden unit
// k of the previous layer; the remaining columns read the raw covariates.
//
// Parameters are stored unconstrained: sigma = softplus(rho) and
// alpha = sigmoid(lambda).
struct VariationalLayer {
  std::size_t hidden_inputs = 0;
  std::size_t covariates = 0;

  Matrix mu;      // out x in
  Matrix rho;     // out x in
  Matrix lambda;  // out x in
  Vector bias_mu;
  Vector bias_rho;

  VariationalLayer() = default;
  VariationalLayer(std::size_t out, std::size_t hidden_inputs, std::size_t covariates);

  std::size_t outputs() const { return mu.rows(); }
  std::size_t inputs() const { return mu.cols(); }
  bool is_covariate_column(std::size_t k) const { return k >= hidden_inputs; }

  double alpha(std::size_t p, std::size_t k) const { return sigmoid(lambda(p, k)); }
  double sigma(std::size_t p, std::size_t k) const { return softplus(rho(p, k)); }
  double bias_sigma(std::size_t p) const { return softplus(bias_rho[p]); }

  // Uniform means on [-mu_bound, mu_bound] (1/sqrt(fan-in) when mu_bound is
  // 0), sigma ~= sigma_init, logits from the init ranges.
  void initialize(Rng& rng, const InclusionInit& init, double sigma_init, double mu_bound = 0.0);

  bool all_finite() const;
};

// Everything layer_backward needs from a sampled forward pass.
struct LrtCache {
  Matrix input;   // batch x in
  Matrix eps;     // batch x out
  Matrix stddev;  // batch x out
};

// Gradients of a scalar loss with respect to every layer parameter.
struct LayerGradients {
  Matrix mu;
  Matrix rho;
  Matrix lambda;
  Vector bias_mu;
  Vector bias_rho;
  Matrix input;  // d loss / d a_prev, empty when not requested

  explicit LayerGradients(const VariationalLayer& layer);
  void scale(double factor);
};

// Pre-activation mean and variance induced by q at each batch row.
struct PreActivationMoments {
  Matrix mean;
  Matrix variance;
};

PreActivationMoments lrt_moments(const VariationalLayer& layer, const Matrix& input);

// Samples pre-activations N(m, s^2) for every row of `input` with the local
// reparameterization trick. When `cache` is non-null it receives what the
// backward pass needs.
Matrix lrt_forward(const VariationalLayer& layer, const Matrix& input, Rng& rng,
                   LrtCache* cache = nullptr);

// Same as lrt_forward with the standard normal noise supplied by the caller.
Matrix lrt_forward_with_noise(const VariationalLayer& layer, const Matrix& input,
                              const Matrix& eps, LrtCache* cache = nullptr);

Vector lrt_forward(const VariationalLayer& layer, std::span<const double> a_prev, Rng& rng);

// Binary inclusion pattern for one layer (row-major, out x in).
struct LayerMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t hidden_inputs = 0;
  std::vector<std::uint8_t> bits;

  LayerMask() = default;
  LayerMask(std::size_t rows, std::size_t cols, std::size_t hidden_inputs, bool value = false);

  bool operator()(std::size_t p, std::size_t k) const { return bits[p * cols + k] != 0; }
  void set(std::size_t p, std::size_t k, bool on) { bits[p * cols + k] = on ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const LayerMask&, const LayerMask&) = default;
};

// Inclusion pattern Gamma for a whole network, one LayerMask per layer.
struct StructureMask {
  std::size_t covariates = 0;
  std::vector<LayerMask> layers;

  std::size_t count() const;
  std::size_t total() const;
  double density() const;

  friend bool operator==(const StructureMask&, const StructureMask&) = default;
};

// Concrete weights for one layer, zero where excluded.
struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
  std::size_t hidden_inputs = 0;
};

// Draws a dense weight realization restricted to `mask`: w = mu (or
// w ~ N(mu, sigma^2) when sample_weights) on included edges, 0 elsewhere.
// Biases are always present.
DenseLayer masked_weights(const VariationalLayer& layer, const LayerMask& mask,
                          bool sample_weights, Rng& rng);

Matrix dense_forward(const DenseLayer& layer, const Matrix& input);

// Pre-activation of the masked layer for a single input vector.
Vector mpm_forward(const VariationalLayer& layer, std::span<const double> a_prev,
                   const LayerMask& mask, bool sample_weights, Rng& rng);

// KL(q || p) for the whole layer, spike-vs-spike terms contributing zero.
double layer_kl(const VariationalLayer& layer, const LayerPrior& prior);

// Adds scale * grad(layer_kl) into `grads`.
void accumulate_kl_gradient(const VariationalLayer& layer, const LayerPrior& prior, double scale,
                            LayerGradients& grads);

// Chain rule through pre_act = m + s * eps for a cached forward pass.
LayerGradients layer_backward(const VariationalLayer& layer, const LrtCache& cache,
                              const Matrix& grad_pre_act, bool want_input_grad = true);

}  // namespace islab

#endif  // ISLAB_VARIATIONAL_LAYER_HPP
