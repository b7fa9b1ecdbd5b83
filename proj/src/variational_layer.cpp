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

#include "islab/variational_layer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace islab {

namespace {

void check_input(const VariationalLayer& layer, const Matrix& input) {
  if (input.cols() != layer.inputs())
    throw std::invalid_argument("variational layer: input width " + std::to_string(input.cols()) +
                                " does not match layer width " +
                                std::to_string(layer.inputs()));
}

void check_finite(const VariationalLayer& layer) {
  if (!layer.all_finite()) throw std::invalid_argument("variational layer: non-finite parameter");
}

// Effective mean and variance matrices of gamma * w under q, both out x in.
void effective_moments(const VariationalLayer& layer, Matrix& mean_w, Matrix& var_w) {
  mean_w = Matrix(layer.outputs(), layer.inputs());
  var_w = Matrix(layer.outputs(), layer.inputs());
  for (std::size_t p = 0; p < layer.outputs(); ++p) {
    for (std::size_t k = 0; k < layer.inputs(); ++k) {
      const double a = layer.alpha(p, k);
      const double m = layer.mu(p, k);
      const double s = layer.sigma(p, k);
      mean_w(p, k) = a * m;
      // a(s^2 + m^2) - a^2 m^2, arranged to stay nonnegative in floating point
      var_w(p, k) = a * s * s + a * (1.0 - a) * m * m;
    }
  }
}

Matrix squared(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  auto src = m.flat();
  auto dst = out.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * src[i];
  return out;
}

}  // namespace

void LayerPrior::validate() const {
  if (!(prior_std > 0.0)) throw std::invalid_argument("prior: prior_std must be positive");
  if (!(psi > 0.0 && psi < 1.0)) throw std::invalid_argument("prior: psi must lie in (0, 1)");
}

VariationalLayer::VariationalLayer(std::size_t out, std::size_t hidden_in, std::size_t covs)
    : hidden_inputs(hidden_in),
      covariates(covs),
      mu(out, hidden_in + covs),
      rho(out, hidden_in + covs),
      lambda(out, hidden_in + covs),
      bias_mu(out, 0.0),
      bias_rho(out, 0.0) {}

void VariationalLayer::initialize(Rng& rng, const InclusionInit& init, double sigma_init,
                                  double mu_bound) {
  const double bound =
      mu_bound > 0.0 ? mu_bound : 1.0 / std::sqrt(static_cast<double>(inputs()));
  const double rho0 = softplus_inverse(sigma_init);
  for (double& m : mu.flat()) m = rng.uniform(-bound, bound);
  rho.fill(rho0);
  for (std::size_t p = 0; p < outputs(); ++p) {
    for (std::size_t k = 0; k < inputs(); ++k) {
      lambda(p, k) = is_covariate_column(k) ? rng.uniform(init.covariate_min, init.covariate_max)
                                            : rng.uniform(init.hidden_min, init.hidden_max);
    }
  }
  for (double& b : bias_mu) b = rng.uniform(-bound, bound);
  std::fill(bias_rho.begin(), bias_rho.end(), rho0);
}

bool VariationalLayer::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return mu.all_finite() && rho.all_finite() && lambda.all_finite() &&
         std::all_of(bias_mu.begin(), bias_mu.end(), finite) &&
         std::all_of(bias_rho.begin(), bias_rho.end(), finite);
}

LayerGradients::LayerGradients(const VariationalLayer& layer)
    : mu(layer.outputs(), layer.inputs()),
      rho(layer.outputs(), layer.inputs()),
      lambda(layer.outputs(), layer.inputs()),
      bias_mu(layer.outputs(), 0.0),
      bias_rho(layer.outputs(), 0.0) {}

void LayerGradients::scale(double factor) {
  for (Matrix* m : {&mu, &rho, &lambda, &input})
    for (double& v : m->flat()) v *= factor;
  for (double& v : bias_mu) v *= factor;
  for (double& v : bias_rho) v *= factor;
}

PreActivationMoments lrt_moments(const VariationalLayer& layer, const Matrix& input) {
  check_input(layer, input);
  Matrix mean_w, var_w;
  effective_moments(layer, mean_w, var_w);
  PreActivationMoments out{matmul(input, transpose(mean_w)),
                           matmul(squared(input), transpose(var_w))};
  for (std::size_t b = 0; b < input.rows(); ++b) {
    for (std::size_t p = 0; p < layer.outputs(); ++p) {
      const double bs = layer.bias_sigma(p);
      out.mean(b, p) += layer.bias_mu[p];
      out.variance(b, p) += bs * bs;
    }
  }
  return out;
}

Matrix lrt_forward_with_noise(const VariationalLayer& layer, const Matrix& input,
                              const Matrix& eps, LrtCache* cache) {
  check_finite(layer);
  if (eps.rows() != input.rows() || eps.cols() != layer.outputs())
    throw std::invalid_argument("lrt_forward: noise shape mismatch");
  PreActivationMoments mom = lrt_moments(layer, input);
  Matrix stddev(input.rows(), layer.outputs());
  Matrix pre(input.rows(), layer.outputs());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double s = std::sqrt(std::max(mom.variance.flat()[i], 0.0));
    stddev.flat()[i] = s;
    pre.flat()[i] = mom.mean.flat()[i] + s * eps.flat()[i];
  }
  if (cache != nullptr) {
    cache->input = input;
    cache->eps = eps;
    cache->stddev = std::move(stddev);
  }
  return pre;
}

Matrix lrt_forward(const VariationalLayer& layer, const Matrix& input, Rng& rng,
                   LrtCache* cache) {
  check_input(layer, input);
  Matrix eps(input.rows(), layer.outputs());
  for (double& e : eps.flat()) e = rng.normal();
  return lrt_forward_with_noise(layer, input, eps, cache);
}

Vector lrt_forward(const VariationalLayer& layer, std::span<const double> a_prev, Rng& rng) {
  Matrix input(1, a_prev.size());
  std::copy(a_prev.begin(), a_prev.end(), input.row(0).begin());
  Matrix pre = lrt_forward(layer, input, rng);
  return Vector(pre.row(0).begin(), pre.row(0).end());
}

LayerMask::LayerMask(std::size_t r, std::size_t c, std::size_t hidden_in, bool value)
    : rows(r), cols(c), hidden_inputs(hidden_in), bits(r * c, value ? 1 : 0) {}

std::size_t LayerMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::size_t StructureMask::count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.count();
  return n;
}

std::size_t StructureMask::total() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.bits.size();
  return n;
}

double StructureMask::density() const {
  const std::size_t t = total();
  return t == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(t);
}

DenseLayer masked_weights(const VariationalLayer& layer, const LayerMask& mask,
                          bool sample_weights, Rng& rng) {
  if (mask.rows != layer.outputs() || mask.cols != layer.inputs())
    throw std::invalid_argument("masked_weights: mask shape does not match layer");
  DenseLayer out{Matrix(layer.outputs(), layer.inputs()), Vector(layer.outputs()),
                 layer.hidden_inputs};
  for (std::size_t p = 0; p < layer.outputs(); ++p) {
    for (std::size_t k = 0; k < layer.inputs(); ++k) {
      if (!mask(p, k)) continue;
      out.weight(p, k) = sample_weights ? gauss_sample(rng, layer.mu(p, k), layer.sigma(p, k))
                                        : layer.mu(p, k);
    }
    out.bias[p] = sample_weights ? gauss_sample(rng, layer.bias_mu[p], layer.bias_sigma(p))
                                 : layer.bias_mu[p];
  }
  return out;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& input) {
  if (input.cols() != layer.weight.cols())
    throw std::invalid_argument("dense_forward: input width mismatch");
  Matrix pre = matmul(input, transpose(layer.weight));
  for (std::size_t b = 0; b < pre.rows(); ++b)
    for (std::size_t p = 0; p < pre.cols(); ++p) pre(b, p) += layer.bias[p];
  return pre;
}

Vector mpm_forward(const VariationalLayer& layer, std::span<const double> a_prev,
                   const LayerMask& mask, bool sample_weights, Rng& rng) {
  if (a_prev.size() != layer.inputs())
    throw std::invalid_argument("mpm_forward: input width mismatch");
  DenseLayer w = masked_weights(layer, mask, sample_weights, rng);
  Vector out = matvec(w.weight, a_prev);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] += w.bias[p];
  return out;
}

namespace {

double gaussian_kl(double mean, double sigma, double prior_std) {
  const double v = std::log(prior_std) - std::log(sigma) +
                   (sigma * sigma + mean * mean) / (2.0 * prior_std * prior_std) - 0.5;
  return std::max(v, 0.0);
}

}  // namespace

double layer_kl(const VariationalLayer& layer, const LayerPrior& prior) {
  prior.validate();
  const double log_psi = std::log(prior.psi);
  const double log_not_psi = std::log1p(-prior.psi);
  double total = 0.0;
  for (std::size_t p = 0; p < layer.outputs(); ++p) {
    for (std::size_t k = 0; k < layer.inputs(); ++k) {
      const double lam = layer.lambda(p, k);
      const double a = sigmoid(lam);
      // alpha ln alpha and (1 - alpha) ln(1 - alpha) through log-sigmoid so
      // saturated logits give exact zeros instead of 0 * -inf.
      const double bern = a * (log_sigmoid(lam) - log_psi) +
                          (1.0 - a) * (log_sigmoid(-lam) - log_not_psi);
      total += std::max(bern, 0.0);
      if (a > 0.0) total += a * gaussian_kl(layer.mu(p, k), layer.sigma(p, k), prior.prior_std);
    }
    total += gaussian_kl(layer.bias_mu[p], layer.bias_sigma(p), prior.prior_std);
  }
  return total;
}

void accumulate_kl_gradient(const VariationalLayer& layer, const LayerPrior& prior, double scale,
                            LayerGradients& grads) {
  prior.validate();
  const double tau2 = prior.prior_std * prior.prior_std;
  const double logit_psi = logit(prior.psi);
  for (std::size_t p = 0; p < layer.outputs(); ++p) {
    for (std::size_t k = 0; k < layer.inputs(); ++k) {
      const double lam = layer.lambda(p, k);
      const double a = sigmoid(lam);
      const double m = layer.mu(p, k);
      const double r = layer.rho(p, k);
      const double s = softplus(r);
      const double g = std::log(prior.prior_std) - std::log(s) + (s * s + m * m) / (2.0 * tau2) - 0.5;
      // d/dalpha of the Bernoulli part is exactly lambda - logit(psi)
      grads.lambda(p, k) += scale * a * (1.0 - a) * (lam - logit_psi + g);
      grads.mu(p, k) += scale * a * m / tau2;
      grads.rho(p, k) += scale * a * (s / tau2 - 1.0 / s) * sigmoid(r);
    }
    const double bs = layer.bias_sigma(p);
    grads.bias_mu[p] += scale * layer.bias_mu[p] / tau2;
    grads.bias_rho[p] += scale * (bs / tau2 - 1.0 / bs) * sigmoid(layer.bias_rho[p]);
  }
}

LayerGradients layer_backward(const VariationalLayer& layer, const LrtCache& cache,
                              const Matrix& grad_pre_act, bool want_input_grad) {
  const std::size_t batch = cache.input.rows();
  const std::size_t out = layer.outputs();
  if (grad_pre_act.rows() != batch || grad_pre_act.cols() != out)
    throw std::invalid_argument("layer_backward: gradient shape mismatch");

  // d loss / d s^2 per row and unit; zero where the pre-activation is
  // deterministic (s = 0).
  Matrix grad_var(batch, out);
  for (std::size_t i = 0; i < grad_var.size(); ++i) {
    const double s = cache.stddev.flat()[i];
    if (s > 0.0) grad_var.flat()[i] = grad_pre_act.flat()[i] * cache.eps.flat()[i] / (2.0 * s);
  }

  Matrix grad_mean_w(out, layer.inputs());
  Matrix grad_var_w(out, layer.inputs());
  const Matrix input_sq = squared(cache.input);
  accumulate_at_b(grad_pre_act, cache.input, grad_mean_w);
  accumulate_at_b(grad_var, input_sq, grad_var_w);

  LayerGradients grads(layer);
  for (std::size_t p = 0; p < out; ++p) {
    for (std::size_t k = 0; k < layer.inputs(); ++k) {
      const double lam = layer.lambda(p, k);
      const double a = sigmoid(lam);
      const double m = layer.mu(p, k);
      const double r = layer.rho(p, k);
      const double s = softplus(r);
      const double gm = grad_mean_w(p, k);
      const double gv = grad_var_w(p, k);
      const double d_alpha = gm * m + gv * (s * s + m * m - 2.0 * a * m * m);
      grads.mu(p, k) = gm * a + gv * 2.0 * a * m * (1.0 - a);
      grads.rho(p, k) = gv * 2.0 * a * s * sigmoid(r);
      grads.lambda(p, k) = d_alpha * a * (1.0 - a);
    }
    double g_bias = 0.0;
    double g_bias_var = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      g_bias += grad_pre_act(b, p);
      g_bias_var += grad_var(b, p);
    }
    const double bs = layer.bias_sigma(p);
    grads.bias_mu[p] = g_bias;
    grads.bias_rho[p] = g_bias_var * 2.0 * bs * sigmoid(layer.bias_rho[p]);
  }

  if (want_input_grad) {
    Matrix mean_w, var_w;
    effective_moments(layer, mean_w, var_w);
    grads.input = matmul(grad_pre_act, mean_w);
    Matrix through_var = matmul(grad_var, var_w);
    for (std::size_t i = 0; i < grads.input.size(); ++i)
      grads.input.flat()[i] += 2.0 * cache.input.flat()[i] * through_var.flat()[i];
  }
  return grads;
}

}  // namespace islab
