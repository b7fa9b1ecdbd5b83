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

#include "islab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "islab/errors.hpp"

namespace islab {

AdamState::AdamState(std::size_t size, AdamSettings settings)
    : settings_(settings), m_(size, 0.0), v_(size, 0.0) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
  if (params.size() != state.size() || grads.size() != state.size())
    throw std::invalid_argument("adam_step: size mismatch");
  const AdamSettings& s = state.settings_;
  ++state.t_;
  const double t = static_cast<double>(state.t_);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m_[i] = s.beta1 * state.m_[i] + (1.0 - s.beta1) * g;
    state.v_[i] = s.beta2 * state.v_[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = state.m_[i] / c1;
    const double v_hat = state.v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be finite and >= 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (iters_per_epoch < 1) throw ConfigError("train.iters_per_epoch must be >= 1");
  if (n_train_mc_samples < 1) throw ConfigError("train.mc_samples must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0))
    throw ConfigError("train.adam settings out of range");
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,loss,nll,kl," << metric_name << ",seconds\n";
  out << std::setprecision(10);
  for (const EpochRecord& r : epochs)
    out << r.epoch << ',' << r.loss << ',' << r.nll << ',' << r.kl << ',' << r.metric << ','
        << r.seconds << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Parameter blocks in a fixed order, paired with their gradient blocks.
std::vector<std::span<double>> parameter_blocks(Network& net) {
  std::vector<std::span<double>> blocks;
  if (net.variational()) {
    for (VariationalLayer& l : net.layers) {
      blocks.push_back(l.mu.flat());
      blocks.push_back(l.rho.flat());
      blocks.push_back(l.lambda.flat());
      blocks.push_back(l.bias_mu);
      blocks.push_back(l.bias_rho);
    }
  } else {
    for (DenseLayer& l : net.dense) {
      blocks.push_back(l.weight.flat());
      blocks.push_back(l.bias);
    }
  }
  return blocks;
}

std::vector<std::span<const double>> gradient_blocks(const std::vector<LayerGradients>& grads) {
  std::vector<std::span<const double>> blocks;
  for (const LayerGradients& g : grads) {
    blocks.push_back(g.mu.flat());
    blocks.push_back(g.rho.flat());
    blocks.push_back(g.lambda.flat());
    blocks.push_back(g.bias_mu);
    blocks.push_back(g.bias_rho);
  }
  return blocks;
}

std::vector<std::span<const double>> gradient_blocks(const DenseGradients& grads) {
  std::vector<std::span<const double>> blocks;
  for (std::size_t j = 0; j < grads.weight.size(); ++j) {
    blocks.push_back(grads.weight[j].flat());
    blocks.push_back(grads.bias[j]);
  }
  return blocks;
}

void add_scaled(std::span<double> dst, std::span<const double> src, double factor) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

void accumulate(std::vector<LayerGradients>& total, const std::vector<LayerGradients>& part,
                double factor) {
  for (std::size_t j = 0; j < total.size(); ++j) {
    add_scaled(total[j].mu.flat(), part[j].mu.flat(), factor);
    add_scaled(total[j].rho.flat(), part[j].rho.flat(), factor);
    add_scaled(total[j].lambda.flat(), part[j].lambda.flat(), factor);
    add_scaled(total[j].bias_mu, part[j].bias_mu, factor);
    add_scaled(total[j].bias_rho, part[j].bias_rho, factor);
  }
}

// Correct predictions (classification) or squared error (regression) summed
// over the batch.
double batch_score(const NetworkSpec& spec, const Matrix& logits, std::span<const double> y) {
  double score = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    switch (spec.likelihood) {
      case Likelihood::bernoulli:
        score += ((row[0] > 0.0) == (y[i] > 0.5)) ? 1.0 : 0.0;
        break;
      case Likelihood::categorical: {
        const auto best = std::max_element(row.begin(), row.end()) - row.begin();
        score += static_cast<double>(best) == y[i] ? 1.0 : 0.0;
        break;
      }
      case Likelihood::gaussian:
        score += (row[0] - y[i]) * (row[0] - y[i]);
        break;
    }
  }
  return score;
}

void require_finite(double value, const char* what, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(value))
    throw NumericError(std::string("training diverged: ") + what + " is not finite at epoch " +
                       std::to_string(epoch + 1) + ", batch " + std::to_string(batch + 1));
}

}  // namespace

TrainLog train(Network& net, const Dataset& data, const TrainConfig& config,
               const EpochCallback& on_epoch) {
  config.validate();
  const NetworkSpec& spec = net.spec;
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (data.covariates() != spec.n_covariates)
    throw std::invalid_argument("train: dataset has " + std::to_string(data.covariates()) +
                                " covariates, model expects " +
                                std::to_string(spec.n_covariates));
  if (!net.all_finite()) throw NumericError("train: model has a non-finite parameter");

  const std::size_t n = data.size();
  const std::size_t batches = std::min(config.iters_per_epoch, n);
  const double kl_weight = 1.0 / static_cast<double>(config.iters_per_epoch);
  const std::size_t S = config.n_train_mc_samples;

  std::vector<std::span<double>> params = parameter_blocks(net);
  std::vector<AdamState> adam;
  adam.reserve(params.size());
  for (const auto& p : params) adam.emplace_back(p.size(), config.adam);

  const Rng root(config.seed);
  Rng order_rng = root.substream(1);
  Rng noise_rng = root.substream(2);

  TrainLog log;
  log.metric_name = spec.likelihood == Likelihood::gaussian ? "rmse" : "accuracy";
  const auto start = Clock::now();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    const std::vector<std::size_t> order = shuffled_indices(n, order_rng);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    double score = 0.0;

    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * n / batches;
      const std::size_t hi = (b + 1) * n / batches;
      const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
      Matrix xb(rows.size(), data.covariates());
      Vector yb(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = data.x.row(rows[i]);
        std::copy(src.begin(), src.end(), xb.row(i).begin());
        yb[i] = data.y[rows[i]];
      }

      double nll = 0.0;
      double penalty = 0.0;
      if (net.variational()) {
        std::vector<LayerGradients> grads;
        for (const VariationalLayer& l : net.layers) grads.emplace_back(l);
        for (std::size_t s = 0; s < S; ++s) {
          const SampledForward fwd = forward_sample(net, xb, noise_rng, true);
          Matrix g;
          nll += batch_nll(spec, fwd.logits, yb, &g) / static_cast<double>(S);
          if (s == 0) score += batch_score(spec, fwd.logits, yb);
          accumulate(grads, network_backward(net, fwd.cache, g), 1.0 / static_cast<double>(S));
        }
        for (std::size_t j = 0; j < net.layers.size(); ++j) {
          accumulate_kl_gradient(net.layers[j], spec.prior, kl_weight, grads[j]);
          penalty += kl_weight * layer_kl(net.layers[j], spec.prior);
        }
        require_finite(nll + penalty, "loss", epoch, b);
        const auto gblocks = gradient_blocks(grads);
        for (std::size_t k = 0; k < params.size(); ++k)
          adam_step(adam[k], params[k], gblocks[k], config.lr);
      } else {
        const WeightSample weights = l1_weights(net);
        DenseTrace trace;
        const Matrix logits = dense_network_forward(spec, weights, xb, &trace);
        Matrix g;
        nll = batch_nll(spec, logits, yb, &g);
        score += batch_score(spec, logits, yb);
        DenseGradients grads = dense_network_backward(spec, weights, trace, g);
        const double reg = spec.l1.lambda_reg * kl_weight;
        for (std::size_t j = 0; j < grads.weight.size(); ++j) {
          const auto w = net.dense[j].weight.flat();
          auto gw = grads.weight[j].flat();
          for (std::size_t i = 0; i < w.size(); ++i) {
            penalty += reg * std::abs(w[i]);
            if (w[i] != 0.0) gw[i] += w[i] > 0.0 ? reg : -reg;
          }
        }
        require_finite(nll + penalty, "loss", epoch, b);
        const auto gblocks = gradient_blocks(grads);
        for (std::size_t k = 0; k < params.size(); ++k)
          adam_step(adam[k], params[k], gblocks[k], config.lr);
      }
      rec.nll += nll;
      rec.loss += nll + penalty;
    }

    if (!net.all_finite())
      throw NumericError("training diverged: non-finite parameter after epoch " +
                         std::to_string(epoch + 1));
    rec.kl = net.variational() ? total_kl(net) : spec.l1.lambda_reg * l1_penalty(net);
    rec.metric = spec.likelihood == Likelihood::gaussian
                     ? std::sqrt(score / static_cast<double>(n))
                     : score / static_cast<double>(n);
    rec.seconds = seconds_since(epoch_start);
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  log.wall_seconds = seconds_since(start);
  return log;
}

}  // namespace islab
