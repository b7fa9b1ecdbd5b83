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

#ifndef ISLAB_METRICS_HPP
#define ISLAB_METRICS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "islab/core_math.hpp"
#include "islab/network.hpp"

namespace islab {

// Probabilities come as an n x 1 matrix of P(y = 1) for binary tasks or an
// n x c matrix of class probabilities otherwise.

// Binary rows predict class 1 iff p > 0.5; multiclass rows take the first argmax.
std::vector<std::size_t> predicted_classes(const Matrix& probs);

double accuracy(const Matrix& probs, std::span<const double> labels);

// Equal-width confidence bins on [0, 1]; confidence is the probability of the
// predicted class.
double ece(const Matrix& probs, std::span<const double> labels, std::size_t n_bins = 10);

// Mean negative log-likelihood of the labels under averaged predictive
// parameters. Probabilities are floored at 1e-12.
double mean_nll(const NetworkSpec& spec, const Matrix& params, std::span<const double> labels);

double rmse(std::span<const double> preds, std::span<const double> targets);
double pearson(std::span<const double> preds, std::span<const double> targets);

// quantiles(i, t) is the predicted taus[t]-quantile for point i. Returns the
// mean pinball loss over all points and levels.
double pinball(const Matrix& quantiles, std::span<const double> targets,
               std::span<const double> taus);

// 0.05, 0.15, ..., 0.95.
std::vector<double> default_pinball_levels();

struct EvalResult {
  std::string metric;
  double value = 0.0;
  std::string variant;  // "full" or "sparse"
  std::size_t mc_samples = 0;
};

}  // namespace islab

#endif  // ISLAB_METRICS_HPP
