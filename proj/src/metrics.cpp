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

#include "islab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace islab {

namespace {

constexpr double kProbFloor = 1e-12;

void check_rows(const Matrix& probs, std::span<const double> labels, const char* op) {
  if (probs.rows() != labels.size())
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(probs.rows()) +
                                " predictions for " + std::to_string(labels.size()) + " labels");
  if (probs.rows() == 0) throw std::invalid_argument(std::string(op) + ": empty input");
}

void check_pairs(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(op) + ": length mismatch");
  if (a.empty()) throw std::invalid_argument(std::string(op) + ": empty input");
}

double confidence(const Matrix& probs, std::size_t i) {
  const auto row = probs.row(i);
  if (row.size() == 1) return std::max(row[0], 1.0 - row[0]);
  return *std::max_element(row.begin(), row.end());
}

}  // namespace

std::vector<std::size_t> predicted_classes(const Matrix& probs) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    out[i] = row.size() == 1
                 ? (row[0] > 0.5 ? 1 : 0)
                 : static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Matrix& probs, std::span<const double> labels) {
  check_rows(probs, labels, "accuracy");
  const std::vector<std::size_t> pred = predicted_classes(probs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (static_cast<double>(pred[i]) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double ece(const Matrix& probs, std::span<const double> labels, std::size_t n_bins) {
  check_rows(probs, labels, "ece");
  if (n_bins < 1) throw std::invalid_argument("ece: n_bins must be >= 1");
  const std::vector<std::size_t> pred = predicted_classes(probs);
  std::vector<double> conf_sum(n_bins, 0.0), hit_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double c = confidence(probs, i);
    const auto bin = std::min(static_cast<std::size_t>(c * static_cast<double>(n_bins)), n_bins - 1);
    conf_sum[bin] += c;
    hit_sum[bin] += static_cast<double>(pred[i]) == labels[i] ? 1.0 : 0.0;
    ++count[bin];
  }
  const double n = static_cast<double>(pred.size());
  double total = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b)
    if (count[b] > 0) total += std::abs(hit_sum[b] - conf_sum[b]) / n;
  return total;
}

double mean_nll(const NetworkSpec& spec, const Matrix& params, std::span<const double> labels) {
  check_rows(params, labels, "nll");
  double total = 0.0;
  for (std::size_t i = 0; i < params.rows(); ++i) {
    const auto row = params.row(i);
    switch (spec.likelihood) {
      case Likelihood::bernoulli: {
        const double p = labels[i] > 0.5 ? row[0] : 1.0 - row[0];
        total -= std::log(std::max(p, kProbFloor));
        break;
      }
      case Likelihood::categorical: {
        const auto c = static_cast<std::size_t>(labels[i]);
        if (c >= row.size()) throw std::invalid_argument("nll: label out of range");
        total -= std::log(std::max(row[c], kProbFloor));
        break;
      }
      case Likelihood::gaussian: {
        const double phi = spec.noise_variance;
        const double r = labels[i] - row[0];
        total += 0.5 * std::log(2.0 * std::numbers::pi * phi) + r * r / (2.0 * phi);
        break;
      }
    }
  }
  return total / static_cast<double>(params.rows());
}

double rmse(std::span<const double> preds, std::span<const double> targets) {
  check_pairs(preds, targets, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) ss += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return std::sqrt(ss / static_cast<double>(preds.size()));
}

double pearson(std::span<const double> preds, std::span<const double> targets) {
  check_pairs(preds, targets, "pearson");
  if (preds.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(preds.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ma += preds[i];
    mb += targets[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double da = preds[i] - ma, db = targets[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("pearson: zero variance");
  return sab / std::sqrt(saa * sbb);
}

double pinball(const Matrix& quantiles, std::span<const double> targets,
               std::span<const double> taus) {
  if (quantiles.rows() != targets.size() || quantiles.cols() != taus.size())
    throw std::invalid_argument("pinball: shape mismatch");
  if (targets.empty() || taus.empty()) throw std::invalid_argument("pinball: empty input");
  for (double t : taus)
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("pinball: tau must lie in (0, 1)");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i)
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const double r = targets[i] - quantiles(i, t);
      total += r >= 0.0 ? taus[t] * r : (taus[t] - 1.0) * r;
    }
  return total / static_cast<double>(targets.size() * taus.size());
}

std::vector<double> default_pinball_levels() {
  std::vector<double> taus;
  for (int k = 0; k < 10; ++k) taus.push_back(0.05 + 0.1 * k);
  return taus;
}

}  // namespace islab
