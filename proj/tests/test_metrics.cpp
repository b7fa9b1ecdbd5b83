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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "islab/metrics.hpp"

namespace islab {
namespace {

Matrix column(const std::vector<double>& p) {
  Matrix m(p.size(), 1);
  for (std::size_t i = 0; i < p.size(); ++i) m(i, 0) = p[i];
  return m;
}

Matrix rows(const std::vector<std::vector<double>>& r) {
  Matrix m(r.size(), r.front().size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r[i].size(); ++j) m(i, j) = r[i][j];
  return m;
}

TEST(Accuracy, PerfectInvertedAndHandCount) {
  const std::vector<double> labels{1, 0, 1, 1, 0};
  EXPECT_DOUBLE_EQ(accuracy(column({0.9, 0.1, 0.8, 0.7, 0.2}), labels), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(column({0.1, 0.9, 0.2, 0.3, 0.8}), labels), 0.0);
  // correct on rows 0-6, wrong on 7-9
  const Matrix p = rows({{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}, {0.6, 0.3, 0.1},
                         {0.2, 0.7, 0.1}, {0.3, 0.3, 0.4}, {0.5, 0.4, 0.1}, {0.1, 0.8, 0.1},
                         {0.4, 0.2, 0.4}, {0.1, 0.1, 0.8}});
  EXPECT_DOUBLE_EQ(accuracy(p, std::vector<double>{0, 1, 2, 0, 1, 2, 0, 0, 2, 1}), 0.7);
  EXPECT_THROW(accuracy(p, std::vector<double>{0, 1}), std::invalid_argument);
}

TEST(Accuracy, BinaryThresholdIsStrict) {
  EXPECT_EQ(predicted_classes(column({0.5, 0.5000001}))[0], 0u);
  EXPECT_EQ(predicted_classes(column({0.5, 0.5000001}))[1], 1u);
}

TEST(Ece, TrivialCases) {
  EXPECT_DOUBLE_EQ(ece(column({1.0, 0.0, 1.0}), std::vector<double>{1, 0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(ece(column({0.5, 0.5, 0.5, 0.5}), std::vector<double>{0, 1, 0, 1}), 0.0);
  EXPECT_THROW(ece(Matrix(0, 1), std::vector<double>{}), std::invalid_argument);
}

TEST(Ece, TwoBinHandValue) {
  // bin [0, 0.5): confidences 0.4, 0.4, one correct -> gap 0.1
  // bin [0.5, 1]: confidences 0.9, 0.9, 0.9, 0.8 with the 0.8 wrong -> gap 0.125
  const Matrix p = rows({{0.4, 0.3, 0.3}, {0.4, 0.3, 0.3}, {0.9, 0.05, 0.05},
                         {0.05, 0.9, 0.05}, {0.05, 0.05, 0.9}, {0.8, 0.1, 0.1}});
  const std::vector<double> y{0, 1, 0, 1, 2, 2};
  EXPECT_NEAR(ece(p, y, 2), 2.0 / 6.0 * 0.1 + 4.0 / 6.0 * 0.125, 1e-15);
}

TEST(Ece, BoundedAndPermutationInvariant) {
  Rng rng(1);
  std::vector<double> p(500), y(500);
  for (std::size_t i = 0; i < 500; ++i) {
    p[i] = rng.uniform();
    y[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
  }
  const double e = ece(column(p), y);
  EXPECT_GE(e, 0.0);
  EXPECT_LE(e, 1.0);
  const std::vector<std::size_t> order = [&] {
    std::vector<std::size_t> o(500);
    std::iota(o.begin(), o.end(), 0);
    for (std::size_t i = 499; i > 0; --i) std::swap(o[i], o[rng.index(i + 1)]);
    return o;
  }();
  std::vector<double> p2(500), y2(500);
  for (std::size_t i = 0; i < 500; ++i) p2[i] = p[order[i]], y2[i] = y[order[i]];
  EXPECT_NEAR(ece(column(p2), y2), e, 1e-15);
}

NetworkSpec head(Likelihood lik, std::size_t c) {
  NetworkSpec s;
  s.n_covariates = 1;
  s.n_outputs = c;
  s.likelihood = lik;
  return s;
}

TEST(MeanNll, UniformPerfectAndHandRows) {
  const NetworkSpec cat = head(Likelihood::categorical, 10);
  Matrix uniform(4, 10);
  uniform.fill(0.1);
  EXPECT_NEAR(mean_nll(cat, uniform, std::vector<double>{0, 3, 9, 5}), 2.302585092994046, 1e-12);

  const NetworkSpec bin = head(Likelihood::bernoulli, 1);
  EXPECT_DOUBLE_EQ(mean_nll(bin, column({1.0, 0.0}), std::vector<double>{1, 0}), 0.0);
  const double direct =
      -(std::log(0.9) + std::log(0.8) + std::log(0.4) + std::log(0.5) + std::log(0.99)) / 5.0;
  EXPECT_NEAR(mean_nll(bin, column({0.9, 0.2, 0.6, 0.5, 0.99}), std::vector<double>{1, 0, 0, 1, 1}),
              direct, 1e-15);
}

TEST(MeanNll, FloorsZeroProbabilityAndDegradesMonotonically) {
  const NetworkSpec bin = head(Likelihood::bernoulli, 1);
  EXPECT_NEAR(mean_nll(bin, column({0.0}), std::vector<double>{1}), -std::log(1e-12), 1e-9);
  double previous = -1.0;
  for (double p = 1.0; p >= 0.55; p -= 0.05) {
    const double v = mean_nll(bin, column({p, 1.0 - p}), std::vector<double>{1, 0});
    EXPECT_GT(v, previous);
    previous = v;
  }
}

TEST(MeanNll, GaussianUsesFixedVariance) {
  NetworkSpec g = head(Likelihood::gaussian, 1);
  g.noise_variance = 4.0;
  const double expected = 0.5 * std::log(2.0 * M_PI * 4.0) + 0.5 * (1.0 * 1.0) / 4.0;
  EXPECT_NEAR(mean_nll(g, column({2.0}), std::vector<double>{3.0}), expected, 1e-14);
}

TEST(Regression, RmseAndPearson) {
  const std::vector<double> t{2, 2, 4, 5};
  EXPECT_DOUBLE_EQ(rmse(t, t), 0.0);
  EXPECT_NEAR(pearson(t, t), 1.0, 1e-15);
  std::vector<double> neg(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) neg[i] = -t[i];
  EXPECT_NEAR(pearson(neg, t), -1.0, 1e-15);
  const std::vector<double> p{1, 2, 3, 4};
  EXPECT_NEAR(rmse(p, t), std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(pearson(p, t), 5.5 / std::sqrt(5.0 * 6.75), 1e-15);
  EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               std::invalid_argument);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(Pinball, FormulaCases) {
  const std::vector<double> half{0.5};
  EXPECT_DOUBLE_EQ(pinball(column({3.0}), std::vector<double>{3.0}, half), 0.0);
  EXPECT_DOUBLE_EQ(pinball(column({1.0}), std::vector<double>{3.0}, half), 1.0);
  EXPECT_DOUBLE_EQ(pinball(column({5.0}), std::vector<double>{3.0}, half), 1.0);
  EXPECT_NEAR(pinball(column({2.0}), std::vector<double>{3.0}, std::vector<double>{0.9}), 0.9,
              1e-15);
  EXPECT_NEAR(pinball(column({4.0}), std::vector<double>{3.0}, std::vector<double>{0.9}), 0.1,
              1e-15);
  EXPECT_THROW(pinball(column({1.0}), std::vector<double>{1.0}, std::vector<double>{1.0}),
               std::invalid_argument);
  EXPECT_THROW(pinball(column({1.0}), std::vector<double>{1.0}, std::vector<double>{0.0}),
               std::invalid_argument);
}

TEST(Pinball, MedianLevelIsHalfTheMae) {
  Rng rng(2);
  const std::size_t n = 1000;
  std::vector<double> q(n), y(n);
  double mae = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = rng.uniform(-5.0, 5.0);
    y[i] = rng.uniform(-5.0, 5.0);
    mae += std::abs(y[i] - q[i]);
  }
  mae /= static_cast<double>(n);
  EXPECT_NEAR(pinball(column(q), y, std::vector<double>{0.5}), mae / 2.0, 1e-12);
}

TEST(Pinball, DefaultLevels) {
  const std::vector<double> levels = default_pinball_levels();
  ASSERT_EQ(levels.size(), 10u);
  EXPECT_NEAR(levels.front(), 0.05, 1e-15);
  EXPECT_NEAR(levels.back(), 0.95, 1e-15);
}

}  // namespace
}  // namespace islab
