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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "islab/errors.hpp"
#include "islab/metrics.hpp"
#include "islab/structure.hpp"
#include "islab/trainer.hpp"

namespace islab {
namespace {

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  AdamState state(3);
  std::vector<double> w{1.0, -2.0, 0.5};
  const std::vector<double> before = w, zero(3, 0.0);
  for (int i = 0; i < 5; ++i) adam_step(state, w, zero, 0.1);
  EXPECT_EQ(w, before);
  EXPECT_EQ(state.steps(), 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState state(2);
  std::vector<double> w{0.0, 0.0};
  adam_step(state, w, std::vector<double>{1.0, -1.0}, 0.01);
  EXPECT_NEAR(w[0], -0.01, 1e-9);
  EXPECT_NEAR(w[1], 0.01, 1e-9);
}

TEST(Adam, MinimizesQuadratic) {
  AdamState state(1);
  std::vector<double> w{0.0};
  for (int i = 0; i < 200; ++i) adam_step(state, w, std::vector<double>{2.0 * (w[0] - 3.0)}, 0.1);
  EXPECT_LT(std::abs(w[0] - 3.0), 0.05);
}

TEST(Adam, ShapeMismatchThrows) {
  AdamState state(2);
  std::vector<double> w{0.0};
  EXPECT_THROW(adam_step(state, w, std::vector<double>{1.0}, 0.1), std::invalid_argument);
}

NetworkSpec small_spec(std::vector<std::size_t> hidden) {
  NetworkSpec s;
  s.n_covariates = 4;
  s.hidden_widths = std::move(hidden);
  s.n_outputs = 1;
  s.likelihood = Likelihood::bernoulli;
  s.prior = {2.5, 0.001};
  s.inclusion_init = {-10.0, -7.0, 5.0, 5.0};
  return s;
}

TEST(Train, ZeroLearningRateChangesNothing) {
  const Dataset data = gen_linear(200, 0.0, 1);
  Network net = make_network(small_spec({3}), 2);
  const std::string before = serialize(net);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  cfg.iters_per_epoch = 4;
  const TrainLog log = train(net, data, cfg);
  EXPECT_EQ(serialize(net), before);
  EXPECT_EQ(log.epochs.size(), 3u);
}

TEST(Train, SameSeedsGiveIdenticalModels) {
  const Dataset data = gen_linear(300, 0.0, 1);
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.epochs = 3;
  cfg.iters_per_epoch = 5;
  cfg.seed = 9;
  Network a = make_network(small_spec({3}), 2), b = make_network(small_spec({3}), 2);
  train(a, data, cfg);
  train(b, data, cfg);
  EXPECT_EQ(serialize(a), serialize(b));
  Network c = make_network(small_spec({3}), 2);
  cfg.seed = 10;
  train(c, data, cfg);
  EXPECT_NE(serialize(c), serialize(a));
}

TEST(Train, BlrSeparatesOneDimensionalData) {
  Rng rng(3);
  Dataset data;
  data.x = Matrix(1000, 1);
  data.y.resize(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    data.x(i, 0) = rng.uniform(-1.0, 1.0);
    data.y[i] = data.x(i, 0) > 0.0 ? 1.0 : 0.0;
  }
  NetworkSpec s;
  s.n_covariates = 1;
  s.n_outputs = 1;
  s.prior = {2.5, 0.5};
  s.inclusion_init = {0.0, 0.0, 0.0, 1.0};
  Network net = make_network(s, 4);
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.epochs = 100;
  cfg.iters_per_epoch = 10;
  cfg.seed = 5;
  train(net, data, cfg);
  const StructureMask mask = extract_mpm(net);
  EXPECT_EQ(mask.count(), 1u);
  Rng eval(6);
  const Prediction p = predict(net, data.x, 100, eval, &mask);
  EXPECT_GE(accuracy(p.mean, data.y), 0.99);
}

TEST(Train, LossDecreasesOnLinearTask) {
  const Dataset data = gen_linear(2000, 0.0, 7);
  Network net = make_network(small_spec({5, 5}), 8);
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.epochs = 40;
  cfg.iters_per_epoch = 10;
  cfg.seed = 9;
  const TrainLog log = train(net, data, cfg);
  auto median_loss = [&](std::size_t from, std::size_t to) {
    Vector v;
    for (std::size_t e = from; e < to; ++e) v.push_back(log.epochs[e].loss);
    return median(v);
  };
  EXPECT_LT(median_loss(36, 40), median_loss(0, 4));
  for (const EpochRecord& r : log.epochs) {
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_GE(r.kl, 0.0);
  }
  std::ostringstream csv;
  log.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, 33), "epoch,loss,nll,kl,accuracy,second");
}

TEST(Train, L1BaselineShrinksWeights) {
  const Dataset data = gen_linear(1000, 0.0, 10);
  NetworkSpec s = small_spec({4});
  s.mode = ModelMode::deterministic_l1;
  s.l1.lambda_reg = 20.0;
  Network net = make_network(s, 11);
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.epochs = 100;
  cfg.iters_per_epoch = 10;
  auto l1 = [&] {
    double t = 0.0;
    for (const DenseLayer& l : net.dense)
      for (double w : l.weight.flat()) t += std::abs(w);
    return t;
  };
  const double before = l1();
  train(net, data, cfg);
  EXPECT_LT(l1(), before);
  EXPECT_LT(threshold_mask(net).count(), s.total_weights());
}

TEST(Train, NonFiniteParametersAbort) {
  const Dataset data = gen_linear(100, 0.0, 1);
  Network net = make_network(small_spec({3}), 2);
  net.layers[0].mu(0, 0) = std::numeric_limits<double>::quiet_NaN();
  net.layers[0].lambda(0, 0) = 10.0;
  TrainConfig cfg;
  cfg.lr = 0.01;
  EXPECT_THROW(train(net, data, cfg), NumericError);
}

TEST(Train, InvalidInputs) {
  Network net = make_network(small_spec({3}), 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(net, gen_linear(10, 0.0, 1), cfg), ConfigError);
  cfg.epochs = 1;
  Dataset wrong;
  wrong.x = Matrix(5, 2);
  wrong.y.resize(5);
  EXPECT_THROW(train(net, wrong, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace islab
