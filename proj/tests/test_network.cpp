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
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "islab/errors.hpp"
#include "islab/network.hpp"
#include "islab/structure.hpp"
#include "oracles.hpp"

namespace islab {
namespace {

NetworkSpec make_spec(std::size_t v, std::vector<std::size_t> hidden, std::size_t c,
                      Likelihood lik = Likelihood::bernoulli,
                      Activation act = Activation::sigmoid) {
  NetworkSpec s;
  s.n_covariates = v;
  s.hidden_widths = std::move(hidden);
  s.n_outputs = c;
  s.likelihood = lik;
  s.activation = act;
  s.prior = {1.5, 0.3};
  return s;
}

Matrix random_x(std::size_t n, std::size_t v, Rng& rng) {
  Matrix x(n, v);
  for (double& e : x.flat()) e = rng.uniform(-2.0, 2.0);
  return x;
}

Vector labels_for(const NetworkSpec& s, std::size_t n, Rng& rng) {
  Vector y(n);
  for (double& v : y) {
    if (s.likelihood == Likelihood::gaussian)
      v = rng.uniform(-2.0, 2.0);
    else if (s.likelihood == Likelihood::bernoulli)
      v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    else
      v = static_cast<double>(rng.index(s.n_outputs));
  }
  return y;
}

void freeze_variances(Network& net) {
  for (VariationalLayer& l : net.layers) {
    l.rho.fill(-1e6);
    std::fill(l.bias_rho.begin(), l.bias_rho.end(), -1e6);
  }
}

TEST(NetworkSpec, WeightCountMatchesPaperArchitecture) {
  const NetworkSpec s = make_spec(4, {20, 20, 20, 20}, 1);
  EXPECT_EQ(s.total_weights(), 1544u);
  EXPECT_EQ(s.depth(), 5u);
  EXPECT_EQ(s.hidden_inputs(0), 0u);
  EXPECT_EQ(s.hidden_inputs(3), 20u);
  EXPECT_EQ(s.layer_outputs(4), 1u);
}

TEST(NetworkSpec, ValidationAndJsonRoundTrip) {
  NetworkSpec s = make_spec(3, {5}, 4, Likelihood::categorical, Activation::relu);
  s.l1.lambda_reg = 0.5;
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<NetworkSpec>(), s);
  NetworkSpec bad = s;
  bad.n_covariates = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.likelihood = Likelihood::bernoulli;  // bernoulli needs one output
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_THROW(parse_likelihood("poisson"), std::invalid_argument);
}

TEST(MakeNetwork, LayerShapesAndSubstreams) {
  const NetworkSpec s = make_spec(4, {6, 5}, 1);
  const Network a = make_network(s, 9);
  ASSERT_EQ(a.layers.size(), 3u);
  EXPECT_EQ(a.layers[0].inputs(), 4u);
  EXPECT_EQ(a.layers[1].inputs(), 10u);
  EXPECT_EQ(a.layers[2].inputs(), 9u);
  // adding a layer keeps the draws of the existing ones
  const Network b = make_network(make_spec(4, {6, 5, 3}, 1), 9);
  EXPECT_EQ(a.layers[0].mu, b.layers[0].mu);
  EXPECT_EQ(a.layers[1].lambda, b.layers[1].lambda);
}

TEST(ForwardSample, BlrReducesToGlm) {
  Network net = make_network(make_spec(3, {}, 1), 1);
  net.layers[0].lambda.fill(1e6);
  freeze_variances(net);
  Rng rng(2);
  const Matrix x = random_x(5, 3, rng);
  const SampledForward f = forward_sample(net, x, rng);
  for (std::size_t b = 0; b < 5; ++b) {
    double z = net.layers[0].bias_mu[0];
    for (std::size_t k = 0; k < 3; ++k) z += net.layers[0].mu(0, k) * x(b, k);
    EXPECT_NEAR(f.logits(b, 0), z, 1e-12);
    EXPECT_NEAR(f.params(b, 0), 1.0 / (1.0 + std::exp(-z)), 1e-12);
  }
}

TEST(ForwardSample, BlrMatchesDirectLayerCall) {
  Rng rng(3);
  const Network net = oracle::random_network(make_spec(3, {}, 1), rng);
  const Matrix x = random_x(4, 3, rng);
  Rng a(77), b(77);
  const SampledForward f = forward_sample(net, x, a);
  Rng layer_rng = Rng(b.next_u64()).substream(0);
  const Matrix direct = lrt_forward(net.layers[0], x, layer_rng);
  EXPECT_EQ(f.logits, direct);
  EXPECT_NEAR(total_kl(net), layer_kl(net.layers[0], net.spec.prior), 1e-15);
}

TEST(ForwardSample, ExcludedEverythingIgnoresInput) {
  Rng rng(4);
  Network net = oracle::random_network(make_spec(3, {4}, 1), rng);
  for (VariationalLayer& l : net.layers) l.lambda.fill(-1e6);
  freeze_variances(net);
  const Matrix x = random_x(6, 3, rng);
  const SampledForward f = forward_sample(net, x, rng);
  for (std::size_t b = 1; b < 6; ++b) EXPECT_EQ(f.logits(b, 0), f.logits(0, 0));
}

TEST(ForwardSample, SkipOnlyOutputIsAffineInInput) {
  Rng rng(5);
  Network net = oracle::random_network(make_spec(3, {4}, 1), rng);
  VariationalLayer& out = net.layers[1];
  for (std::size_t k = 0; k < out.inputs(); ++k)
    out.lambda(0, k) = out.is_covariate_column(k) ? 1e6 : -1e6;
  out.rho.fill(-1e6);
  out.bias_rho[0] = -1e6;
  Matrix x(3, 3);
  const Vector x0{0.3, -1.0, 2.0}, d{0.5, 0.25, -0.75};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t k = 0; k < 3; ++k) x(r, k) = x0[k] + static_cast<double>(r) * d[k];
  const SampledForward f = forward_sample(net, x, rng);
  EXPECT_NEAR(f.logits(1, 0) - f.logits(0, 0), f.logits(2, 0) - f.logits(1, 0), 1e-12);
}

TEST(ForwardSample, MatchesWeightSpaceOracle) {
  Rng rng(6);
  Network net = oracle::random_network(make_spec(2, {3}, 1), rng);
  // Gaussian first layer so both samplers see the same hidden distribution
  net.layers[0].lambda.fill(1e6);
  const Vector xv{0.8, -1.1};
  Matrix x(1, 2);
  x(0, 0) = xv[0];
  x(0, 1) = xv[1];
  const std::size_t n = 100000;
  double s1 = 0, ss1 = 0, s2 = 0, ss2 = 0;
  Rng r1(1), r2(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = forward_sample(net, x, r1).logits(0, 0);
    const double b = oracle::weight_space_logits(net, xv, r2)[0];
    s1 += a, ss1 += a * a, s2 += b, ss2 += b * b;
  }
  const double m1 = s1 / n, m2 = s2 / n;
  const double v1 = ss1 / n - m1 * m1, v2 = ss2 / n - m2 * m2;
  EXPECT_NEAR(m1, m2, 4.0 * std::sqrt(v1 / n + v2 / n));
  EXPECT_NEAR(v1 / v2, 1.0, 0.05);
}

TEST(ForwardSample, DeterministicGivenSeed) {
  Rng rng(7);
  const Network net = oracle::random_network(make_spec(3, {4, 2}, 3, Likelihood::categorical), rng);
  const Matrix x = random_x(5, 3, rng);
  Rng a(11), b(11);
  EXPECT_EQ(forward_sample(net, x, a).logits, forward_sample(net, x, b).logits);
}

double network_loss(const Network& net, const Matrix& x, const Vector& y, std::uint64_t seed) {
  Rng r(seed);
  return batch_nll(net.spec, forward_sample(net, x, r).logits, y);
}

TEST(NetworkBackward, MatchesFiniteDifferences) {
  Rng rng(8);
  const std::vector<std::pair<Likelihood, std::size_t>> heads{
      {Likelihood::bernoulli, 1}, {Likelihood::categorical, 3}, {Likelihood::gaussian, 1}};
  for (const auto& [lik, c] : heads)
    for (Activation act : {Activation::sigmoid, Activation::relu}) {
      Network net = oracle::random_network(make_spec(3, {4, 3}, c, lik, act), rng);
      const Matrix x = random_x(6, 3, rng);
      const Vector y = labels_for(net.spec, 6, rng);
      Rng r(99);
      const SampledForward f = forward_sample(net, x, r, true);
      Matrix g;
      batch_nll(net.spec, f.logits, y, &g);
      const std::vector<LayerGradients> grads = network_backward(net, f.cache, g);
      auto loss = [&] { return network_loss(net, x, y, 99); };
      for (std::size_t j = 0; j < net.layers.size(); ++j) {
        VariationalLayer& l = net.layers[j];
        for (std::size_t i = 0; i < l.mu.size(); ++i) {
          for (auto [param, analytic] :
               {std::pair{&l.mu.flat()[i], grads[j].mu.flat()[i]},
                std::pair{&l.rho.flat()[i], grads[j].rho.flat()[i]},
                std::pair{&l.lambda.flat()[i], grads[j].lambda.flat()[i]}}) {
            const double fd = oracle::central_difference(loss, param, 1e-5);
            EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)))
                << to_string(lik) << "/" << to_string(act) << " layer " << j;
          }
        }
        for (std::size_t p = 0; p < l.outputs(); ++p) {
          const double fd = oracle::central_difference(loss, &l.bias_mu[p], 1e-5);
          EXPECT_NEAR(grads[j].bias_mu[p], fd, 1e-5 * std::max(1.0, std::abs(fd)));
          const double fr = oracle::central_difference(loss, &l.bias_rho[p], 1e-5);
          EXPECT_NEAR(grads[j].bias_rho[p], fr, 1e-5 * std::max(1.0, std::abs(fr)));
        }
      }
    }
}

TEST(DenseBackward, MatchesFiniteDifferencesAndL1Subgradient) {
  Rng rng(9);
  NetworkSpec s = make_spec(3, {4, 3}, 1, Likelihood::bernoulli, Activation::relu);
  s.mode = ModelMode::deterministic_l1;
  s.l1.lambda_reg = 0.3;
  Network net = oracle::random_network(s, rng);
  const Matrix x = random_x(6, 3, rng);
  const Vector y = labels_for(s, 6, rng);
  DenseTrace trace;
  const WeightSample w = l1_weights(net);
  const Matrix logits = dense_network_forward(s, w, x, &trace);
  Matrix g;
  batch_nll(s, logits, y, &g);
  const DenseGradients grads = dense_network_backward(s, w, trace, g);
  auto loss = [&] { return l1_loss(net, x, y); };
  for (std::size_t j = 0; j < net.dense.size(); ++j) {
    for (std::size_t i = 0; i < net.dense[j].weight.size(); ++i) {
      double& wi = net.dense[j].weight.flat()[i];
      const double analytic = grads.weight[j].flat()[i] + s.l1.lambda_reg * (wi > 0 ? 1.0 : -1.0);
      const double fd = oracle::central_difference(loss, &wi, 1e-6);
      EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
    for (std::size_t p = 0; p < net.dense[j].bias.size(); ++p) {
      const double fd = oracle::central_difference(loss, &net.dense[j].bias[p], 1e-6);
      EXPECT_NEAR(grads.bias[j][p], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
  // input gradient through both skip and hidden routes
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.flat()[i] += h;
    xm.flat()[i] -= h;
    const double fd = (batch_nll(s, dense_network_forward(s, w, xp), y) -
                       batch_nll(s, dense_network_forward(s, w, xm), y)) / (2 * h);
    EXPECT_NEAR(grads.input.flat()[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(L1, ZeroPenaltyIsPlainNll) {
  Rng rng(10);
  NetworkSpec s = make_spec(2, {3}, 1);
  s.mode = ModelMode::deterministic_l1;
  const Network net = oracle::random_network(s, rng);
  const Matrix x = random_x(4, 2, rng);
  const Vector y = labels_for(s, 4, rng);
  EXPECT_DOUBLE_EQ(l1_loss(net, x, y),
                   batch_nll(s, dense_network_forward(s, l1_weights(net), x), y));
}

TEST(L1, PrunedTinyWeightsGiveConstantOutput) {
  Rng rng(11);
  NetworkSpec s = make_spec(2, {3}, 1);
  s.mode = ModelMode::deterministic_l1;
  Network net = oracle::random_network(s, rng);
  for (DenseLayer& l : net.dense)
    for (double& w : l.weight.flat()) w = rng.uniform(-0.0049, 0.0049);
  const StructureMask mask = threshold_mask(net);
  EXPECT_EQ(mask.count(), 0u);
  const Matrix out = dense_network_forward(s, l1_weights(net, &mask), random_x(5, 2, rng));
  for (std::size_t b = 1; b < 5; ++b) EXPECT_EQ(out(b, 0), out(0, 0));
}

TEST(LogLikelihood, ClosedForms) {
  const NetworkSpec b = make_spec(1, {}, 1);
  EXPECT_NEAR(log_likelihood(b, std::vector<double>{0.5}, 0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(log_likelihood(b, std::vector<double>{0.5}, 1.0), std::log(0.5), 1e-15);
  const NetworkSpec c = make_spec(1, {}, 10, Likelihood::categorical);
  EXPECT_NEAR(log_likelihood(c, std::vector<double>(10, 0.1), 3.0), std::log(0.1), 1e-15);
  const NetworkSpec g = make_spec(1, {}, 1, Likelihood::gaussian);
  EXPECT_NEAR(log_likelihood(g, std::vector<double>{1.7}, 1.7), -0.918938533204672742, 1e-15);
}

TEST(BatchNll, AgreesWithLogLikelihoodOfHead) {
  Rng rng(12);
  for (const auto& [lik, c] : std::vector<std::pair<Likelihood, std::size_t>>{
           {Likelihood::bernoulli, 1}, {Likelihood::categorical, 4}, {Likelihood::gaussian, 1}}) {
    const NetworkSpec s = make_spec(1, {}, c, lik);
    const Matrix logits = random_x(5, c, rng);
    const Vector y = labels_for(s, 5, rng);
    const Matrix params = output_params(s, logits);
    double direct = 0.0;
    for (std::size_t b = 0; b < 5; ++b) direct -= log_likelihood(s, params.row(b), y[b]);
    EXPECT_NEAR(batch_nll(s, logits, y), direct, 1e-12);
  }
}

TEST(TotalKl, ZeroAtPriorAndMonteCarloOnTwoLayers) {
  Rng rng(13);
  NetworkSpec s = make_spec(2, {3}, 1);
  Network net = make_network(s, 1);
  for (VariationalLayer& l : net.layers) {
    l.lambda.fill(logit(s.prior.psi));
    l.mu.fill(0.0);
    l.rho.fill(softplus_inverse(s.prior.prior_std));
    std::fill(l.bias_mu.begin(), l.bias_mu.end(), 0.0);
    std::fill(l.bias_rho.begin(), l.bias_rho.end(), softplus_inverse(s.prior.prior_std));
  }
  EXPECT_NEAR(total_kl(net), 0.0, 1e-12);

  const Network r = oracle::random_network(s, rng);
  double mean = 0.0, var = 0.0;
  for (const VariationalLayer& l : r.layers) {
    const oracle::MonteCarlo mc = oracle::mc_kl(l, s.prior, 400000, rng);
    mean += mc.mean;
    var += mc.std_error * mc.std_error;
  }
  EXPECT_NEAR(total_kl(r), mean, 3.0 * std::sqrt(var));
}

TEST(TotalKl, DecreasesAsAlphaApproachesPsi) {
  NetworkSpec s = make_spec(1, {}, 1);
  Network net = make_network(s, 2);
  VariationalLayer& l = net.layers[0];
  l.mu.fill(0.0);
  l.rho.fill(softplus_inverse(s.prior.prior_std));
  l.bias_mu[0] = 0.0;
  l.bias_rho[0] = softplus_inverse(s.prior.prior_std);
  double previous = std::numeric_limits<double>::infinity();
  for (double lam = 4.0; lam > logit(s.prior.psi); lam -= 0.5) {
    l.lambda(0, 0) = lam;
    const double kl = total_kl(net);
    EXPECT_LT(kl, previous);
    previous = kl;
  }
}

TEST(Predict, DeterministicNetIgnoresSampleCount) {
  Rng rng(14);
  Network net = oracle::random_network(make_spec(3, {4}, 1), rng);
  for (VariationalLayer& l : net.layers)
    for (double& v : l.lambda.flat()) v = v > 0 ? 1e6 : -1e6;
  freeze_variances(net);
  const Matrix x = random_x(10, 3, rng);
  Rng a(1), b(2);
  const Prediction p1 = predict(net, x, 1, a);
  const Prediction p100 = predict(net, x, 100, b);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(p1.mean(i, 0), p100.mean(i, 0), 1e-14);
    EXPECT_DOUBLE_EQ(p100.lower(i, 0), p100.upper(i, 0));
  }
}

TEST(Predict, IntervalsBracketTheMean) {
  Rng rng(15);
  const Network net = oracle::random_network(make_spec(3, {5}, 1), rng);
  const Matrix x = random_x(1000, 3, rng);
  const Prediction p = predict(net, x, 100, rng);
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_LE(p.lower(i, 0), p.mean(i, 0));
    EXPECT_LE(p.mean(i, 0), p.upper(i, 0));
  }
}

TEST(Predict, ReplayOracleForBernoulliHead) {
  Rng rng(16);
  const Network net = oracle::random_network(make_spec(2, {3}, 1), rng);
  const Matrix x = random_x(7, 2, rng);
  Rng a(5), b(5);
  const Prediction p = predict(net, x, 50, a);
  Vector avg(7, 0.0);
  for (int s = 0; s < 50; ++s) {
    const Matrix logits = forward_sample(net, x, b).logits;
    for (std::size_t i = 0; i < 7; ++i) avg[i] += 1.0 / (1.0 + std::exp(-logits(i, 0))) / 50.0;
  }
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(p.mean(i, 0), avg[i], 1e-12);
}

TEST(Predict, SameSeedSamePrediction) {
  Rng rng(17);
  const Network net = oracle::random_network(make_spec(2, {3}, 1), rng);
  const Matrix x = random_x(4, 2, rng);
  const StructureMask mask = extract_mpm(net);
  Rng a(3), b(3);
  EXPECT_EQ(predict(net, x, 20, a, &mask).mean, predict(net, x, 20, b, &mask).mean);
}

TEST(Serialization, RoundTripIsBitExact) {
  Rng rng(18);
  const Network net = oracle::random_network(make_spec(3, {4, 2}, 3, Likelihood::categorical), rng);
  const Network back = deserialize(serialize(net));
  EXPECT_EQ(back.spec, net.spec);
  EXPECT_EQ(back.seed, net.seed);
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    EXPECT_EQ(back.layers[j].mu, net.layers[j].mu);
    EXPECT_EQ(back.layers[j].rho, net.layers[j].rho);
    EXPECT_EQ(back.layers[j].lambda, net.layers[j].lambda);
    EXPECT_EQ(back.layers[j].bias_mu, net.layers[j].bias_mu);
    EXPECT_EQ(back.layers[j].bias_rho, net.layers[j].bias_rho);
  }
  NetworkSpec s = make_spec(2, {3}, 1);
  s.mode = ModelMode::deterministic_l1;
  const Network l1 = oracle::random_network(s, rng);
  const Network l1_back = deserialize(serialize(l1));
  for (std::size_t j = 0; j < l1.dense.size(); ++j) {
    EXPECT_EQ(l1_back.dense[j].weight, l1.dense[j].weight);
    EXPECT_EQ(l1_back.dense[j].bias, l1.dense[j].bias);
  }
}

TEST(Serialization, CorruptInputIsRejected) {
  Rng rng(19);
  const std::string bytes = serialize(oracle::random_network(make_spec(2, {3}, 1), rng));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize(bad), FormatError);
  EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 8)), FormatError);
  EXPECT_THROW(deserialize(bytes + "extra"), FormatError);
  EXPECT_THROW(deserialize(""), FormatError);
}

TEST(Serialization, FileRoundTrip) {
  Rng rng(20);
  const Network net = oracle::random_network(make_spec(2, {3}, 1), rng);
  const auto path = std::filesystem::temp_directory_path() / "islab_roundtrip.model";
  save_network(net, path.string());
  EXPECT_EQ(serialize(load_network(path.string())), serialize(net));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace islab
