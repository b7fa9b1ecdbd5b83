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

// Reference implementations used only to check the library: brute-force,
// Monte Carlo and finite-difference oracles written independently of the
// production code paths.

#ifndef ISLAB_TESTS_ORACLES_HPP
#define ISLAB_TESTS_ORACLES_HPP

#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <vector>

#include "islab/core_math.hpp"
#include "islab/network.hpp"
#include "islab/structure.hpp"
#include "islab/variational_layer.hpp"

namespace islab::oracle {

// Draws gamma ~ Bern(alpha), w ~ N(mu, sigma^2), b ~ N(bias_mu, bias_sigma^2)
// and returns the pre-activation for one input row.
Vector weight_space_preact(const VariationalLayer& layer, std::span<const double> input, Rng& rng);

// Whole-network logits for one row using weight-space draws in every layer.
Vector weight_space_logits(const Network& net, std::span<const double> x, Rng& rng);

struct MonteCarlo {
  double mean = 0.0;
  double std_error = 0.0;
};

// Average of log q(gamma, w) - log p(gamma, w) over draws from q; the spike
// components cancel, leaving only the discrete mixture weights.
MonteCarlo mc_kl(const VariationalLayer& layer, const LayerPrior& prior, std::size_t n, Rng& rng);

// Central difference of f with respect to *param.
double central_difference(const std::function<double()>& f, double* param, double h);

// Exhaustive enumeration of every covariate-to-output path through included
// edges. Returns the set of edges on at least one path and, per covariate,
// the set of contribution depths. `only_output` restricts path endpoints.
struct PathEnumeration {
  std::set<Edge> edges;
  std::vector<std::set<std::size_t>> depths;
};
PathEnumeration enumerate_paths(const StructureMask& mask, long only_output = -1);

// Least-squares fit of f on n points drawn uniformly from the box
// [x - eps, x + eps]. Returns (intercept, slopes...). Throws when n < v + 1.
Vector lime_fit(const std::function<double(std::span<const double>)>& f,
                std::span<const double> x, double eps, std::size_t n, Rng& rng);

// Plain forward pass of a weight sample with ReLU/sigmoid, one row.
Vector naive_forward(const NetworkSpec& spec, const WeightSample& w, std::span<const double> x);

// Random network of the given shape with parameters drawn broadly.
Network random_network(const NetworkSpec& spec, Rng& rng);

}  // namespace islab::oracle

#endif  // ISLAB_TESTS_ORACLES_HPP
