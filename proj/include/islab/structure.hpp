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

#ifndef ISLAB_STRUCTURE_HPP
#define ISLAB_STRUCTURE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "islab/network.hpp"
#include "islab/variational_layer.hpp"

namespace islab {

// Median probability model: edge included iff alpha > 0.5.
StructureMask extract_mpm(const Network& net);

// Magnitude pruning of the L1 baseline: edge kept iff |w| > threshold.
StructureMask threshold_mask(const Network& net, double threshold);
StructureMask threshold_mask(const Network& net);  // uses spec.l1.prune_threshold

// One draw gamma ~ Bernoulli(alpha) per edge.
StructureMask sample_structure(const Network& net, Rng& rng);

// Empty or full mask shaped for `spec`.
StructureMask make_mask(const NetworkSpec& spec, bool value);

// Edge (layer, target p, source column k) of the layered graph.
struct Edge {
  std::size_t layer = 0;
  std::size_t target = 0;
  std::size_t source = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct ActivePathGraph {
  std::size_t covariates = 0;
  StructureMask kept;                            // edges lying on a covariate-to-output path
  std::vector<std::vector<std::uint8_t>> active;  // per layer: target node on a kept path
  // Per covariate: distinct contribution depths, ascending.
  std::vector<std::vector<std::size_t>> depths;
  std::size_t used_weights = 0;
  std::size_t total_weights = 0;

  std::size_t depth() const { return kept.layers.size(); }
  double density() const;
  std::vector<Edge> edges() const;
  std::size_t active_nodes(std::size_t layer) const;
};

// Keeps an included edge iff its source is reachable from some covariate and
// its target reaches an output. With `only_output` set, reachability starts
// from that single output node.
ActivePathGraph active_paths(const StructureMask& mask,
                             std::optional<std::size_t> only_output = std::nullopt);

struct DepthSummary {
  std::size_t max_depth = 0;
  double avg_depth = 0.0;
  std::vector<std::vector<std::size_t>> per_covariate;
};

// A kept covariate edge in layer j (0-based) of a J-layer net contributes
// depth J - j. The average counts each (covariate, layer) pair once.
DepthSummary depth_metrics(const ActivePathGraph& graph, std::size_t J);
DepthSummary depth_metrics(const ActivePathGraph& graph);

std::vector<bool> covariate_inclusion(const ActivePathGraph& graph);

// Exports. Edge labels carry alpha and the mean weight for variational
// models, the weight itself for the L1 baseline.
std::string to_dot(const ActivePathGraph& graph, const Network& net,
                   const std::vector<std::string>& covariate_names = {});
nlohmann::json to_json(const ActivePathGraph& graph, const Network& net,
                       const std::vector<std::string>& covariate_names = {});

}  // namespace islab

#endif  // ISLAB_STRUCTURE_HPP
