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

#include "islab/structure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

namespace islab {

namespace {

template <typename Pred>
StructureMask mask_from(const NetworkSpec& spec, Pred included) {
  StructureMask mask = make_mask(spec, false);
  for (std::size_t j = 0; j < mask.layers.size(); ++j) {
    LayerMask& lm = mask.layers[j];
    for (std::size_t p = 0; p < lm.rows; ++p)
      for (std::size_t k = 0; k < lm.cols; ++k) lm.set(p, k, included(j, p, k));
  }
  return mask;
}

void require_variational(const Network& net, const char* op) {
  if (!net.variational())
    throw std::invalid_argument(std::string(op) + ": model has no inclusion probabilities");
}

std::string node_name(const ActivePathGraph& g, std::size_t layer, std::size_t k,
                      bool source) {
  if (!source) {
    if (layer + 1 == g.depth()) return "y" + std::to_string(k + 1);
    return "h" + std::to_string(layer + 1) + "_" + std::to_string(k + 1);
  }
  const std::size_t hidden = g.kept.layers[layer].hidden_inputs;
  if (k >= hidden) return "x" + std::to_string(k - hidden + 1);
  return "h" + std::to_string(layer) + "_" + std::to_string(k + 1);
}

std::string covariate_label(const std::vector<std::string>& names, std::size_t i) {
  return i < names.size() ? names[i] : "x" + std::to_string(i + 1);
}

}  // namespace

StructureMask make_mask(const NetworkSpec& spec, bool value) {
  StructureMask mask;
  mask.covariates = spec.n_covariates;
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    const std::size_t hidden = spec.hidden_inputs(j);
    mask.layers.emplace_back(spec.layer_outputs(j), hidden + spec.n_covariates, hidden, value);
  }
  return mask;
}

StructureMask extract_mpm(const Network& net) {
  require_variational(net, "extract_mpm");
  return mask_from(net.spec, [&](std::size_t j, std::size_t p, std::size_t k) {
    return net.layers[j].alpha(p, k) > 0.5;
  });
}

StructureMask threshold_mask(const Network& net, double threshold) {
  if (net.variational())
    return mask_from(net.spec, [&](std::size_t j, std::size_t p, std::size_t k) {
      return std::abs(net.layers[j].mu(p, k)) > threshold;
    });
  return mask_from(net.spec, [&](std::size_t j, std::size_t p, std::size_t k) {
    return std::abs(net.dense[j].weight(p, k)) > threshold;
  });
}

StructureMask threshold_mask(const Network& net) {
  return threshold_mask(net, net.spec.l1.prune_threshold);
}

StructureMask sample_structure(const Network& net, Rng& rng) {
  require_variational(net, "sample_structure");
  return mask_from(net.spec, [&](std::size_t j, std::size_t p, std::size_t k) {
    return rng.bernoulli(net.layers[j].alpha(p, k));
  });
}

double ActivePathGraph::density() const {
  return total_weights == 0 ? 0.0
                            : static_cast<double>(used_weights) / static_cast<double>(total_weights);
}

std::vector<Edge> ActivePathGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t j = 0; j < kept.layers.size(); ++j) {
    const LayerMask& lm = kept.layers[j];
    for (std::size_t p = 0; p < lm.rows; ++p)
      for (std::size_t k = 0; k < lm.cols; ++k)
        if (lm(p, k)) out.push_back({j, p, k});
  }
  return out;
}

std::size_t ActivePathGraph::active_nodes(std::size_t layer) const {
  return static_cast<std::size_t>(std::count(active[layer].begin(), active[layer].end(), 1));
}

ActivePathGraph active_paths(const StructureMask& mask, std::optional<std::size_t> only_output) {
  const std::size_t J = mask.layers.size();
  if (J == 0) throw std::invalid_argument("active_paths: empty mask");
  for (std::size_t j = 0; j < J; ++j) {
    const LayerMask& lm = mask.layers[j];
    const std::size_t expected_hidden = j == 0 ? 0 : mask.layers[j - 1].rows;
    if (lm.hidden_inputs != expected_hidden || lm.cols != lm.hidden_inputs + mask.covariates ||
        lm.bits.size() != lm.rows * lm.cols)
      throw std::invalid_argument("active_paths: malformed mask at layer " + std::to_string(j));
  }
  if (only_output && *only_output >= mask.layers.back().rows)
    throw std::invalid_argument("active_paths: output index out of range");

  // forward[j][p]: target p of layer j is fed by some covariate.
  std::vector<std::vector<std::uint8_t>> forward(J);
  for (std::size_t j = 0; j < J; ++j) {
    const LayerMask& lm = mask.layers[j];
    forward[j].assign(lm.rows, 0);
    for (std::size_t p = 0; p < lm.rows; ++p)
      for (std::size_t k = 0; k < lm.cols && !forward[j][p]; ++k)
        if (lm(p, k) && (k >= lm.hidden_inputs || forward[j - 1][k])) forward[j][p] = 1;
  }

  // backward[j][p]: target p of layer j reaches an output.
  std::vector<std::vector<std::uint8_t>> backward(J);
  backward[J - 1].assign(mask.layers[J - 1].rows, only_output ? 0 : 1);
  if (only_output) backward[J - 1][*only_output] = 1;
  for (std::size_t j = J - 1; j-- > 0;) {
    backward[j].assign(mask.layers[j].rows, 0);
    const LayerMask& next = mask.layers[j + 1];
    for (std::size_t q = 0; q < next.rows; ++q) {
      if (!backward[j + 1][q]) continue;
      for (std::size_t p = 0; p < next.hidden_inputs; ++p)
        if (next(q, p)) backward[j][p] = 1;
    }
  }

  ActivePathGraph g;
  g.covariates = mask.covariates;
  g.kept.covariates = mask.covariates;
  g.active.resize(J);
  std::vector<std::set<std::size_t>> depth_sets(mask.covariates);
  for (std::size_t j = 0; j < J; ++j) {
    const LayerMask& lm = mask.layers[j];
    LayerMask kept(lm.rows, lm.cols, lm.hidden_inputs, false);
    g.active[j].assign(lm.rows, 0);
    g.total_weights += lm.rows * lm.cols;
    for (std::size_t p = 0; p < lm.rows; ++p) {
      if (!backward[j][p]) continue;
      for (std::size_t k = 0; k < lm.cols; ++k) {
        const bool covariate = k >= lm.hidden_inputs;
        if (!lm(p, k) || !(covariate || forward[j - 1][k])) continue;
        kept.set(p, k, true);
        g.active[j][p] = 1;
        ++g.used_weights;
        if (covariate) depth_sets[k - lm.hidden_inputs].insert(J - j);
      }
    }
    g.kept.layers.push_back(std::move(kept));
  }
  for (const auto& s : depth_sets) g.depths.emplace_back(s.begin(), s.end());
  return g;
}

DepthSummary depth_metrics(const ActivePathGraph& graph, std::size_t J) {
  if (J != graph.depth()) throw std::invalid_argument("depth_metrics: J does not match graph");
  DepthSummary out;
  out.per_covariate = graph.depths;
  std::size_t count = 0;
  double sum = 0.0;
  for (const auto& set : graph.depths)
    for (std::size_t d : set) {
      out.max_depth = std::max(out.max_depth, d);
      sum += static_cast<double>(d);
      ++count;
    }
  out.avg_depth = count == 0 ? 0.0 : sum / static_cast<double>(count);
  return out;
}

DepthSummary depth_metrics(const ActivePathGraph& graph) {
  return depth_metrics(graph, graph.depth());
}

std::vector<bool> covariate_inclusion(const ActivePathGraph& graph) {
  std::vector<bool> out(graph.covariates, false);
  for (std::size_t i = 0; i < graph.covariates; ++i) out[i] = !graph.depths[i].empty();
  return out;
}

std::string to_dot(const ActivePathGraph& graph, const Network& net,
                   const std::vector<std::string>& names) {
  std::ostringstream out;
  out << std::setprecision(4);
  out << "digraph active_paths {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (std::size_t i = 0; i < graph.covariates; ++i)
    if (!graph.depths[i].empty())
      out << "  x" << i + 1 << " [shape=box, label=\"" << covariate_label(names, i) << "\"];\n";
  for (std::size_t j = 0; j < graph.depth(); ++j)
    for (std::size_t p = 0; p < graph.active[j].size(); ++p)
      if (graph.active[j][p]) out << "  " << node_name(graph, j, p, false) << ";\n";
  for (const Edge& e : graph.edges()) {
    out << "  " << node_name(graph, e.layer, e.source, true) << " -> "
        << node_name(graph, e.layer, e.target, false) << " [label=\"";
    if (net.variational())
      out << "a=" << net.layers[e.layer].alpha(e.target, e.source)
          << ", w=" << net.layers[e.layer].mu(e.target, e.source);
    else
      out << "w=" << net.dense[e.layer].weight(e.target, e.source);
    out << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json to_json(const ActivePathGraph& graph, const Network& net,
                       const std::vector<std::string>& names) {
  using nlohmann::json;
  const DepthSummary depth = depth_metrics(graph);
  json edges = json::array();
  for (const Edge& e : graph.edges()) {
    json je = {{"layer", e.layer},
               {"from", node_name(graph, e.layer, e.source, true)},
               {"to", node_name(graph, e.layer, e.target, false)}};
    if (net.variational()) {
      je["alpha"] = net.layers[e.layer].alpha(e.target, e.source);
      je["mu"] = net.layers[e.layer].mu(e.target, e.source);
      je["sigma"] = net.layers[e.layer].sigma(e.target, e.source);
    } else {
      je["weight"] = net.dense[e.layer].weight(e.target, e.source);
    }
    edges.push_back(std::move(je));
  }
  json nodes = json::array();
  for (std::size_t j = 0; j < graph.depth(); ++j)
    for (std::size_t p = 0; p < graph.active[j].size(); ++p)
      if (graph.active[j][p]) nodes.push_back(node_name(graph, j, p, false));
  json covs = json::array();
  for (std::size_t i = 0; i < graph.covariates; ++i)
    covs.push_back({{"name", covariate_label(names, i)},
                    {"included", !graph.depths[i].empty()},
                    {"depths", graph.depths[i]}});
  return {{"layers", graph.depth()},
          {"used_weights", graph.used_weights},
          {"total_weights", graph.total_weights},
          {"density", graph.density()},
          {"max_depth", depth.max_depth},
          {"avg_depth", depth.avg_depth},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"covariates", std::move(covs)}};
}

}  // namespace islab
