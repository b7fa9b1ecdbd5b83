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

#ifndef ISLAB_TRAINER_HPP
#define ISLAB_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "islab/data.hpp"
#include "islab/network.hpp"

namespace islab {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment estimates for one flat parameter block.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t size, AdamSettings settings = {});

  std::size_t size() const { return m_.size(); }
  std::size_t steps() const { return t_; }
  const AdamSettings& settings() const { return settings_; }

 private:
  friend void adam_step(AdamState&, std::span<double>, std::span<const double>, double);

  AdamSettings settings_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 1;
  std::size_t iters_per_epoch = 1;  // number of minibatches per epoch
  std::uint64_t seed = 0;
  std::size_t n_train_mc_samples = 1;
  AdamSettings adam;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;    // sum of per-batch losses over the epoch
  double nll = 0.0;     // sum of batch NLLs
  double kl = 0.0;      // KL (or L1 penalty) at the end of the epoch
  double metric = 0.0;  // train accuracy, or RMSE for gaussian heads
  double seconds = 0.0;
};

struct TrainLog {
  std::string metric_name;
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;

  void write_csv(std::ostream& out) const;
};

// Called after every epoch; handy for progress output.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Minimizes KL / iters_per_epoch + NLL(batch) per step with Adam (or the
// L1-penalized loss for the deterministic baseline). Throws NumericError as
// soon as the loss or a parameter stops being finite.
TrainLog train(Network& net, const Dataset& data, const TrainConfig& config,
               const EpochCallback& on_epoch = {});

}  // namespace islab

#endif  // ISLAB_TRAINER_HPP
