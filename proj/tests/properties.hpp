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

// Property checks shared by the acceptance suite. Each check runs an
// independent oracle against the library and reports the worst deviation.

#ifndef ISLAB_TESTS_PROPERTIES_HPP
#define ISLAB_TESTS_PROPERTIES_HPP

#include <cstdint>
#include <string>

namespace islab::property {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome kl_matches_monte_carlo(std::size_t layers, std::size_t samples, std::uint64_t seed);
Outcome lrt_moments_match_weight_space(std::size_t trials, std::size_t draws, std::uint64_t seed);
Outcome layer_backward_matches_finite_differences(std::size_t configs, std::uint64_t seed);
Outcome active_paths_match_enumeration();
Outcome depth_anchor_cases();
Outcome explanation_identity(std::size_t nets, std::uint64_t seed);
Outcome lime_recovers_slopes(std::size_t nets, std::uint64_t seed);
Outcome calibration_and_pinball_identities(std::uint64_t seed);

}  // namespace islab::property

#endif  // ISLAB_TESTS_PROPERTIES_HPP
