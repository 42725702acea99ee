// Copyright 2026 The hybridpred Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYBRIDPRED__KEY_POSITIONS_HPP_
#define HYBRIDPRED__KEY_POSITIONS_HPP_

#include "hybridpred/scene.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace hybridpred
{

struct AgentKeyPositions
{
  std::string agent_id;
  /// modes[f][k] is the key position of mode f at timestamp k.
  std::vector<std::vector<TimedPoint>> modes;
  std::vector<double> probabilities;

  bool operator==(const AgentKeyPositions &) const = default;
};

struct KeyPositionSet
{
  std::vector<double> timestamps;
  std::vector<AgentKeyPositions> agents;

  const AgentKeyPositions & agent(const std::string & id) const;
  std::size_t n_modes() const;
  /// Throws ValidationError when shapes, timestamps or probabilities are off.
  void validate() const;

  bool operator==(const KeyPositionSet &) const = default;
};

/// Key positions read off the ground-truth future of every agent, as a
/// single mode with probability one.
KeyPositionSet ground_truth_key_positions(const Scene & scene, const std::vector<double> & timestamps);

/// Moves every key position that lies outside the drivable area onto the
/// closest point of the nearest lanelet centerline. Compliant points are
/// returned unchanged.
KeyPositionSet calibrate_key_positions(const KeyPositionSet & kps, const Scene & scene);

/// Number of key positions the calibration moved.
std::size_t count_calibrated(const KeyPositionSet & before, const KeyPositionSet & after);

nlohmann::json key_positions_to_json(const KeyPositionSet & kps);
KeyPositionSet key_positions_from_json(const nlohmann::json & j);

}  // namespace hybridpred

#endif  // HYBRIDPRED__KEY_POSITIONS_HPP_
