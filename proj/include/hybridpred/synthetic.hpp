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

#ifndef HYBRIDPRED__SYNTHETIC_HPP_
#define HYBRIDPRED__SYNTHETIC_HPP_

#include "hybridpred/scene.hpp"

#include <cstdint>
#include <string>

namespace hybridpred
{

enum class SceneKind { straight, curve, merge, intersection };

const char * to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string & s);

struct SyntheticOptions
{
  double lane_width = 3.5;
  double min_speed = 5.0;
  double max_speed = 12.0;
  /// Per-coordinate standard deviation of history noise, meters.
  double history_noise = 0.02;
  /// Minimum distance between agents' current positions, meters.
  double min_spacing = 8.0;
};

/// Map of the requested kind with `n_agents` lane-following agents. Histories
/// are constant-speed along the lane plus Gaussian noise; futures continue at
/// the same speed along the lane without noise. Deterministic in `seed`.
Scene generate_synthetic_scene(
  SceneKind kind, std::size_t n_agents, std::uint64_t seed, const SyntheticOptions & options = {});

/// Builds a lanelet from a dense centerline, with boundaries offset by half
/// the lane width.
Lanelet make_lanelet(std::string id, const Polyline & centerline, double width);

}  // namespace hybridpred

#endif  // HYBRIDPRED__SYNTHETIC_HPP_
