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

#ifndef HYBRIDPRED__PIPELINE_HPP_
#define HYBRIDPRED__PIPELINE_HPP_

#include "hybridpred/encoder.hpp"
#include "hybridpred/key_positions.hpp"
#include "hybridpred/metrics.hpp"
#include "hybridpred/ppo.hpp"
#include "hybridpred/subscene.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <vector>

namespace hybridpred
{

/// Piecewise-linear trajectory from the last observed position through the
/// key positions, sampled at 10 Hz for `steps` steps. Past the last key the
/// final segment's velocity is held.
Trajectory interpolate_key_positions(
  const AgentTrack & track, const std::vector<TimedPoint> & keys, std::size_t steps = kFutureSteps);

/// DL-only trajectories: one interpolated trajectory per key-position mode.
PredictionSet key_position_trajectories(const Scene & scene, const KeyPositionSet & kps);

struct PipelineResult
{
  KeyPositionSet raw_key_positions;
  KeyPositionSet calibrated_key_positions;
  /// Per mode, the sub-scenes the RL stage planned in.
  std::vector<std::vector<SubScene>> subscenes;
  PredictionSet predictions;
};

/// RL stage: divides the scene per mode and plans every sub-scene with the
/// deterministic policy. With `trace`, the episodes of the first mode are
/// written as episode trace rows.
PipelineResult plan_from_key_positions(
  std::shared_ptr<const Scene> scene, const KeyPositionSet & raw_kps, const PolicyNet & policy,
  const EnvConfig & env, std::ostream * trace = nullptr);

/// Full pipeline: encoder, calibration, sub-scene division, planning.
PipelineResult predict_scene(
  std::shared_ptr<const Scene> scene, const HeteroEncoder & encoder, const PolicyNet & policy,
  const EnvConfig & env, std::ostream * trace = nullptr);

nlohmann::json subscene_membership_json(const PipelineResult & result);

}  // namespace hybridpred

#endif  // HYBRIDPRED__PIPELINE_HPP_
