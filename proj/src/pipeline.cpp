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

#include "hybridpred/pipeline.hpp"

#include "hybridpred/errors.hpp"

namespace hybridpred
{

Trajectory interpolate_key_positions(
  const AgentTrack & track, const std::vector<TimedPoint> & keys, std::size_t steps)
{
  if (keys.empty()) {
    throw ContractError("interpolate_key_positions: no key positions");
  }
  std::vector<TimedPoint> knots{{0.0, track.last_position().x, track.last_position().y}};
  knots.insert(knots.end(), keys.begin(), keys.end());
  Trajectory out;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * kStepDt;
    std::size_t seg = 1;
    while (seg + 1 < knots.size() && knots[seg].t < t - 1e-9) {
      ++seg;
    }
    const TimedPoint & a = knots[seg - 1];
    const TimedPoint & b = knots[seg];
    const double u = (t - a.t) / (b.t - a.t);
    out.push_back(a.position() + (b.position() - a.position()) * u);
  }
  return out;
}

PredictionSet key_position_trajectories(const Scene & scene, const KeyPositionSet & kps)
{
  PredictionSet set;
  for (const auto & track : scene.agents) {
    const AgentKeyPositions & a = kps.agent(track.id);
    AgentPrediction p;
    p.agent_id = track.id;
    p.probabilities = a.probabilities;
    for (const auto & mode : a.modes) {
      p.modes.push_back(interpolate_key_positions(track, mode));
    }
    if (track.future_gt) {
      p.ground_truth = ground_truth_trajectory(track);
    }
    set.agents.push_back(std::move(p));
  }
  return set;
}

PipelineResult plan_from_key_positions(
  std::shared_ptr<const Scene> scene, const KeyPositionSet & raw_kps, const PolicyNet & policy,
  const EnvConfig & env, std::ostream * trace)
{
  PipelineResult result;
  result.raw_key_positions = raw_kps;
  result.calibrated_key_positions = calibrate_key_positions(raw_kps, *scene);
  const KeyPositionSet & kps = result.calibrated_key_positions;

  const std::size_t F = kps.n_modes();
  for (const auto & track : scene->agents) {
    AgentPrediction p;
    p.agent_id = track.id;
    p.probabilities = kps.agent(track.id).probabilities;
    p.modes.assign(F, {});
    if (track.future_gt) {
      p.ground_truth = ground_truth_trajectory(track);
    }
    result.predictions.agents.push_back(std::move(p));
  }
  std::mt19937_64 unused(0);
  for (std::size_t f = 0; f < F; ++f) {
    auto subs = divide_subscenes(scene, kps, f, env);
    for (const auto & sub : subs) {
      const Rollout r = rollout_predict(sub, policy, env, true, unused, f == 0 ? trace : nullptr);
      for (std::size_t s = 0; s < sub.members.size(); ++s) {
        result.predictions.agents[sub.members[s]].modes[f] = r.trajectories[s];
      }
    }
    result.subscenes.push_back(std::move(subs));
  }
  return result;
}

PipelineResult predict_scene(
  std::shared_ptr<const Scene> scene, const HeteroEncoder & encoder, const PolicyNet & policy,
  const EnvConfig & env, std::ostream * trace)
{
  return plan_from_key_positions(scene, encoder.predict(*scene), policy, env, trace);
}

nlohmann::json subscene_membership_json(const PipelineResult & result)
{
  nlohmann::json modes = nlohmann::json::array();
  for (const auto & subs : result.subscenes) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto & sub : subs) {
      std::vector<std::string> ids;
      for (std::size_t i : sub.members) {
        ids.push_back(sub.scene->agents[i].id);
      }
      list.push_back(
        {{"members", ids}, {"key_lanelets", sub.key_lanelets}, {"context_lanelets", sub.context_lanelets}});
    }
    modes.push_back(list);
  }
  return modes;
}

}  // namespace hybridpred
