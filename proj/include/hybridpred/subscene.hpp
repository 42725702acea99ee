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

#ifndef HYBRIDPRED__SUBSCENE_HPP_
#define HYBRIDPRED__SUBSCENE_HPP_

#include "hybridpred/key_positions.hpp"
#include "hybridpred/kinematics.hpp"
#include "hybridpred/scene.hpp"
#include "hybridpred/tensor.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace hybridpred
{

struct RewardConfig
{
  double w_goal = 0.6;
  double w_smooth = 0.1;
  double w_collision = 0.5;
  double sigma_goal = 1.0;
  double sigma_accel = 2.0;
  double sigma_steer = 0.02;
  double d_collision = 2.0;
  double key_multiplier = 5.0;
  double beta = 0.25;
  /// Uses -g(a) - g(d_delta) instead of the shifted (g - 1) form.
  bool literal_smoothness = false;

  void validate() const;
};

struct EnvConfig
{
  RewardConfig reward;
  VehicleParams vehicle;
  std::size_t horizon = kFutureSteps;
  double interaction_distance = 15.0;
  double lane_node_spacing = 5.0;
  /// False selects direct positional actions instead of the bicycle model.
  bool kinematic = true;
  /// Distance to the final goal at its deadline that counts as a hit, m.
  double goal_tolerance = 1.0;

  nlohmann::json to_json() const;
  static EnvConfig from_json(const nlohmann::json & j, EnvConfig base);
};

inline constexpr std::size_t kLaneTokenFeatures = 8;
inline constexpr std::size_t kMotionFeatures = 10;
inline constexpr double kObservationPositionScale = 50.0;

struct Goal
{
  /// Number of applied actions after which the agent should be here.
  std::size_t step = 0;
  Vec2 position;
};

struct SubScene
{
  std::shared_ptr<const Scene> scene;
  std::size_t mode = 0;
  std::vector<std::string> key_lanelets;
  std::vector<std::string> context_lanelets;
  /// Indices into scene->agents, ascending.
  std::vector<std::size_t> members;
  std::vector<std::vector<Goal>> goals;
  std::vector<VehicleState> initial_states;
  /// Translation that maps world coordinates into the sub-scene frame.
  Vec2 origin;
  /// Lane tokens: one row per lane node of the context lanelets.
  Tensor lane_tokens;

  std::size_t member_slot(const std::string & agent_id) const;
};

/// Splits the scene into interacting clusters for one key-position mode.
/// Throws ValidationError when a key position lies on no lanelet.
std::vector<SubScene> divide_subscenes(
  std::shared_ptr<const Scene> scene, const KeyPositionSet & kps, std::size_t mode, const EnvConfig & config);

/// Average speed over the last five history displacements.
double estimate_speed(const AgentTrack & track);

struct Observation
{
  /// Shared with the sub-scene; identical for every member and step.
  const Tensor * lane_tokens = nullptr;
  /// 1 x kMotionFeatures.
  Tensor motion;
};

struct EpisodeState
{
  std::size_t step = 0;
  std::vector<VehicleState> states;
  std::vector<bool> done;
  std::vector<bool> collided;
};

EpisodeState reset(const SubScene & sub);

/// Goal in force after `step` actions (the first one whose deadline is not
/// yet passed; the final goal afterwards).
const Goal & current_goal(const SubScene & sub, std::size_t slot, std::size_t step);

/// Unscaled motion fields, in the order of the motion token.
struct MotionFields
{
  double v, a_long, delta, yaw_rate, s_goal, d_goal, t_remain, theta, x_ego, y_ego;
};

MotionFields motion_fields(const SubScene & sub, const EpisodeState & ep, std::size_t slot, const EnvConfig & config);
Observation observe(const SubScene & sub, const EpisodeState & ep, std::size_t slot, const EnvConfig & config);

struct RewardBreakdown
{
  double goal = 0.0;
  double smooth = 0.0;
  double collision = 0.0;
  double total = 0.0;
};

/// Peak-normalised Gaussian, 1 at x = 0.
inline double peak_gaussian(double x, double sigma) { return std::exp(-0.5 * (x / sigma) * (x / sigma)); }

/// Minimum centre distance from `slot` to every other member.
double min_agent_distance(const std::vector<VehicleState> & states, std::size_t slot);

RewardBreakdown reward(
  const SubScene & sub, std::size_t slot, const VehicleState & prev, const VehicleState & next,
  const std::vector<VehicleState> & all_next, std::size_t step, const EnvConfig & config);

struct StepResult
{
  std::vector<RewardBreakdown> rewards;
  /// (1 - beta) * own total + beta * mean total over agents that acted.
  std::vector<double> training_rewards;
  /// Agents that acted this step.
  std::vector<bool> acted;
  bool episode_done = false;
};

/// Physical action: (steering increment, speed increment) for the bicycle
/// model, or (longitudinal, lateral) displacement for direct actions.
using ActionVec = std::array<double, 2>;

/// Per-dimension action bound for the configured action space.
ActionVec action_bounds(const EnvConfig & config);

/// Advances every active member at once. `actions` has one entry per member
/// (indexed like SubScene::members); entries of finished agents are ignored.
/// Throws ContractError when the count does not match the members.
StepResult env_step(
  const SubScene & sub, EpisodeState & ep, const std::vector<ActionVec> & actions, const EnvConfig & config);

/// Episode trace CSV writer.
void write_trace_header(std::ostream & out);
void write_trace_rows(
  std::ostream & out, const SubScene & sub, const EpisodeState & ep, const StepResult & r);

/// Seeded single-agent straight-lane task whose ground truth follows a
/// constant acceleration profile.
Scene straight_goal_task(std::uint64_t seed);

}  // namespace hybridpred

#endif  // HYBRIDPRED__SUBSCENE_HPP_
