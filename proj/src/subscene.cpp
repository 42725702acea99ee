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

#include "hybridpred/subscene.hpp"

#include "hybridpred/errors.hpp"
#include "hybridpred/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace hybridpred
{

void RewardConfig::validate() const
{
  if (w_goal < 0.0 || w_smooth < 0.0 || w_collision < 0.0) {
    throw ValidationError("reward weights must be non-negative");
  }
  if (!(key_multiplier > 1.0)) {
    throw ValidationError("key-step multiplier must exceed 1");
  }
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw ValidationError("beta must lie in [0, 1)");
  }
  if (!(sigma_goal > 0.0 && sigma_accel > 0.0 && sigma_steer > 0.0 && d_collision > 0.0)) {
    throw ValidationError("reward widths and collision distance must be positive");
  }
}

nlohmann::json EnvConfig::to_json() const
{
  return {
    {"reward",
     {{"w_goal", reward.w_goal},
      {"w_smooth", reward.w_smooth},
      {"w_collision", reward.w_collision},
      {"sigma_goal", reward.sigma_goal},
      {"sigma_accel", reward.sigma_accel},
      {"sigma_steer", reward.sigma_steer},
      {"d_collision", reward.d_collision},
      {"key_multiplier", reward.key_multiplier},
      {"beta", reward.beta},
      {"literal_smoothness", reward.literal_smoothness}}},
    {"vehicle", vehicle.to_json()},
    {"horizon", horizon},
    {"interaction_distance", interaction_distance},
    {"lane_node_spacing", lane_node_spacing},
    {"kinematic", kinematic},
    {"goal_tolerance", goal_tolerance}};
}

EnvConfig EnvConfig::from_json(const nlohmann::json & j, EnvConfig base)
{
  if (!j.is_object()) {
    throw ValidationError("environment config must be an object");
  }
  const auto number = [](const nlohmann::json & v, const std::string & key) {
    if (!v.is_number()) {
      throw ValidationError("config field '" + key + "' must be a number");
    }
    return v.get<double>();
  };
  for (const auto & [key, v] : j.items()) {
    if (key == "reward") {
      if (!v.is_object()) {
        throw ValidationError("reward config must be an object");
      }
      for (const auto & [rk, rv] : v.items()) {
        RewardConfig & r = base.reward;
        if (rk == "literal_smoothness") {
          if (!rv.is_boolean()) {
            throw ValidationError("config field 'literal_smoothness' must be a boolean");
          }
          r.literal_smoothness = rv.get<bool>();
          continue;
        }
        const double x = number(rv, rk);
        if (rk == "w_goal") {
          r.w_goal = x;
        } else if (rk == "w_smooth") {
          r.w_smooth = x;
        } else if (rk == "w_collision") {
          r.w_collision = x;
        } else if (rk == "sigma_goal") {
          r.sigma_goal = x;
        } else if (rk == "sigma_accel") {
          r.sigma_accel = x;
        } else if (rk == "sigma_steer") {
          r.sigma_steer = x;
        } else if (rk == "d_collision") {
          r.d_collision = x;
        } else if (rk == "key_multiplier") {
          r.key_multiplier = x;
        } else if (rk == "beta") {
          r.beta = x;
        } else {
          throw ValidationError("unknown reward config field '" + rk + "'");
        }
      }
    } else if (key == "vehicle") {
      base.vehicle = VehicleParams::from_json(v, base.vehicle);
    } else if (key == "horizon") {
      base.horizon = static_cast<std::size_t>(number(v, key));
    } else if (key == "interaction_distance") {
      base.interaction_distance = number(v, key);
    } else if (key == "lane_node_spacing") {
      base.lane_node_spacing = number(v, key);
    } else if (key == "kinematic") {
      if (!v.is_boolean()) {
        throw ValidationError("config field 'kinematic' must be a boolean");
      }
      base.kinematic = v.get<bool>();
    } else if (key == "goal_tolerance") {
      base.goal_tolerance = number(v, key);
    } else {
      throw ValidationError("unknown environment config field '" + key + "'");
    }
  }
  base.reward.validate();
  if (base.horizon < 1 || !(base.lane_node_spacing > 0.0) || !(base.interaction_distance >= 0.0)) {
    throw ValidationError("invalid environment config");
  }
  return base;
}

std::size_t SubScene::member_slot(const std::string & agent_id) const
{
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (scene->agents[members[s]].id == agent_id) {
      return s;
    }
  }
  throw ContractError("agent '" + agent_id + "' is not a member of the sub-scene");
}

double estimate_speed(const AgentTrack & track)
{
  const std::size_t n = std::min<std::size_t>(5, track.history.size() - 1);
  double total = 0.0;
  for (std::size_t k = track.history.size() - n; k < track.history.size(); ++k) {
    total += distance(track.history[k].position(), track.history[k - 1].position());
  }
  return n == 0 ? 0.0 : total / (static_cast<double>(n) * kStepDt);
}

namespace
{

struct UnionFind
{
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x)
  {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
};

Tensor build_lane_tokens(const Scene & scene, const std::vector<std::string> & lanelets, Vec2 origin, double spacing)
{
  std::vector<double> rows;
  std::size_t n = 0;
  for (const auto & id : lanelets) {
    const Lanelet & l = scene.lanelet(id);
    for (const Vec2 & p : resample(l.centerline, spacing)) {
      const Vec2 q = p - origin;
      const double b_left = project(l.left_boundary, p).distance;
      const double b_right = project(l.right_boundary, p).distance;
      rows.insert(
        rows.end(),
        {q.x / kObservationPositionScale, q.y / kObservationPositionScale,
         l.direction_attr == TrafficDirection::same ? 1.0 : -1.0, b_left / 5.0, -b_right / 5.0,
         l.passable == Passable::green ? 1.0 : 0.0, l.passable == Passable::red ? 1.0 : 0.0,
         l.passable == Passable::uncontrolled ? 1.0 : 0.0});
      ++n;
    }
  }
  return n == 0 ? Tensor() : Tensor({n, kLaneTokenFeatures}, std::move(rows));
}

}  // namespace

std::vector<SubScene> divide_subscenes(
  std::shared_ptr<const Scene> scene, const KeyPositionSet & kps, std::size_t mode, const EnvConfig & config)
{
  const std::size_t A = scene->agents.size();
  std::vector<std::vector<Vec2>> keys(A);
  std::vector<std::vector<Goal>> goals(A);
  std::vector<std::set<std::string>> key_lanelets(A), context(A);
  for (std::size_t i = 0; i < A; ++i) {
    const AgentTrack & track = scene->agents[i];
    const AgentKeyPositions & akp = kps.agent(track.id);
    if (mode >= akp.modes.size()) {
      throw ContractError("mode index out of range for agent " + track.id);
    }
    for (const auto & kp : akp.modes[mode]) {
      const auto lanelet = scene->containing_lanelet(kp.position());
      if (!lanelet) {
        char buf[160];
        std::snprintf(
          buf, sizeof(buf), "agent %s: key position (%.3f, %.3f) lies on no lanelet", track.id.c_str(),
          kp.x, kp.y);
        throw ValidationError(buf);
      }
      key_lanelets[i].insert(*lanelet);
      keys[i].push_back(kp.position());
      goals[i].push_back({static_cast<std::size_t>(std::lround(kp.t / config.vehicle.dt)), kp.position()});
    }
    if (const auto here = scene->containing_lanelet(track.last_position())) {
      key_lanelets[i].insert(*here);
    }
    for (const auto & id : key_lanelets[i]) {
      context[i].insert(id);
      for (const auto & c : scene->lanelet(id).connected()) {
        context[i].insert(c);
      }
    }
  }

  UnionFind uf(A);
  for (std::size_t i = 0; i < A; ++i) {
    for (std::size_t j = i + 1; j < A; ++j) {
      bool linked = false;
      for (const auto & a : keys[i]) {
        for (const auto & b : keys[j]) {
          linked = linked || distance(a, b) <= config.interaction_distance;
        }
      }
      // An agent currently driving on the other's context lanelets also
      // belongs to its sub-scene.
      const auto on_context = [&](std::size_t who, std::size_t owner) {
        const auto here = scene->containing_lanelet(scene->agents[who].last_position());
        return here && context[owner].count(*here) > 0;
      };
      linked = linked || on_context(j, i) || on_context(i, j);
      if (linked) {
        uf.unite(i, j);
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < A; ++i) {
    clusters[uf.find(i)].push_back(i);
  }
  std::vector<SubScene> out;
  for (const auto & [root, members] : clusters) {
    SubScene sub;
    sub.scene = scene;
    sub.mode = mode;
    sub.members = members;
    std::set<std::string> kl, cl;
    for (std::size_t i : members) {
      kl.insert(key_lanelets[i].begin(), key_lanelets[i].end());
      cl.insert(context[i].begin(), context[i].end());
      sub.goals.push_back(goals[i]);
      const AgentTrack & track = scene->agents[i];
      VehicleState s;
      s.x = track.last_position().x;
      s.y = track.last_position().y;
      s.theta = track.heading;
      s.v = std::min(estimate_speed(track), config.vehicle.max_speed);
      sub.initial_states.push_back(s);
    }
    sub.key_lanelets.assign(kl.begin(), kl.end());
    sub.context_lanelets.assign(cl.begin(), cl.end());
    sub.origin = scene->agents[members.front()].last_position();
    sub.lane_tokens = build_lane_tokens(*scene, sub.context_lanelets, sub.origin, config.lane_node_spacing);
    out.push_back(std::move(sub));
  }
  return out;
}

EpisodeState reset(const SubScene & sub)
{
  EpisodeState ep;
  ep.states = sub.initial_states;
  ep.done.assign(sub.members.size(), false);
  ep.collided.assign(sub.members.size(), false);
  return ep;
}

const Goal & current_goal(const SubScene & sub, std::size_t slot, std::size_t step)
{
  const auto & g = sub.goals.at(slot);
  for (const auto & goal : g) {
    if (goal.step >= step) {
      return goal;
    }
  }
  return g.back();
}

MotionFields motion_fields(const SubScene & sub, const EpisodeState & ep, std::size_t slot, const EnvConfig & config)
{
  const VehicleState & s = ep.states.at(slot);
  // The goal the agent is heading for next: deadline strictly after now.
  const Goal & goal = current_goal(sub, slot, ep.step + 1);
  const Vec2 rel = to_local(goal.position, s.position(), s.theta);
  const double remain =
    goal.step > ep.step ? static_cast<double>(goal.step - ep.step) * config.vehicle.dt : 0.0;
  const Vec2 ego = s.position() - sub.origin;
  return {s.v, s.a_long, s.delta, s.yaw_rate, rel.x, rel.y, remain, s.theta, ego.x, ego.y};
}

Observation observe(const SubScene & sub, const EpisodeState & ep, std::size_t slot, const EnvConfig & config)
{
  const MotionFields m = motion_fields(sub, ep, slot, config);
  Observation o;
  o.lane_tokens = &sub.lane_tokens;
  o.motion = Tensor::row_vector(
    {m.v / 10.0, m.a_long / 5.0, m.delta / config.vehicle.max_steer, m.yaw_rate, m.s_goal / 10.0,
     m.d_goal / 10.0, m.t_remain / 3.0, wrap_angle(m.theta) / std::numbers::pi,
     m.x_ego / kObservationPositionScale, m.y_ego / kObservationPositionScale});
  return o;
}

double min_agent_distance(const std::vector<VehicleState> & states, std::size_t slot)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (j != slot) {
      best = std::min(best, distance(states[slot].position(), states[j].position()));
    }
  }
  return best;
}

RewardBreakdown reward(
  const SubScene & sub, std::size_t slot, const VehicleState & prev, const VehicleState & next,
  const std::vector<VehicleState> & all_next, std::size_t step, const EnvConfig & config)
{
  const RewardConfig & rc = config.reward;
  RewardBreakdown r;
  const Goal & goal = current_goal(sub, slot, step);
  r.goal = peak_gaussian(distance(next.position(), goal.position), rc.sigma_goal);
  if (goal.step == step) {
    r.goal *= rc.key_multiplier;
  }
  const double g_a = peak_gaussian(next.a_long, rc.sigma_accel);
  const double g_d = peak_gaussian(next.delta - prev.delta, rc.sigma_steer);
  r.smooth = rc.literal_smoothness ? -(g_a + g_d) : (g_a - 1.0) + (g_d - 1.0);
  const bool hit = min_agent_distance(all_next, slot) < rc.d_collision;
  const bool off_road = !sub.scene->in_drivable_area(next.position());
  r.collision = (hit || off_road) ? -1.0 : 0.0;
  r.total = rc.w_goal * r.goal + rc.w_smooth * r.smooth + rc.w_collision * r.collision;
  return r;
}

ActionVec action_bounds(const EnvConfig & config)
{
  if (config.kinematic) {
    return {config.vehicle.max_steer_increment, config.vehicle.max_speed_increment};
  }
  const double d = config.vehicle.max_speed * config.vehicle.dt;
  return {d, d};
}

StepResult env_step(
  const SubScene & sub, EpisodeState & ep, const std::vector<ActionVec> & actions, const EnvConfig & config)
{
  const std::size_t n = sub.members.size();
  if (actions.size() != n) {
    throw ContractError(
      "env_step: expected " + std::to_string(n) + " actions, got " + std::to_string(actions.size()));
  }
  const std::size_t step = ep.step + 1;
  const double dt = config.vehicle.dt;
  std::vector<VehicleState> next = ep.states;
  StepResult out;
  out.rewards.resize(n);
  out.training_rewards.assign(n, 0.0);
  out.acted.assign(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    if (ep.done[s]) {
      continue;
    }
    out.acted[s] = true;
    if (config.kinematic) {
      next[s] = hybridpred::step(ep.states[s], {actions[s][0], actions[s][1]}, dt, config.vehicle);
    } else {
      next[s] = step_direct(ep.states[s], {actions[s][0], actions[s][1]}, dt, config.vehicle);
    }
  }
  double mean_total = 0.0;
  std::size_t active = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (out.acted[s]) {
      out.rewards[s] = reward(sub, s, ep.states[s], next[s], next, step, config);
      mean_total += out.rewards[s].total;
      ++active;
    }
  }
  mean_total = active > 0 ? mean_total / static_cast<double>(active) : 0.0;
  const double beta = config.reward.beta;
  for (std::size_t s = 0; s < n; ++s) {
    if (!out.acted[s]) {
      continue;
    }
    out.training_rewards[s] = beta == 0.0 ? out.rewards[s].total
                                          : (1.0 - beta) * out.rewards[s].total + beta * mean_total;
    const bool collided = out.rewards[s].collision < 0.0;
    ep.collided[s] = collided;
    const std::size_t deadline = std::min(config.horizon, sub.goals[s].back().step);
    ep.done[s] = collided || step >= deadline;
  }
  ep.states = std::move(next);
  ep.step = step;
  out.episode_done = std::all_of(ep.done.begin(), ep.done.end(), [](bool d) { return d; }) || step >= config.horizon;
  if (out.episode_done) {
    std::fill(ep.done.begin(), ep.done.end(), true);
  }
  return out;
}

void write_trace_header(std::ostream & out)
{
  out << "step,agent_id,x,y,theta,v,delta,r_goal,r_smooth,r_collision,r_total\n";
}

void write_trace_rows(std::ostream & out, const SubScene & sub, const EpisodeState & ep, const StepResult & r)
{
  char buf[512];
  for (std::size_t s = 0; s < sub.members.size(); ++s) {
    if (!r.acted[s]) {
      continue;
    }
    const VehicleState & st = ep.states[s];
    const RewardBreakdown & b = r.rewards[s];
    std::snprintf(
      buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", ep.step,
      sub.scene->agents[sub.members[s]].id.c_str(), st.x, st.y, st.theta, st.v, st.delta, b.goal, b.smooth,
      b.collision, b.total);
    out << buf;
  }
}

Scene straight_goal_task(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speed(5.0, 12.0), accel(-1.5, 1.5);
  const double v0 = speed(rng), a = accel(rng);
  Scene scene;
  std::vector<std::string> ids{"L0", "L1", "L2"};
  for (std::size_t i = 0; i < 3; ++i) {
    const double x0 = -40.0 + 60.0 * static_cast<double>(i);
    Lanelet l = make_lanelet(ids[i], {{x0, 0.0}, {x0 + 30.0, 0.0}, {x0 + 60.0, 0.0}}, 3.5);
    if (i > 0) {
      l.predecessors.push_back(ids[i - 1]);
    }
    if (i < 2) {
      l.successors.push_back(ids[i + 1]);
    }
    scene.lanelets.emplace(ids[i], std::move(l));
  }
  AgentTrack track;
  track.id = "ego";
  for (std::size_t k = 0; k < kHistorySteps; ++k) {
    const double t = -static_cast<double>(kHistorySteps - 1 - k) * kStepDt;
    track.history.push_back({t, v0 * t, 0.0});
  }
  std::vector<TimedPoint> future;
  for (std::size_t k = 1; k <= kFutureSteps; ++k) {
    const double t = static_cast<double>(k) * kStepDt;
    future.push_back({t, v0 * t + 0.5 * a * t * t, 0.0});
  }
  track.future_gt = std::move(future);
  scene.agents.push_back(std::move(track));
  scene.derive_headings();
  scene.validate();
  return scene;
}

}  // namespace hybridpred
