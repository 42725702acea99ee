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

#include "hybridpred/errors.hpp"
#include "hybridpred/key_positions.hpp"
#include "hybridpred/subscene.hpp"
#include "hybridpred/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace hybridpred;  // NOLINT

namespace
{

// Track at `last` moving with `vel`, with a constant-velocity future.
AgentTrack track(const std::string & id, Vec2 last, Vec2 vel)
{
  AgentTrack t;
  t.id = id;
  for (std::size_t k = 0; k < kHistorySteps; ++k) {
    const double back = static_cast<double>(kHistorySteps - 1 - k) * kStepDt;
    t.history.push_back({-back, last.x - vel.x * back, last.y - vel.y * back});
  }
  std::vector<TimedPoint> fut;
  for (std::size_t k = 1; k <= kFutureSteps; ++k) {
    const double tk = static_cast<double>(k) * kStepDt;
    fut.push_back({tk, last.x + vel.x * tk, last.y + vel.y * tk});
  }
  t.future_gt = fut;
  return t;
}

// Parallel, unconnected east-bound lanes at the given y offsets.
Scene lanes_at(const std::vector<double> & ys, double length = 300.0)
{
  Scene s;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const std::string id = "L" + std::to_string(i);
    s.lanelets.emplace(id, make_lanelet(id, {{0.0, ys[i]}, {length / 2, ys[i]}, {length, ys[i]}}, 3.5));
  }
  return s;
}

// One mode, one key at t = 3 s per agent.
KeyPositionSet final_keys(const Scene & scene, const std::vector<Vec2> & keys)
{
  KeyPositionSet kps;
  kps.timestamps = {3.0};
  for (std::size_t i = 0; i < keys.size(); ++i) {
    kps.agents.push_back({scene.agents[i].id, {{{3.0, keys[i].x, keys[i].y}}}, {1.0}});
  }
  return kps;
}

std::vector<SubScene> divide(Scene scene, const KeyPositionSet & kps, const EnvConfig & cfg = {})
{
  scene.derive_headings();
  return divide_subscenes(std::make_shared<const Scene>(std::move(scene)), kps, 0, cfg);
}

Scene rotated(const Scene & s, double angle)
{
  const auto r = [&](const Vec2 & p) { return rotate(p, angle); };
  Scene out = s;
  for (auto & [id, l] : out.lanelets) {
    for (auto * line : {&l.centerline, &l.left_boundary, &l.right_boundary}) {
      std::transform(line->begin(), line->end(), line->begin(), r);
    }
  }
  for (auto & a : out.agents) {
    for (auto & p : a.history) {
      const Vec2 q = r(p.position());
      p.x = q.x;
      p.y = q.y;
    }
    for (auto & p : *a.future_gt) {
      const Vec2 q = r(p.position());
      p.x = q.x;
      p.y = q.y;
    }
  }
  out.derive_headings();
  return out;
}

}  // namespace

TEST(DivideSubscenes, DistantAgentsSplit)
{
  Scene s = lanes_at({0.0, 300.0});
  s.agents = {track("a", {20, 0}, {5, 0}), track("b", {20, 300}, {5, 0})};
  const auto subs = divide(s, final_keys(s, {{35, 0}, {35, 300}}));
  ASSERT_EQ(subs.size(), 2u);
  EXPECT_EQ(subs[0].members, std::vector<std::size_t>{0});
  EXPECT_EQ(subs[1].members, std::vector<std::size_t>{1});
}

TEST(DivideSubscenes, CloseKeysJoin)
{
  Scene s = lanes_at({0.0, 5.0});
  s.agents = {track("a", {20, 0}, {5, 0}), track("b", {20, 5}, {5, 0})};
  const auto subs = divide(s, final_keys(s, {{35, 0}, {35, 5}}));
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].members.size(), 2u);
}

TEST(DivideSubscenes, ChainIsTransitive)
{
  Scene s = lanes_at({0.0, 10.0, 20.0});
  s.agents = {track("a", {20, 0}, {5, 0}), track("b", {20, 10}, {5, 0}), track("c", {20, 20}, {5, 0})};
  const auto subs = divide(s, final_keys(s, {{35, 0}, {35, 10}, {35, 20}}));
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].members, (std::vector<std::size_t>{0, 1, 2}));

  // Without the middle agent the ends are 20 m apart and stay separate.
  Scene ends = lanes_at({0.0, 20.0});
  ends.agents = {s.agents[0], track("c", {20, 20}, {5, 0})};
  EXPECT_EQ(divide(ends, final_keys(ends, {{35, 0}, {35, 20}})).size(), 2u);
}

TEST(DivideSubscenes, UnionFindMatchesFloodFill)
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(10.0, 290.0);
  std::vector<double> ys;
  for (int i = 0; i < 12; ++i) {
    ys.push_back(40.0 * i);
  }
  for (int trial = 0; trial < 20; ++trial) {
    // Agents on isolated lanes, so only the key distance links them.
    Scene s = lanes_at(ys);
    std::vector<Vec2> keys;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      s.agents.push_back(track("a" + std::to_string(i), {5, ys[i]}, {1, 0}));
      keys.push_back({ux(rng), ys[i]});
    }
    EnvConfig cfg;
    cfg.interaction_distance = 60.0;
    const auto subs = divide(s, final_keys(s, keys), cfg);
    // Oracle: breadth-first flood fill over the distance graph.
    const std::size_t n = keys.size();
    std::vector<int> label(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] >= 0) {
        continue;
      }
      std::vector<std::size_t> queue{i};
      label[i] = next;
      for (std::size_t q = 0; q < queue.size(); ++q) {
        for (std::size_t j = 0; j < n; ++j) {
          if (label[j] < 0 && distance(keys[queue[q]], keys[j]) <= cfg.interaction_distance) {
            label[j] = next;
            queue.push_back(j);
          }
        }
      }
      ++next;
    }
    ASSERT_EQ(subs.size(), static_cast<std::size_t>(next));
    for (const auto & sub : subs) {
      for (std::size_t m : sub.members) {
        EXPECT_EQ(label[m], label[sub.members.front()]);
      }
    }
  }
}

TEST(DivideSubscenes, OffMapKeyRejected)
{
  Scene s = lanes_at({0.0});
  s.agents = {track("a", {20, 0}, {5, 0})};
  EXPECT_THROW(divide(s, final_keys(s, {{35, 30}})), ValidationError);
}

TEST(DivideSubscenes, PartitionAndContextClosure)
{
  for (auto kind : {SceneKind::straight, SceneKind::curve, SceneKind::merge, SceneKind::intersection}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Scene s = generate_synthetic_scene(kind, 5, seed);
      const auto kps = calibrate_key_positions(ground_truth_key_positions(s, {1.5, 3.0}), s);
      const auto subs = divide(s, kps);
      std::vector<int> seen(s.agents.size(), 0);
      for (const auto & sub : subs) {
        for (std::size_t m : sub.members) {
          ++seen[m];
        }
        for (const auto & key : sub.key_lanelets) {
          EXPECT_TRUE(std::count(sub.context_lanelets.begin(), sub.context_lanelets.end(), key));
          for (const auto & c : s.lanelet(key).connected()) {
            EXPECT_TRUE(std::count(sub.context_lanelets.begin(), sub.context_lanelets.end(), c));
          }
        }
        for (const auto & g : sub.goals) {
          ASSERT_FALSE(g.empty());
          EXPECT_EQ(g.back().step, 30u);
        }
        EXPECT_EQ(sub.lane_tokens.cols(), kLaneTokenFeatures);
      }
      for (int c : seen) {
        EXPECT_EQ(c, 1);
      }
    }
  }
}

TEST(Observe, GoalFrame)
{
  Scene s = lanes_at({0.0});
  s.agents = {track("a", {20, 0}, {5, 0})};
  const auto subs = divide(s, final_keys(s, {{30, 0}}));
  const EnvConfig cfg;
  EpisodeState ep = reset(subs[0]);
  auto m = motion_fields(subs[0], ep, 0, cfg);
  EXPECT_NEAR(m.s_goal, 10.0, 1e-12);
  EXPECT_NEAR(m.d_goal, 0.0, 1e-12);
  EXPECT_NEAR(m.t_remain, 3.0, 1e-12);
  ep.states[0].x = 30.0;
  m = motion_fields(subs[0], ep, 0, cfg);
  EXPECT_EQ(m.s_goal, 0.0);
  EXPECT_EQ(m.d_goal, 0.0);
  const Observation o = observe(subs[0], ep, 0, cfg);
  EXPECT_EQ(o.lane_tokens, &subs[0].lane_tokens);
  EXPECT_EQ(o.motion.cols(), kMotionFeatures);
}

TEST(Observe, RotationOnlyChangesGlobalFields)
{
  const Scene s = straight_goal_task(4);
  const Scene r = rotated(s, std::numbers::pi / 2);
  const EnvConfig cfg;
  const auto a = divide(s, ground_truth_key_positions(s, {1.5, 3.0}), cfg);
  const auto b = divide(r, ground_truth_key_positions(r, {1.5, 3.0}), cfg);
  EpisodeState ea = reset(a[0]);
  EpisodeState eb = reset(b[0]);
  for (int k = 0; k < 8; ++k) {
    const std::vector<ActionVec> act{{0.01 * (k % 3), 0.3 - 0.1 * k}};
    env_step(a[0], ea, act, cfg);
    env_step(b[0], eb, act, cfg);
    const auto fa = motion_fields(a[0], ea, 0, cfg);
    const auto fb = motion_fields(b[0], eb, 0, cfg);
    EXPECT_NEAR(fa.v, fb.v, 1e-9);
    EXPECT_NEAR(fa.a_long, fb.a_long, 1e-9);
    EXPECT_NEAR(fa.delta, fb.delta, 1e-9);
    EXPECT_NEAR(fa.yaw_rate, fb.yaw_rate, 1e-9);
    EXPECT_NEAR(fa.s_goal, fb.s_goal, 1e-9);
    EXPECT_NEAR(fa.d_goal, fb.d_goal, 1e-9);
    EXPECT_NEAR(fa.t_remain, fb.t_remain, 1e-12);
    EXPECT_NEAR(wrap_angle(fb.theta - fa.theta), std::numbers::pi / 2, 1e-9);
    EXPECT_NEAR(fb.x_ego, -fa.y_ego, 1e-9);
    EXPECT_NEAR(fb.y_ego, fa.x_ego, 1e-9);
  }
}

TEST(Reward, GoalAtDeadlineWithZeroAction)
{
  Scene s = lanes_at({0.0});
  s.agents = {track("a", {20, 0}, {5, 0})};
  const auto subs = divide(s, final_keys(s, {{35, 0}}));
  const EnvConfig cfg;
  VehicleState prev = subs[0].initial_states[0];
  VehicleState next = prev;
  next.x = 35.0;
  next.a_long = 0.0;
  const auto r = reward(subs[0], 0, prev, next, {next}, 30, cfg);
  EXPECT_EQ(r.goal, cfg.reward.key_multiplier);
  EXPECT_EQ(r.smooth, 0.0);
  EXPECT_EQ(r.collision, 0.0);
  EXPECT_NEAR(r.total, 0.6 * cfg.reward.key_multiplier, 1e-15);
  // Away from the deadline the heat is not multiplied.
  EXPECT_EQ(reward(subs[0], 0, prev, next, {next}, 29, cfg).goal, 1.0);
}

TEST(Reward, CollisionBoundary)
{
  Scene s = lanes_at({0.0, 3.5});
  s.agents = {track("a", {20, 0}, {5, 0}), track("b", {20, 3.5}, {5, 0})};
  const EnvConfig cfg;
  const auto subs = divide(s, final_keys(s, {{35, 0}, {35, 3.5}}));
  ASSERT_EQ(subs.size(), 1u);
  const auto at_gap = [&](double gap) {
    std::vector<VehicleState> st = subs[0].initial_states;
    st[0].x = 50.0;
    st[0].y = 0.0;
    st[1].x = 50.0 + gap;
    st[1].y = 0.0;
    return std::pair{
      reward(subs[0], 0, st[0], st[0], st, 10, cfg).collision,
      reward(subs[0], 1, st[1], st[1], st, 10, cfg).collision};
  };
  EXPECT_EQ(at_gap(1.0), std::pair(-1.0, -1.0));
  const double d = cfg.reward.d_collision;
  EXPECT_EQ(at_gap(d - 1e-6), std::pair(-1.0, -1.0));
  EXPECT_EQ(at_gap(d + 1e-6), std::pair(0.0, 0.0));
}

TEST(Reward, OffRoadCountsAsCollision)
{
  Scene s = lanes_at({0.0});
  s.agents = {track("a", {20, 0}, {5, 0})};
  const auto subs = divide(s, final_keys(s, {{35, 0}}));
  VehicleState off = subs[0].initial_states[0];
  off.y = 5.0;
  EXPECT_EQ(reward(subs[0], 0, off, off, {off}, 1, EnvConfig{}).collision, -1.0);
}

TEST(Reward, ComponentBoundsAndMixing)
{
  const Scene s = straight_goal_task(9);
  EnvConfig cfg;
  const auto subs = divide(s, ground_truth_key_positions(s, {1.5, 3.0}), cfg);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double beta : {0.0, 0.25}) {
    cfg.reward.beta = beta;
    EpisodeState ep = reset(subs[0]);
    bool done = false;
    while (!done) {
      const auto r = env_step(subs[0], ep, {{0.05 * n(rng), n(rng)}}, cfg);
      const auto & b = r.rewards[0];
      EXPECT_GE(b.goal, 0.0);
      EXPECT_LE(b.goal, cfg.reward.key_multiplier);
      EXPECT_GE(b.smooth, -2.0);
      EXPECT_LE(b.smooth, 0.0);
      EXPECT_TRUE(b.collision == 0.0 || b.collision == -1.0);
      if (beta == 0.0) {
        EXPECT_EQ(r.training_rewards[0], b.total);
      }
      done = r.episode_done;
    }
  }
}

TEST(EnvStep, ZeroActionsRunToHorizon)
{
  Scene s = lanes_at({0.0});
  s.agents = {track("a", {20, 0}, {5, 0})};
  const EnvConfig cfg;
  const auto subs = divide(s, final_keys(s, {{35, 0}}));
  EpisodeState ep = reset(subs[0]);
  std::size_t steps = 0;
  for (bool done = false; !done; ++steps) {
    const auto r = env_step(subs[0], ep, {{0.0, 0.0}}, cfg);
    EXPECT_EQ(r.rewards[0].collision, 0.0);
    done = r.episode_done;
  }
  EXPECT_EQ(steps, 30u);
  EXPECT_NEAR(ep.states[0].x, 35.0, 1e-9);
}

TEST(EnvStep, HeadOnCollisionEndsEarly)
{
  Scene s = lanes_at({0.0});
  s.agents = {track("a", {40, 0}, {8, 0}), track("b", {60, 0}, {-8, 0})};
  const EnvConfig cfg;
  const auto subs = divide(s, final_keys(s, {{64, 0}, {36, 0}}));
  ASSERT_EQ(subs.size(), 1u);
  EpisodeState ep = reset(subs[0]);
  std::size_t steps = 0;
  StepResult last;
  for (bool done = false; !done; ++steps) {
    last = env_step(subs[0], ep, {{0.0, 0.0}, {0.0, 0.0}}, cfg);
    done = last.episode_done;
  }
  EXPECT_LT(steps, 30u);
  EXPECT_EQ(last.rewards[0].collision, -1.0);
  EXPECT_EQ(last.rewards[1].collision, -1.0);
  EXPECT_TRUE(ep.collided[0]);
  EXPECT_TRUE(ep.collided[1]);
}

TEST(EnvStep, OrderOfAgentsDoesNotMatter)
{
  Scene s = lanes_at({0.0, 3.5});
  s.agents = {track("a", {20, 0}, {6, 0}), track("b", {22, 3.5}, {5, 0})};
  const EnvConfig cfg;
  const auto subs = divide(s, final_keys(s, {{38, 0}, {37, 3.5}}));
  ASSERT_EQ(subs.size(), 1u);
  SubScene swapped = subs[0];
  std::swap(swapped.members[0], swapped.members[1]);
  std::swap(swapped.goals[0], swapped.goals[1]);
  std::swap(swapped.initial_states[0], swapped.initial_states[1]);
  EpisodeState e0 = reset(subs[0]);
  EpisodeState e1 = reset(swapped);
  for (int k = 0; k < 30 && !e0.done[0]; ++k) {
    const ActionVec u{0.01, 0.2};
    const ActionVec w{-0.02, -0.1};
    const auto r0 = env_step(subs[0], e0, {u, w}, cfg);
    const auto r1 = env_step(swapped, e1, {w, u}, cfg);
    EXPECT_EQ(e0.states[0], e1.states[1]);
    EXPECT_EQ(e0.states[1], e1.states[0]);
    EXPECT_EQ(r0.training_rewards[0], r1.training_rewards[1]);
    EXPECT_EQ(r0.training_rewards[1], r1.training_rewards[0]);
  }
}

TEST(EnvStep, ActionCountMismatch)
{
  const Scene s = straight_goal_task(1);
  const EnvConfig cfg;
  const auto subs = divide(s, ground_truth_key_positions(s, {3.0}), cfg);
  EpisodeState ep = reset(subs[0]);
  EXPECT_THROW(env_step(subs[0], ep, {}, cfg), ContractError);
}

TEST(EnvStep, TraceCsv)
{
  const Scene s = straight_goal_task(1);
  const EnvConfig cfg;
  const auto subs = divide(s, ground_truth_key_positions(s, {3.0}), cfg);
  EpisodeState ep = reset(subs[0]);
  std::ostringstream out;
  write_trace_header(out);
  write_trace_rows(out, subs[0], ep, env_step(subs[0], ep, {{0.0, 0.0}}, cfg));
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,agent_id,x,y,theta,v,delta,r_goal,r_smooth,r_collision,r_total");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(EnvConfig, JsonRoundTrip)
{
  EnvConfig cfg;
  cfg.reward.beta = 0.5;
  cfg.kinematic = false;
  const EnvConfig back = EnvConfig::from_json(cfg.to_json(), EnvConfig{});
  EXPECT_EQ(back.reward.beta, 0.5);
  EXPECT_FALSE(back.kinematic);
  EXPECT_THROW(EnvConfig::from_json({{"bogus", 1}}, cfg), ValidationError);
}

TEST(StraightGoalTask, Deterministic)
{
  EXPECT_EQ(straight_goal_task(3), straight_goal_task(3));
  EXPECT_NE(straight_goal_task(3), straight_goal_task(4));
}
