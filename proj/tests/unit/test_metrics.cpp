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
#include "hybridpred/metrics.hpp"
#include "hybridpred/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace hybridpred;  // NOLINT

namespace
{

// One straight lanelet: drivable area is the box [0, 100] x [-2, 2].
Scene box_scene()
{
  Scene s;
  s.lanelets.emplace("L0", make_lanelet("L0", {{0.0, 0.0}, {50.0, 0.0}, {100.0, 0.0}}, 4.0));
  return s;
}

bool in_box(const Vec2 & p) { return p.x >= 0.0 && p.x <= 100.0 && p.y >= -2.0 && p.y <= 2.0; }

Trajectory line(Vec2 start, Vec2 step, std::size_t n = kFutureSteps)
{
  Trajectory t;
  for (std::size_t k = 1; k <= n; ++k) {
    t.push_back(start + step * static_cast<double>(k));
  }
  return t;
}

AgentPrediction single(const Trajectory & mode, const Trajectory & gt)
{
  AgentPrediction p;
  p.agent_id = "a";
  p.modes = {mode};
  p.probabilities = {1.0};
  p.ground_truth = gt;
  return p;
}

PredictionSet random_set(std::mt19937_64 & rng, std::size_t agents, std::size_t modes, std::size_t len)
{
  std::uniform_real_distribution<double> ux(-10.0, 110.0);
  std::uniform_real_distribution<double> uy(-4.0, 4.0);
  PredictionSet set;
  for (std::size_t a = 0; a < agents; ++a) {
    AgentPrediction p;
    p.agent_id = "a" + std::to_string(a);
    Trajectory gt;
    for (std::size_t t = 0; t < len; ++t) {
      gt.push_back({ux(rng), uy(rng)});
    }
    for (std::size_t m = 0; m < modes; ++m) {
      Trajectory tr;
      for (std::size_t t = 0; t < len; ++t) {
        // Mostly inside the box so DAC is not always zero.
        tr.push_back({std::clamp(ux(rng), 1.0, 99.0), 0.45 * uy(rng)});
      }
      if (m % 2 == 1) {
        tr[m % len] = {ux(rng), uy(rng)};
      }
      p.modes.push_back(std::move(tr));
      p.probabilities.push_back(1.0 / static_cast<double>(modes));
    }
    p.ground_truth = std::move(gt);
    set.agents.push_back(std::move(p));
  }
  return set;
}

}  // namespace

TEST(Metrics, IdenticalModeIsZero)
{
  const Trajectory gt = line({0, 0}, {1, 0});
  AgentPrediction p = single(line({0, 0}, {0.5, 0}), gt);
  p.modes.push_back(gt);
  p.probabilities = {0.5, 0.5};
  EXPECT_EQ(min_ade(p), 0.0);
  EXPECT_EQ(min_fde(p), 0.0);
}

TEST(Metrics, ConstantOffsetGivesFive)
{
  const Trajectory gt = line({0, 0}, {1, 0});
  const Trajectory shifted = line({3, 4}, {1, 0});
  const AgentPrediction p = single(shifted, gt);
  EXPECT_NEAR(min_ade(p), 5.0, 1e-12);
  EXPECT_NEAR(min_fde(p), 5.0, 1e-12);
}

TEST(Metrics, MissThreshold)
{
  const Trajectory gt = line({0, 0}, {1, 0});
  Trajectory m = gt;
  m.back().y += 2.5;
  const Scene scene = box_scene();
  PredictionSet set;
  set.agents = {single(m, gt), single(gt, gt)};
  const auto per = agent_metrics_serial(set, scene);
  EXPECT_TRUE(per[0].miss);
  EXPECT_FALSE(per[1].miss);
  EXPECT_EQ(per[1].min_fde, 0.0);
  EXPECT_NEAR(summarize(per).miss_rate, 0.5, 1e-15);
}

TEST(Metrics, PointOutsideDropsTrajectoryFromDac)
{
  const Scene scene = box_scene();
  const Trajectory inside = line({1, 0}, {1, 0});
  Trajectory outside = inside;
  outside[10].y = 3.0;  // 1 m beyond the lane edge
  AgentPrediction p = single(inside, inside);
  p.modes.push_back(outside);
  p.probabilities = {0.5, 0.5};
  EXPECT_EQ(dac(p, scene), 0.5);
}

TEST(Metrics, BruteForceOracle)
{
  const Scene scene = box_scene();
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const PredictionSet set = random_set(rng, 1 + trial % 4, 1 + trial % 5, 2 + trial % 7);
    const auto serial = agent_metrics_serial(set, scene);
    const auto parallel = agent_metrics_parallel(set, scene);
    ASSERT_EQ(serial.size(), set.agents.size());
    for (std::size_t a = 0; a < set.agents.size(); ++a) {
      const auto & p = set.agents[a];
      const auto & gt = *p.ground_truth;
      double ade = std::numeric_limits<double>::infinity();
      double fde = std::numeric_limits<double>::infinity();
      double ok = 0.0;
      for (const auto & m : p.modes) {
        double sum = 0.0;
        bool inside = true;
        for (std::size_t t = 0; t < gt.size(); ++t) {
          sum += std::hypot(m[t].x - gt[t].x, m[t].y - gt[t].y);
          inside = inside && in_box(m[t]);
        }
        ade = std::min(ade, sum / static_cast<double>(gt.size()));
        fde = std::min(fde, std::hypot(m.back().x - gt.back().x, m.back().y - gt.back().y));
        ok += inside ? 1.0 : 0.0;
      }
      EXPECT_NEAR(serial[a].min_ade, ade, 1e-12);
      EXPECT_NEAR(serial[a].min_fde, fde, 1e-12);
      EXPECT_EQ(serial[a].miss, fde > kMissThreshold);
      EXPECT_NEAR(serial[a].dac, ok / static_cast<double>(p.modes.size()), 1e-12);
      EXPECT_EQ(parallel[a].min_ade, serial[a].min_ade);
      EXPECT_EQ(parallel[a].min_fde, serial[a].min_fde);
      EXPECT_EQ(parallel[a].dac, serial[a].dac);
    }
  }
}

TEST(Metrics, AddingModeNeverHurts)
{
  const Scene scene = box_scene();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    PredictionSet set = random_set(rng, 1, 3, 10);
    AgentPrediction p = set.agents[0];
    const double ade = min_ade(p);
    const double fde = min_fde(p);
    PredictionSet extra = random_set(rng, 1, 1, 10);
    p.modes.push_back(extra.agents[0].modes[0]);
    p.probabilities.push_back(0.0);
    EXPECT_LE(min_ade(p), ade);
    EXPECT_LE(min_fde(p), fde);
  }
}

TEST(Metrics, RigidTransformInvariance)
{
  std::mt19937_64 rng(4);
  const Scene scene = box_scene();
  const PredictionSet set = random_set(rng, 3, 4, 12);
  const double c = std::cos(0.8);
  const double s = std::sin(0.8);
  const auto tf = [&](const Vec2 & p) { return Vec2{c * p.x - s * p.y + 7.0, s * p.x + c * p.y - 3.0}; };
  Scene moved;
  moved.lanelets.emplace(
    "L0", make_lanelet("L0", {tf({0.0, 0.0}), tf({50.0, 0.0}), tf({100.0, 0.0})}, 4.0));
  PredictionSet mset = set;
  for (auto & a : mset.agents) {
    for (auto & m : a.modes) {
      std::transform(m.begin(), m.end(), m.begin(), tf);
    }
    std::transform(a.ground_truth->begin(), a.ground_truth->end(), a.ground_truth->begin(), tf);
  }
  const MetricsReport r0 = evaluate(set, scene);
  const MetricsReport r1 = evaluate(mset, moved);
  EXPECT_NEAR(r0.min_ade, r1.min_ade, 1e-9);
  EXPECT_NEAR(r0.min_fde, r1.min_fde, 1e-9);
  EXPECT_EQ(r0.miss_rate, r1.miss_rate);
  EXPECT_EQ(r0.dac, r1.dac);
}

TEST(Metrics, ContractErrors)
{
  const Trajectory gt = line({0, 0}, {1, 0});
  AgentPrediction p = single(line({0, 0}, {1, 0}, 10), gt);
  EXPECT_THROW(min_ade(p), ContractError);
  p.ground_truth.reset();
  EXPECT_THROW(min_fde(p), ContractError);
}

TEST(Metrics, ReportJsonKeys)
{
  const auto j = MetricsReport{}.to_json();
  for (const char * k : {"minADE", "minFDE", "MR", "DAC", "n_agents"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

TEST(Metrics, PredictionsJsonRoundTrip)
{
  std::mt19937_64 rng(12);
  const PredictionSet set = random_set(rng, 2, 3, kFutureSteps);
  EXPECT_EQ(predictions_from_json(predictions_to_json(set)), set);
  EXPECT_THROW(predictions_from_json(nlohmann::json::object()), ParseError);
}

TEST(ConstantVelocity, StationaryHistoryRepeatsLastPoint)
{
  AgentTrack t;
  t.id = "s";
  for (std::size_t k = 0; k < kHistorySteps; ++k) {
    t.history.push_back({-0.1 * static_cast<double>(kHistorySteps - 1 - k), 4.0, -2.0});
  }
  const Trajectory out = constant_velocity_baseline(t);
  ASSERT_EQ(out.size(), kFutureSteps);
  for (const auto & p : out) {
    EXPECT_EQ(p.x, 4.0);
    EXPECT_EQ(p.y, -2.0);
  }
}

TEST(ConstantVelocity, UniformMotionIsExactAndTurningIsNot)
{
  AgentTrack t;
  t.id = "u";
  for (std::size_t k = 0; k < kHistorySteps; ++k) {
    const double tk = -0.1 * static_cast<double>(kHistorySteps - 1 - k);
    t.history.push_back({tk, 10.0 * tk, 0.0});
  }
  std::vector<TimedPoint> fut;
  for (std::size_t k = 1; k <= kFutureSteps; ++k) {
    fut.push_back({0.1 * static_cast<double>(k), 1.0 * static_cast<double>(k), 0.0});
  }
  t.future_gt = fut;
  EXPECT_NEAR(min_ade(single(constant_velocity_baseline(t), ground_truth_trajectory(t))), 0.0, 1e-12);

  SyntheticOptions quiet;
  quiet.history_noise = 0.0;
  const Scene curve = generate_synthetic_scene(SceneKind::curve, 4, 21, quiet);
  double worst = 0.0;
  for (const auto & a : curve.agents) {
    worst = std::max(worst, min_fde(single(constant_velocity_baseline(a), ground_truth_trajectory(a))));
  }
  EXPECT_GT(worst, 0.0);
}
