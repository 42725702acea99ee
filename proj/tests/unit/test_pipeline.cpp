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
#include "hybridpred/pipeline.hpp"
#include "hybridpred/plot.hpp"
#include "hybridpred/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace hybridpred;  // NOLINT

namespace
{

AgentTrack still_at(Vec2 p)
{
  AgentTrack t;
  t.id = "a";
  for (std::size_t k = 0; k < kHistorySteps; ++k) {
    t.history.push_back({-0.1 * static_cast<double>(kHistorySteps - 1 - k), p.x, p.y});
  }
  return t;
}

PolicyConfig small_policy()
{
  PolicyConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  return c;
}

std::size_t count(const std::string & text, const std::string & what)
{
  std::size_t n = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) {
    ++n;
  }
  return n;
}

}  // namespace

TEST(Interpolate, PassesThroughKeysAndHoldsVelocity)
{
  const AgentTrack t = still_at({1.0, 2.0});
  const Trajectory tr = interpolate_key_positions(t, {{1.5, 16.0, 2.0}, {3.0, 16.0, 17.0}}, 40);
  ASSERT_EQ(tr.size(), 40u);
  EXPECT_NEAR(tr[0].x, 2.0, 1e-12);
  EXPECT_NEAR(tr[14].x, 16.0, 1e-12);
  EXPECT_NEAR(tr[14].y, 2.0, 1e-12);
  EXPECT_NEAR(tr[29].x, 16.0, 1e-12);
  EXPECT_NEAR(tr[29].y, 17.0, 1e-12);
  // Beyond the last key the final segment continues at 10 m/s.
  EXPECT_NEAR(tr[39].y, 27.0, 1e-9);
  EXPECT_THROW(interpolate_key_positions(t, {}), ContractError);
}

TEST(Interpolate, GroundTruthKeysRecoverStraightMotion)
{
  SyntheticOptions quiet;
  quiet.history_noise = 0.0;
  const Scene s = generate_synthetic_scene(SceneKind::straight, 3, 2, quiet);
  const KeyPositionSet kps = ground_truth_key_positions(s, {1.5, 3.0});
  const PredictionSet set = key_position_trajectories(s, kps);
  ASSERT_EQ(set.agents.size(), 3u);
  for (const auto & a : set.agents) {
    EXPECT_EQ(a.modes.size(), 1u);
    EXPECT_NEAR(min_fde(a), 0.0, 1e-9);
  }
}

TEST(Pipeline, PlansEveryModeOfEveryAgent)
{
  const auto scene = std::make_shared<const Scene>(generate_synthetic_scene(SceneKind::merge, 4, 3));
  KeyPositionSet kps = ground_truth_key_positions(*scene, {1.5, 3.0});
  // Add a second mode pushed off the road to exercise calibration.
  for (auto & a : kps.agents) {
    auto off = a.modes[0];
    for (auto & p : off) {
      p.y += 30.0;
    }
    a.modes.push_back(off);
    a.probabilities = {0.7, 0.3};
  }
  const PolicyNet policy(small_policy(), 1);
  const EnvConfig env;
  const PipelineResult r = plan_from_key_positions(scene, kps, policy, env);
  EXPECT_EQ(r.raw_key_positions, kps);
  EXPECT_GT(count_calibrated(kps, r.calibrated_key_positions), 0u);
  for (const auto & a : r.calibrated_key_positions.agents) {
    for (const auto & m : a.modes) {
      for (const auto & p : m) {
        EXPECT_TRUE(scene->in_drivable_area(p.position()));
      }
    }
  }
  ASSERT_EQ(r.subscenes.size(), 2u);
  ASSERT_EQ(r.predictions.agents.size(), scene->agents.size());
  r.predictions.validate();
  for (const auto & a : r.predictions.agents) {
    ASSERT_EQ(a.modes.size(), 2u);
    for (const auto & m : a.modes) {
      EXPECT_EQ(m.size(), kFutureSteps);
    }
    EXPECT_TRUE(a.ground_truth.has_value());
  }
  const auto membership = subscene_membership_json(r);
  ASSERT_EQ(membership.size(), 2u);
  std::size_t members = 0;
  for (const auto & sub : membership[0]) {
    members += sub.at("members").size();
  }
  EXPECT_EQ(members, scene->agents.size());
  // Same inputs, same outputs.
  EXPECT_EQ(plan_from_key_positions(scene, kps, policy, env).predictions, r.predictions);
}

TEST(Plot, RendersEveryLayerDeterministically)
{
  const Scene s = generate_synthetic_scene(SceneKind::intersection, 3, 4);
  const KeyPositionSet kps = ground_truth_key_positions(s, {1.5, 3.0});
  const PredictionSet preds = key_position_trajectories(s, kps);
  const std::map<std::string, Trajectory> traces{{"a0", {{0, 0}, {1, 1}}}};
  PlotLayers layers{&preds, &kps, &traces};
  const std::string svg = render_svg(s, layers);
  EXPECT_EQ(svg, render_svg(s, layers));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polygon"), s.lanelets.size());
  EXPECT_EQ(count(svg, "data-mode="), preds.agents.size());
  EXPECT_NE(svg.find("id=\"traces\""), std::string::npos);
  EXPECT_NE(svg.find("id=\"key_positions\""), std::string::npos);
  EXPECT_EQ(count(svg, "<g"), count(svg, "</g>"));
  const std::string bare = render_svg(s, {});
  EXPECT_EQ(bare.find("id=\"predictions\""), std::string::npos);
}

TEST(Plot, ReadsEpisodeTrace)
{
  const Scene scene = straight_goal_task(2);
  const EnvConfig env;
  const auto subs = divide_subscenes(
    std::make_shared<const Scene>(scene), ground_truth_key_positions(scene, {3.0}), 0, env);
  EpisodeState ep = reset(subs[0]);
  std::stringstream csv;
  write_trace_header(csv);
  for (int k = 0; k < 5; ++k) {
    write_trace_rows(csv, subs[0], ep, env_step(subs[0], ep, {{0.0, 0.1}}, env));
  }
  const auto traces = read_trace_csv(csv);
  ASSERT_EQ(traces.count("ego"), 1u);
  ASSERT_EQ(traces.at("ego").size(), 5u);
  EXPECT_NEAR(traces.at("ego").back().x, ep.states[0].x, 1e-6);

  std::stringstream commented("# run_config: {}\nstep,agent_id,x,y\n3,b,1.5,2.5\n");
  EXPECT_EQ(read_trace_csv(commented).at("b").front().y, 2.5);
  std::stringstream bad("x,y\n");
  EXPECT_THROW(read_trace_csv(bad), ParseError);
  std::stringstream short_row("step,agent_id,x,y\n1,a\n");
  EXPECT_THROW(read_trace_csv(short_row), ParseError);
}
