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

#include "hybridpred/encoder.hpp"
#include "hybridpred/errors.hpp"
#include "hybridpred/grad_check.hpp"
#include "hybridpred/metrics.hpp"
#include "hybridpred/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace hybridpred;  // NOLINT

namespace
{

EncoderConfig tiny(EncoderAblation ablation = EncoderAblation::full)
{
  EncoderConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.layers_temporal = 1;
  c.layers_global = 1;
  c.n_modes = 3;
  c.radius = 30.0;
  c.ablation = ablation;
  return c;
}

// Replaces every parameter with small random values so that zero biases do
// not hide mistakes.
void randomize(HeteroEncoder & enc, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (auto & [name, v] : enc.parameters().entries()) {
    Var p = v;
    for (auto & x : p.mutable_value().storage()) {
      x = u(rng);
    }
  }
}

Tensor param(const HeteroEncoder & enc, const std::string & name)
{
  for (const auto & [n, v] : enc.parameters().entries()) {
    if (n == name) {
      return v.value();
    }
  }
  throw std::runtime_error("no parameter " + name);
}

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64 & rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t = Tensor::zeros(r, c);
  for (auto & x : t.storage()) {
    x = n(rng);
  }
  return t;
}

Tensor dense(const Tensor & x, const Tensor & w, const Tensor & b)
{
  Tensor out = Tensor::zeros(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b(0, j);
      for (std::size_t k = 0; k < x.cols(); ++k) {
        s += x(i, k) * w(k, j);
      }
      out(i, j) = s;
    }
  }
  return out;
}

Scene transformed(const Scene & s, double angle, Vec2 shift)
{
  const auto tf = [&](const Vec2 & p) { return rotate(p, angle) + shift; };
  Scene out = s;
  for (auto & [id, l] : out.lanelets) {
    for (auto * line : {&l.centerline, &l.left_boundary, &l.right_boundary}) {
      std::transform(line->begin(), line->end(), line->begin(), tf);
    }
  }
  for (auto & a : out.agents) {
    for (auto * pts : {&a.history, &*a.future_gt}) {
      for (auto & p : *pts) {
        const Vec2 q = tf(p.position());
        p.x = q.x;
        p.y = q.y;
      }
    }
  }
  out.derive_headings();
  return out;
}

void expect_close(const Tensor & a, const Tensor & b, double tol)
{
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.storage()[i], b.storage()[i], tol) << "entry " << i;
  }
}

}  // namespace

TEST(EncoderConfig, AblationShapes)
{
  const std::vector<std::tuple<EncoderAblation, std::size_t, std::size_t>> cases{
    {EncoderAblation::none, 1, 0},
    {EncoderAblation::type_attr, 1, 2},
    {EncoderAblation::dir_attr_type_stack, 2, 4},
    {EncoderAblation::full, 4, 2}};
  for (const auto & [a, groups, attr] : cases) {
    EncoderConfig c;
    c.ablation = a;
    EXPECT_EQ(c.groups(), groups) << to_string(a);
    EXPECT_EQ(c.attr_width(), attr) << to_string(a);
    EXPECT_EQ(encoder_ablation_from_string(to_string(a)), a);
  }
}

TEST(EncoderConfig, JsonRoundTripAndRejects)
{
  EncoderConfig c = tiny(EncoderAblation::type_attr);
  c.key_timestamps = {1.0, 2.0, 3.0};
  EXPECT_EQ(EncoderConfig::from_json(c.to_json()), c);
  EXPECT_THROW(EncoderConfig::from_json({{"d_modl", 8}}), ValidationError);
  EXPECT_THROW(EncoderConfig::from_json({{"d_model", 6}, {"n_heads", 4}}), ValidationError);
}

TEST(Encoder, ZeroHistoryIsFinite)
{
  Scene s;
  s.lanelets.emplace("L0", make_lanelet("L0", {{-20.0, 0.0}, {20.0, 0.0}}, 3.5));
  AgentTrack a;
  a.id = "still";
  for (std::size_t k = 0; k < kHistorySteps; ++k) {
    a.history.push_back({-0.1 * static_cast<double>(kHistorySteps - 1 - k), 0.0, 0.0});
  }
  s.agents.push_back(a);
  s.derive_headings();
  HeteroEncoder enc(tiny(), 1);
  randomize(enc, 2);
  const EncoderInputs in = prepare_encoder_inputs(s, enc.config());
  const Tensor e = enc.embed_agents(in).value();
  EXPECT_EQ(e.rows(), 1u);
  EXPECT_EQ(e.cols(), 8u);
  for (double x : e.storage()) {
    EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Encoder, AgentEmbeddingIgnoresOtherAgents)
{
  const Scene s = generate_synthetic_scene(SceneKind::straight, 4, 3);
  Scene first = s;
  first.agents.resize(1);
  HeteroEncoder enc(tiny(), 1);
  randomize(enc, 3);
  const Tensor all = enc.embed_agents(prepare_encoder_inputs(s, enc.config())).value();
  const Tensor one = enc.embed_agents(prepare_encoder_inputs(first, enc.config())).value();
  for (std::size_t j = 0; j < all.cols(); ++j) {
    EXPECT_NEAR(all(0, j), one(0, j), 1e-12);
  }
}

TEST(Encoder, EdgeFeaturesInvariantUnderRigidMotion)
{
  const Scene s = generate_synthetic_scene(SceneKind::intersection, 5, 2);
  HeteroEncoder enc(tiny(), 4);
  randomize(enc, 4);
  const EncoderInputs a = prepare_encoder_inputs(s, enc.config());
  for (const auto & [angle, shift] : std::vector<std::pair<double, Vec2>>{
         {0.0, {130.0, -70.0}}, {std::numbers::pi / 2, {0.0, 0.0}}, {std::numbers::pi / 2, {5.0, 9.0}}}) {
    const EncoderInputs b = prepare_encoder_inputs(transformed(s, angle, shift), enc.config());
    ASSERT_EQ(a.edge_source, b.edge_source);
    expect_close(a.edge_geometry, b.edge_geometry, 1e-9);
    expect_close(enc.embed_edges(a).value(), enc.embed_edges(b).value(), 1e-9);
    expect_close(a.lane_features, b.lane_features, 1e-9);
    // End to end: offsets live in each agent's frame.
    expect_close(enc.forward(a).offsets.value(), enc.forward(b).offsets.value(), 1e-8);
    // Decoded world positions move with the scene.
    const auto ka = enc.to_key_positions(a, enc.forward(a));
    const auto kb = enc.to_key_positions(b, enc.forward(b));
    for (std::size_t i = 0; i < ka.agents.size(); ++i) {
      for (std::size_t f = 0; f < ka.n_modes(); ++f) {
        const Vec2 pa = rotate(ka.agents[i].modes[f][1].position(), angle) + shift;
        EXPECT_NEAR(pa.x, kb.agents[i].modes[f][1].x, 1e-7);
        EXPECT_NEAR(pa.y, kb.agents[i].modes[f][1].y, 1e-7);
      }
    }
  }
}

TEST(Encoder, CoincidentSourcesShareEdgeFeature)
{
  // Two pairs of coincident agents with identical headings.
  Scene s;
  s.lanelets.emplace("L0", make_lanelet("L0", {{-100.0, 0.0}, {100.0, 0.0}}, 200.0));
  const auto track = [](const std::string & id, Vec2 last, Vec2 vel) {
    AgentTrack t;
    t.id = id;
    for (std::size_t k = 0; k < kHistorySteps; ++k) {
      const double back = 0.1 * static_cast<double>(kHistorySteps - 1 - k);
      t.history.push_back({-back, last.x - vel.x * back, last.y - vel.y * back});
    }
    return t;
  };
  s.agents = {
    track("a", {0, 0}, {5, 0}), track("b", {0, 0}, {5, 0}), track("c", {0, 60}, {0, 3}),
    track("d", {0, 60}, {0, 3})};
  s.derive_headings();
  EncoderConfig cfg = tiny();
  HeteroEncoder enc(cfg, 5);
  randomize(enc, 5);
  const EncoderInputs in = prepare_encoder_inputs(s, cfg);
  const Tensor e = enc.embed_edges(in).value();
  std::vector<std::size_t> agent_edges;
  for (std::size_t r = 0; r < in.edge_source.size(); ++r) {
    if (in.edge_source[r] < in.n_agents()) {
      agent_edges.push_back(r);
    }
  }
  ASSERT_GE(agent_edges.size(), 4u);
  for (std::size_t r : agent_edges) {
    for (std::size_t j = 0; j < e.cols(); ++j) {
      EXPECT_NEAR(e(r, j), e(agent_edges[0], j), 1e-12);
    }
  }
}

TEST(Aggregate, SingleSourceReturnsValueProjection)
{
  HeteroEncoder enc(tiny(), 6);
  randomize(enc, 6);
  std::mt19937_64 rng(1);
  const std::size_t kv = 8 + enc.config().attr_width() + 8;
  const Tensor centre = random_tensor(1, 8, rng);
  const Tensor src = random_tensor(1, kv, rng);
  const Tensor out =
    enc.aggregate(0, 2, constant(centre), constant(src), {{0, 1, 0, 1}}).value();
  const Tensor expected = dense(src, param(enc, "local0.group2.v.w"), param(enc, "local0.group2.v.b"));
  expect_close(out, expected, 1e-12);
}

TEST(Aggregate, DuplicatedSourceChangesNothing)
{
  HeteroEncoder enc(tiny(), 7);
  randomize(enc, 7);
  std::mt19937_64 rng(2);
  const std::size_t kv = 8 + enc.config().attr_width() + 8;
  const Tensor centre = random_tensor(1, 8, rng);
  const Tensor src = random_tensor(1, kv, rng);
  Tensor twice = Tensor::zeros(2, kv);
  for (std::size_t j = 0; j < kv; ++j) {
    twice(0, j) = twice(1, j) = src(0, j);
  }
  const Tensor one = enc.aggregate(0, 0, constant(centre), constant(src), {{0, 1, 0, 1}}).value();
  const Tensor two = enc.aggregate(0, 0, constant(centre), constant(twice), {{0, 1, 0, 2}}).value();
  expect_close(one, two, 1e-12);
}

TEST(Aggregate, ThreeSourcesMatchHandAttention)
{
  HeteroEncoder enc(tiny(), 8);
  randomize(enc, 8);
  std::mt19937_64 rng(3);
  const std::size_t d = 8, heads = 2, dk = d / heads;
  const std::size_t kv = d + enc.config().attr_width() + d;
  const Tensor centre = random_tensor(1, d, rng);
  const Tensor src = random_tensor(3, kv, rng);
  const Tensor out = enc.aggregate(0, 1, constant(centre), constant(src), {{0, 1, 0, 3}}).value();
  const Tensor q = dense(centre, param(enc, "local0.group1.q.w"), param(enc, "local0.group1.q.b"));
  const Tensor k = dense(src, param(enc, "local0.group1.k.w"), param(enc, "local0.group1.k.b"));
  const Tensor v = dense(src, param(enc, "local0.group1.v.w"), param(enc, "local0.group1.v.b"));
  for (std::size_t h = 0; h < heads; ++h) {
    double logits[3];
    double mx = -1e300;
    for (std::size_t s = 0; s < 3; ++s) {
      double dot = 0.0;
      for (std::size_t c = h * dk; c < (h + 1) * dk; ++c) {
        dot += q(0, c) * k(s, c);
      }
      logits[s] = dot / std::sqrt(static_cast<double>(dk));
      mx = std::max(mx, logits[s]);
    }
    double z = 0.0;
    for (double & l : logits) {
      l = std::exp(l - mx);
      z += l;
    }
    for (std::size_t c = h * dk; c < (h + 1) * dk; ++c) {
      double expected = 0.0;
      for (std::size_t s = 0; s < 3; ++s) {
        expected += logits[s] / z * v(s, c);
      }
      EXPECT_NEAR(out(0, c), expected, 1e-9);
    }
  }
}

TEST(Aggregate, NoSourcesGiveZeroRows)
{
  HeteroEncoder enc(tiny(), 9);
  std::mt19937_64 rng(4);
  const Tensor centre = random_tensor(3, 8, rng);
  const Tensor out = enc.aggregate(0, 0, constant(centre), Var(), {}).value();
  EXPECT_EQ(out.rows(), 3u);
  for (double x : out.storage()) {
    EXPECT_EQ(x, 0.0);
  }
}

TEST(Combine, ResidualAndWeights)
{
  HeteroEncoder enc(tiny(), 10);
  randomize(enc, 10);
  std::mt19937_64 rng(5);
  const Tensor centre = random_tensor(2, 8, rng);
  const std::vector<Var> zeros(4, constant(Tensor::zeros(2, 8)));
  const Tensor same = enc.combine(0, constant(centre), zeros).value();
  for (std::size_t i = 0; i < centre.size(); ++i) {
    EXPECT_EQ(same.storage()[i], centre.storage()[i]);
  }

  std::vector<Var> aggs;
  for (int g = 0; g < 4; ++g) {
    aggs.push_back(constant(random_tensor(2, 8, rng)));
  }
  const Tensor w = enc.combine_weights(0, aggs).value();
  for (std::size_t r = 0; r < 2; ++r) {
    double sum = 0.0;
    for (std::size_t g = 0; g < 4; ++g) {
      sum += w(r, g);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }

  // Identical aggregates score equally, so the weights are uniform.
  const std::vector<Var> equal(4, aggs[0]);
  const Tensor out = enc.combine(0, constant(centre), equal).value();
  for (std::size_t i = 0; i < centre.size(); ++i) {
    EXPECT_NEAR(out.storage()[i], centre.storage()[i] + aggs[0].value().storage()[i], 1e-12);
  }
}

TEST(GlobalInteraction, PermutationEquivariant)
{
  const Scene s = generate_synthetic_scene(SceneKind::merge, 4, 6);
  Scene p = s;
  std::reverse(p.agents.begin(), p.agents.end());
  HeteroEncoder enc(tiny(), 11);
  randomize(enc, 11);
  const EncoderInputs a = prepare_encoder_inputs(s, enc.config());
  const EncoderInputs b = prepare_encoder_inputs(p, enc.config());
  const Tensor oa = enc.forward(a).offsets.value();
  const Tensor ob = enc.forward(b).offsets.value();
  const std::size_t A = s.agents.size();
  for (std::size_t i = 0; i < A; ++i) {
    for (std::size_t j = 0; j < oa.cols(); ++j) {
      EXPECT_NEAR(oa(i, j), ob(A - 1 - i, j), 1e-9);
    }
  }
}

TEST(Decode, ShapesProbabilitiesAndZeroWeights)
{
  const Scene s = generate_synthetic_scene(SceneKind::curve, 3, 1);
  HeteroEncoder enc(tiny(), 12);
  randomize(enc, 12);
  KeyPositionSet kps = enc.predict(s);
  ASSERT_EQ(kps.agents.size(), 3u);
  for (const auto & a : kps.agents) {
    ASSERT_EQ(a.modes.size(), 3u);
    for (const auto & m : a.modes) {
      EXPECT_EQ(m.size(), 2u);
    }
    double sum = 0.0;
    for (double p : a.probabilities) {
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  for (auto & [name, v] : enc.parameters().entries()) {
    Var w = v;
    std::fill(w.mutable_value().storage().begin(), w.mutable_value().storage().end(), 0.0);
  }
  kps = enc.predict(s);
  for (std::size_t i = 0; i < 3; ++i) {
    const Vec2 here = s.agents[i].last_position();
    for (const auto & m : kps.agents[i].modes) {
      for (const auto & p : m) {
        EXPECT_NEAR(p.x, here.x, 1e-12);
        EXPECT_NEAR(p.y, here.y, 1e-12);
      }
    }
  }
}

TEST(Encoder, GradientCheckAllAblations)
{
  const Scene s = generate_synthetic_scene(SceneKind::intersection, 3, 5);
  for (auto a : {EncoderAblation::none, EncoderAblation::type_attr, EncoderAblation::dir_attr_type_stack,
                 EncoderAblation::full}) {
    HeteroEncoder enc(tiny(a), 13);
    randomize(enc, 13);
    const EncoderInputs in = prepare_encoder_inputs(s, enc.config());
    const auto report = grad_check_parameters(
      [&] { return wta_loss(in, enc.forward(in), enc.config()).total; }, enc.parameters().vars(), 1e-6, 1e-4, 6);
    EXPECT_TRUE(report.passed) << to_string(a) << " max rel error " << report.max_rel_error;
  }
}

TEST(TrainEncoder, LossDecreasesAndIsDeterministic)
{
  std::vector<EncoderInputs> data;
  const EncoderConfig cfg = tiny();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    data.push_back(prepare_encoder_inputs(generate_synthetic_scene(SceneKind::straight, 3, seed), cfg));
  }
  EncoderTrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 10;
  tc.lr = 2e-4;
  const auto run = [&] {
    HeteroEncoder enc(cfg, 21);
    const auto log = train_encoder(enc, data, tc);
    return std::pair{log, enc.parameters().to_json()};
  };
  const auto [log, params] = run();
  ASSERT_EQ(log.size(), 10u);
  for (std::size_t e = 1; e < log.size(); ++e) {
    EXPECT_LT(log[e].loss, log[e - 1].loss) << "epoch " << e + 1;
  }
  EXPECT_EQ(run().second, params);
}

TEST(TrainEncoder, BeatsConstantVelocityOnStraightLanes)
{
  EncoderConfig cfg = tiny();
  cfg.d_model = 16;
  cfg.n_modes = 3;
  std::vector<Scene> scenes;
  std::vector<EncoderInputs> data;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    scenes.push_back(generate_synthetic_scene(SceneKind::straight, 3, 1000 + seed));
    data.push_back(prepare_encoder_inputs(scenes.back(), cfg));
  }
  EncoderTrainConfig tc;
  tc.epochs = 60;
  tc.lr = 1e-3;
  HeteroEncoder enc(cfg, 1);
  train_encoder(enc, data, tc);
  double enc_fde = 0.0;
  double cv_fde = 0.0;
  std::size_t n = 0;
  for (const auto & s : scenes) {
    const KeyPositionSet kps = enc.predict(s);
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      const Vec2 truth = future_position(s.agents[i], 3.0);
      double best = 1e300;
      for (const auto & m : kps.agents[i].modes) {
        best = std::min(best, distance(m.back().position(), truth));
      }
      enc_fde += best;
      cv_fde += distance(constant_velocity_baseline(s.agents[i]).back(), truth);
      ++n;
    }
  }
  EXPECT_LT(enc_fde / n, cv_fde / n);
}

TEST(EncoderCheckpoint, RoundTripAndMismatch)
{
  const Scene s = generate_synthetic_scene(SceneKind::merge, 2, 0);
  HeteroEncoder enc(tiny(), 30);
  randomize(enc, 30);
  const auto j = enc.checkpoint({{"seed", 30}});
  const HeteroEncoder back = HeteroEncoder::from_checkpoint(j, tiny());
  EXPECT_EQ(back.predict(s), enc.predict(s));
  EXPECT_THROW(HeteroEncoder::from_checkpoint(j, tiny(EncoderAblation::none)), ValidationError);
  auto bad = j;
  bad["format"] = "something.else";
  EXPECT_THROW(HeteroEncoder::from_checkpoint(bad), ValidationError);
}

TEST(Calibrate, ProjectsOnlyOffRoadPoints)
{
  Scene s;
  s.lanelets.emplace("L0", make_lanelet("L0", {{0.0, 0.0}, {50.0, 0.0}, {100.0, 0.0}}, 3.5));
  KeyPositionSet kps;
  kps.timestamps = {1.5, 3.0};
  kps.agents.push_back({"a", {{{1.5, 30.0, 0.0}, {3.0, 42.0, 5.0}}}, {1.0}});
  const KeyPositionSet out = calibrate_key_positions(kps, s);
  EXPECT_EQ(out.agents[0].modes[0][0], kps.agents[0].modes[0][0]);
  EXPECT_NEAR(out.agents[0].modes[0][1].x, 42.0, 1e-12);
  EXPECT_NEAR(out.agents[0].modes[0][1].y, 0.0, 1e-12);
  EXPECT_EQ(count_calibrated(kps, out), 1u);
}

TEST(Calibrate, CalibratedPointsAreAlwaysDrivable)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 6.0);
  for (auto kind : {SceneKind::straight, SceneKind::curve, SceneKind::merge, SceneKind::intersection}) {
    const Scene s = generate_synthetic_scene(kind, 4, 8);
    KeyPositionSet kps = ground_truth_key_positions(s, {1.5, 3.0});
    for (auto & a : kps.agents) {
      for (auto & p : a.modes[0]) {
        p.x += n(rng);
        p.y += n(rng);
      }
    }
    for (const auto & a : calibrate_key_positions(kps, s).agents) {
      for (const auto & p : a.modes[0]) {
        EXPECT_TRUE(s.in_drivable_area(p.position()));
      }
    }
  }
}
