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
#include "hybridpred/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hybridpred
{

namespace
{

constexpr std::size_t kHistoryFeatures = 4;
constexpr std::size_t kLaneFeatures = 6;
constexpr std::size_t kGeometryFeatures = 4;
constexpr const char * kCheckpointFormat = "hybridpred.encoder";
constexpr int kCheckpointVersion = 1;

template <typename T>
T get_as(const nlohmann::json & j, const std::string & key)
{
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ValidationError("config field '" + key + "' has the wrong type");
  }
}

std::size_t positive_size(const nlohmann::json & j, const std::string & key)
{
  const auto v = get_as<long long>(j, key);
  if (v < 0) {
    throw ValidationError("config field '" + key + "' must be non-negative");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

const char * to_string(EncoderAblation a)
{
  switch (a) {
    case EncoderAblation::none:
      return "none";
    case EncoderAblation::type_attr:
      return "type_attr";
    case EncoderAblation::dir_attr_type_stack:
      return "dir_attr_type_stack";
    case EncoderAblation::full:
      return "full";
  }
  return "full";
}

EncoderAblation encoder_ablation_from_string(const std::string & s)
{
  for (auto a : {EncoderAblation::none, EncoderAblation::type_attr, EncoderAblation::dir_attr_type_stack,
                 EncoderAblation::full}) {
    if (s == to_string(a)) {
      return a;
    }
  }
  throw ValidationError("unknown encoder ablation '" + s + "'");
}

void EncoderConfig::validate() const
{
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ValidationError("d_model must be a positive multiple of n_heads");
  }
  if (layers_local < 1 || layers_temporal < 1 || layers_global < 1 || decoder_mlp_layers < 1) {
    throw ValidationError("encoder layer counts must be at least 1");
  }
  if (!(radius > 0.0)) {
    throw ValidationError("radius must be positive");
  }
  if (n_modes < 1) {
    throw ValidationError("n_modes must be at least 1");
  }
  if (key_timestamps.empty()) {
    throw ValidationError("key_timestamps must not be empty");
  }
  const double horizon = static_cast<double>(kFutureSteps) * kStepDt;
  for (std::size_t k = 0; k < key_timestamps.size(); ++k) {
    const double t = key_timestamps[k];
    if (!(t > 0.0) || t > horizon + 1e-9) {
      throw ValidationError("key_timestamps must lie in (0, 3.0]");
    }
    if (k > 0 && !(t > key_timestamps[k - 1])) {
      throw ValidationError("key_timestamps must be strictly increasing");
    }
    const double steps = t / kStepDt;
    if (std::abs(steps - std::round(steps)) > 1e-6) {
      throw ValidationError("key_timestamps must be multiples of the 0.1 s step");
    }
  }
}

std::size_t EncoderConfig::groups() const
{
  switch (ablation) {
    case EncoderAblation::none:
    case EncoderAblation::type_attr:
      return 1;
    case EncoderAblation::dir_attr_type_stack:
      return kNumNodeTypes;
    case EncoderAblation::full:
      return kNumDirections;
  }
  return 1;
}

std::size_t EncoderConfig::attr_width() const
{
  switch (ablation) {
    case EncoderAblation::none:
      return 0;
    case EncoderAblation::type_attr:
    case EncoderAblation::full:
      return kNumNodeTypes;
    case EncoderAblation::dir_attr_type_stack:
      return kNumDirections;
  }
  return 0;
}

nlohmann::json EncoderConfig::to_json() const
{
  return {
    {"d_model", d_model},
    {"n_heads", n_heads},
    {"layers_local", layers_local},
    {"layers_temporal", layers_temporal},
    {"layers_global", layers_global},
    {"decoder_mlp_layers", decoder_mlp_layers},
    {"radius", radius},
    {"n_modes", n_modes},
    {"key_timestamps", key_timestamps},
    {"ablation", to_string(ablation)},
  };
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json & j, EncoderConfig base)
{
  if (!j.is_object()) {
    throw ValidationError("encoder config must be an object");
  }
  for (const auto & [key, v] : j.items()) {
    if (key == "d_model") {
      base.d_model = positive_size(v, key);
    } else if (key == "n_heads") {
      base.n_heads = positive_size(v, key);
    } else if (key == "layers_local") {
      base.layers_local = positive_size(v, key);
    } else if (key == "layers_temporal") {
      base.layers_temporal = positive_size(v, key);
    } else if (key == "layers_global") {
      base.layers_global = positive_size(v, key);
    } else if (key == "decoder_mlp_layers") {
      base.decoder_mlp_layers = positive_size(v, key);
    } else if (key == "radius") {
      base.radius = get_as<double>(v, key);
    } else if (key == "n_modes") {
      base.n_modes = positive_size(v, key);
    } else if (key == "key_timestamps") {
      base.key_timestamps = get_as<std::vector<double>>(v, key);
    } else if (key == "ablation") {
      base.ablation = encoder_ablation_from_string(get_as<std::string>(v, key));
    } else {
      throw ValidationError("unknown encoder config field '" + key + "'");
    }
  }
  base.validate();
  return base;
}

nlohmann::json EncoderTrainConfig::to_json() const
{
  return {
    {"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"max_grad_norm", max_grad_norm},
    {"seed", seed}};
}

EncoderTrainConfig EncoderTrainConfig::from_json(const nlohmann::json & j, EncoderTrainConfig base)
{
  if (!j.is_object()) {
    throw ValidationError("encoder training config must be an object");
  }
  for (const auto & [key, v] : j.items()) {
    if (key == "epochs") {
      base.epochs = positive_size(v, key);
    } else if (key == "batch_size") {
      base.batch_size = positive_size(v, key);
    } else if (key == "lr") {
      base.lr = get_as<double>(v, key);
    } else if (key == "max_grad_norm") {
      base.max_grad_norm = get_as<double>(v, key);
    } else if (key == "seed") {
      base.seed = get_as<std::uint64_t>(v, key);
    } else {
      throw ValidationError("unknown encoder training field '" + key + "'");
    }
  }
  if (base.batch_size < 1 || !(base.lr > 0.0)) {
    throw ValidationError("batch_size must be >= 1 and lr positive");
  }
  return base;
}

EncoderInputs prepare_encoder_inputs(const Scene & scene, const EncoderConfig & config)
{
  config.validate();
  const std::size_t A = scene.agents.size();
  if (A == 0) {
    throw ValidationError("scene has no agents");
  }
  EncoderInputs in;
  in.history = Tensor::zeros(A * kHistorySteps, kHistoryFeatures);
  for (std::size_t i = 0; i < A; ++i) {
    const auto & track = scene.agents[i];
    if (track.history.size() != kHistorySteps) {
      throw ValidationError("agent " + track.id + ": history must have 20 states");
    }
    in.agent_ids.push_back(track.id);
    in.origins.push_back(track.last_position());
    in.headings.push_back(track.heading);
    for (std::size_t k = 0; k < kHistorySteps; ++k) {
      const Vec2 p = to_local(track.history[k].position(), in.origins[i], in.headings[i]);
      const Vec2 d =
        k == 0 ? Vec2{} : rotate(track.history[k].position() - track.history[k - 1].position(), -in.headings[i]);
      double * row = in.history.ptr(i * kHistorySteps + k, 0);
      row[0] = d.x;
      row[1] = d.y;
      row[2] = p.x / kEncoderPositionScale;
      row[3] = p.y / kEncoderPositionScale;
    }
  }

  struct EdgeRow
  {
    std::size_t center, source;
    std::size_t attr;
    double geometry[kGeometryFeatures];
  };
  const std::size_t G = config.groups();
  std::vector<std::vector<EdgeRow>> groups(G);
  std::vector<double> lane_rows;
  std::size_t n_lane = 0;

  for (std::size_t i = 0; i < A; ++i) {
    const HeteroGraph g = build_hetero_graph(scene, in.agent_ids[i], config.radius);
    for (const auto & e : g.edges) {
      const GraphNode & node = g.nodes[e.source];
      EdgeRow row{};
      row.center = i;
      double rel_heading = 0.0;
      if (node.type == NodeType::agent) {
        row.source = node.agent_index;
        rel_heading = scene.agents[node.agent_index].heading - g.heading;
      } else {
        const Lanelet & l = scene.lanelet(node.lanelet_id);
        const Vec2 seg = rotate(node.segment, -g.heading);
        lane_rows.insert(
          lane_rows.end(),
          {seg.x / kLaneNodeSpacing, seg.y / kLaneNodeSpacing,
           l.direction_attr == TrafficDirection::same ? 1.0 : -1.0,
           l.passable == Passable::green ? 1.0 : 0.0, l.passable == Passable::red ? 1.0 : 0.0,
           l.passable == Passable::uncontrolled ? 1.0 : 0.0});
        row.source = A + n_lane++;
        rel_heading = std::atan2(seg.y, seg.x);
      }
      row.geometry[0] = e.relative.x / kEncoderPositionScale;
      row.geometry[1] = e.relative.y / kEncoderPositionScale;
      row.geometry[2] = std::cos(rel_heading);
      row.geometry[3] = std::sin(rel_heading);

      std::size_t group = 0;
      switch (config.ablation) {
        case EncoderAblation::none:
          break;
        case EncoderAblation::type_attr:
          row.attr = static_cast<std::size_t>(node.type);
          break;
        case EncoderAblation::dir_attr_type_stack:
          row.attr = static_cast<std::size_t>(e.label);
          group = static_cast<std::size_t>(node.type);
          break;
        case EncoderAblation::full:
          row.attr = static_cast<std::size_t>(node.type);
          group = static_cast<std::size_t>(e.label);
          break;
      }
      groups[group].push_back(row);
    }
  }
  in.lane_features = n_lane == 0 ? Tensor() : Tensor({n_lane, kLaneFeatures}, std::move(lane_rows));

  std::size_t E = 0;
  for (const auto & g : groups) {
    E += g.size();
  }
  const std::size_t attr_w = config.attr_width();
  in.edge_attr = E > 0 && attr_w > 0 ? Tensor::zeros(E, attr_w) : Tensor();
  in.edge_geometry = E > 0 ? Tensor::zeros(E, kGeometryFeatures) : Tensor();
  std::size_t r = 0;
  for (std::size_t gi = 0; gi < G; ++gi) {
    in.group_begin.push_back(r);
    std::vector<AttentionSegment> segs;
    std::size_t local = 0;
    for (std::size_t i = 0; i < A; ++i) {
      AttentionSegment s{i, i + 1, local, local};
      while (local < groups[gi].size() && groups[gi][local].center == i) {
        const EdgeRow & e = groups[gi][local];
        in.edge_source.push_back(e.source);
        if (attr_w > 0) {
          in.edge_attr(r, e.attr) = 1.0;
        }
        std::copy(e.geometry, e.geometry + kGeometryFeatures, in.edge_geometry.ptr(r, 0));
        ++local;
        ++r;
      }
      s.k_end = local;
      segs.push_back(s);
    }
    in.group_segments.push_back(std::move(segs));
  }
  in.group_begin.push_back(r);

  in.pair_geometry = Tensor::zeros(A * A, kGeometryFeatures);
  for (std::size_t i = 0; i < A; ++i) {
    for (std::size_t j = 0; j < A; ++j) {
      const Vec2 rel = to_local(in.origins[j], in.origins[i], in.headings[i]);
      const double dh = in.headings[j] - in.headings[i];
      double * row = in.pair_geometry.ptr(i * A + j, 0);
      row[0] = rel.x / kEncoderPositionScale;
      row[1] = rel.y / kEncoderPositionScale;
      row[2] = std::cos(dh);
      row[3] = std::sin(dh);
      in.pair_source.push_back(j);
    }
  }

  bool has_future = true;
  for (const auto & a : scene.agents) {
    has_future = has_future && a.future_gt.has_value();
  }
  if (has_future) {
    const std::size_t K = config.key_timestamps.size();
    Tensor t = Tensor::zeros(A, 2 * K);
    for (std::size_t i = 0; i < A; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        const Vec2 p = to_local(
          future_position(scene.agents[i], config.key_timestamps[k]), in.origins[i], in.headings[i]);
        t(i, 2 * k) = p.x / kEncoderPositionScale;
        t(i, 2 * k + 1) = p.y / kEncoderPositionScale;
      }
    }
    in.targets = std::move(t);
  }
  return in;
}

HeteroEncoder::HeteroEncoder(EncoderConfig config, std::uint64_t seed) : config_(std::move(config))
{
  config_.validate();
  nn::Rng rng(seed);
  const std::size_t d = config_.d_model;
  const std::size_t h = config_.n_heads;

  history_in_ = nn::Linear(params_, "temporal.in", kHistoryFeatures, d, rng);
  {
    Tensor pos = nn::xavier_uniform(kHistorySteps, d, rng, 0.1);
    positional_ = params_.add("temporal.pos", std::move(pos));
  }
  for (std::size_t l = 0; l < config_.layers_temporal; ++l) {
    temporal_.emplace_back(params_, "temporal.layer" + std::to_string(l), d, h, rng);
  }
  lane_in_ = nn::Linear(params_, "lane.in", kLaneFeatures, d, rng);
  edge_mlp_ = nn::Mlp(params_, "edge", {kGeometryFeatures, d, d}, rng);

  const std::size_t kv_width = d + config_.attr_width() + d;
  for (std::size_t l = 0; l < config_.layers_local; ++l) {
    LocalLayer layer;
    const std::string base = "local" + std::to_string(l);
    for (std::size_t g = 0; g < config_.groups(); ++g) {
      const std::string gname = base + ".group" + std::to_string(g);
      layer.q.emplace_back(params_, gname + ".q", d, d, rng);
      layer.k.emplace_back(params_, gname + ".k", kv_width, d, rng);
      layer.v.emplace_back(params_, gname + ".v", kv_width, d, rng);
    }
    layer.score = nn::Mlp(params_, base + ".score", {d, d, 1}, rng);
    local_.push_back(std::move(layer));
  }

  pair_mlp_ = nn::Mlp(params_, "global.pair", {kGeometryFeatures, d, d}, rng);
  for (std::size_t l = 0; l < config_.layers_global; ++l) {
    const std::string base = "global" + std::to_string(l);
    GlobalLayer layer{
      nn::MultiHeadAttention(params_, base + ".attn", d, 2 * d, h, rng),
      nn::LayerNorm(params_, base + ".norm1", d),
      nn::FeedForward(params_, base + ".ff", d, 2 * d, rng),
      nn::LayerNorm(params_, base + ".norm2", d)};
    global_.push_back(std::move(layer));
  }

  for (std::size_t l = 0; l < config_.decoder_mlp_layers; ++l) {
    decoder_hidden_.emplace_back(params_, "decoder.hidden" + std::to_string(l), d, d, rng);
  }
  const std::size_t K = config_.key_timestamps.size();
  offset_head_ = nn::Linear(params_, "decoder.offsets", d, config_.n_modes * K * 2, rng);
  mode_head_ = nn::Linear(params_, "decoder.modes", d, config_.n_modes, rng);
}

Var HeteroEncoder::embed_agents(const EncoderInputs & in) const
{
  const std::size_t A = in.n_agents();
  std::vector<std::size_t> pos_index(A * kHistorySteps);
  for (std::size_t r = 0; r < pos_index.size(); ++r) {
    pos_index[r] = r % kHistorySteps;
  }
  Var x = ops::add(history_in_(constant(in.history)), ops::gather_rows(positional_, pos_index));
  const auto segments = nn::block_segments(A, kHistorySteps);
  for (const auto & layer : temporal_) {
    x = layer(x, segments);
  }
  std::vector<std::size_t> last(A);
  for (std::size_t i = 0; i < A; ++i) {
    last[i] = i * kHistorySteps + kHistorySteps - 1;
  }
  return ops::gather_rows(x, last);
}

Var HeteroEncoder::embed_lanes(const EncoderInputs & in) const
{
  if (in.lane_features.empty()) {
    return Var();
  }
  return lane_in_(constant(in.lane_features));
}

Var HeteroEncoder::embed_edges(const EncoderInputs & in) const
{
  if (in.edge_geometry.empty()) {
    return Var();
  }
  return edge_mlp_(constant(in.edge_geometry));
}

Var HeteroEncoder::source_rows(
  const EncoderInputs & in, const Var & agents, const Var & lanes, const Var & edges) const
{
  if (in.edge_source.empty()) {
    return Var();
  }
  const Var table = lanes ? ops::concat_rows({agents, lanes}) : agents;
  std::vector<Var> parts{ops::gather_rows(table, in.edge_source)};
  if (!in.edge_attr.empty()) {
    parts.push_back(constant(in.edge_attr));
  }
  parts.push_back(edges);
  return ops::concat_cols(parts);
}

Var HeteroEncoder::aggregate(
  std::size_t layer, std::size_t group, const Var & centre, const Var & sources,
  const std::vector<AttentionSegment> & segments) const
{
  const LocalLayer & l = local_.at(layer);
  if (!sources || sources.rows() == 0) {
    return constant(Tensor::zeros(centre.rows(), config_.d_model));
  }
  return ops::attention(
    l.q.at(group)(centre), l.k.at(group)(sources), l.v.at(group)(sources), config_.n_heads, segments);
}

Var HeteroEncoder::combine_weights(std::size_t layer, const std::vector<Var> & aggregates) const
{
  const LocalLayer & l = local_.at(layer);
  std::vector<Var> scores;
  for (const auto & a : aggregates) {
    scores.push_back(l.score(a));
  }
  return ops::softmax(ops::concat_cols(scores), 1);
}

Var HeteroEncoder::combine(std::size_t layer, const Var & centre, const std::vector<Var> & aggregates) const
{
  const Var w = combine_weights(layer, aggregates);
  Var out = centre;
  for (std::size_t g = 0; g < aggregates.size(); ++g) {
    out = ops::add(out, ops::mul_col(aggregates[g], ops::slice_cols(w, g, 1)));
  }
  return out;
}

Var HeteroEncoder::local_encoding(const EncoderInputs & in) const
{
  const Var agents = embed_agents(in);
  const Var sources = source_rows(in, agents, embed_lanes(in), embed_edges(in));
  Var centre = agents;
  for (std::size_t l = 0; l < local_.size(); ++l) {
    std::vector<Var> aggregates;
    for (std::size_t g = 0; g < config_.groups(); ++g) {
      const std::size_t b = in.group_begin[g], e = in.group_begin[g + 1];
      const Var rows = e > b ? ops::slice_rows(sources, b, e - b) : Var();
      aggregates.push_back(aggregate(l, g, centre, rows, in.group_segments[g]));
    }
    centre = combine(l, centre, aggregates);
  }
  return centre;
}

Var HeteroEncoder::global_interaction(const Var & h, const EncoderInputs & in) const
{
  const std::size_t A = in.n_agents();
  const Var pair = pair_mlp_(constant(in.pair_geometry));
  std::vector<AttentionSegment> query_segments;
  for (std::size_t i = 0; i < A; ++i) {
    query_segments.push_back({i, i + 1, i * A, (i + 1) * A});
  }
  Var x = h;
  for (const auto & layer : global_) {
    const Var kv = ops::concat_cols({ops::gather_rows(x, in.pair_source), pair});
    const Var a = layer.attn(x, kv, query_segments);
    x = layer.norm1(ops::add(x, a));
    x = layer.norm2(ops::add(x, layer.ff(x)));
  }
  return x;
}

EncoderOutput HeteroEncoder::decode(const Var & h) const
{
  Var z = h;
  for (const auto & layer : decoder_hidden_) {
    z = ops::relu(layer(z));
  }
  return {offset_head_(z), mode_head_(z)};
}

EncoderOutput HeteroEncoder::forward(const EncoderInputs & in) const
{
  return decode(global_interaction(local_encoding(in), in));
}

KeyPositionSet HeteroEncoder::to_key_positions(const EncoderInputs & in, const EncoderOutput & out) const
{
  const std::size_t F = config_.n_modes, K = config_.key_timestamps.size();
  const Tensor & off = out.offsets.value();
  const Tensor & logits = out.logits.value();
  KeyPositionSet kps;
  kps.timestamps = config_.key_timestamps;
  for (std::size_t i = 0; i < in.n_agents(); ++i) {
    AgentKeyPositions a;
    a.agent_id = in.agent_ids[i];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < F; ++f) {
      top = std::max(top, logits(i, f));
    }
    double z = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      a.probabilities.push_back(std::exp(logits(i, f) - top));
      z += a.probabilities.back();
    }
    for (std::size_t f = 0; f < F; ++f) {
      a.probabilities[f] /= z;
      std::vector<TimedPoint> mode;
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t c = (f * K + k) * 2;
        const Vec2 local{off(i, c) * kEncoderPositionScale, off(i, c + 1) * kEncoderPositionScale};
        const Vec2 p = to_world(local, in.origins[i], in.headings[i]);
        mode.push_back({config_.key_timestamps[k], p.x, p.y});
      }
      a.modes.push_back(std::move(mode));
    }
    kps.agents.push_back(std::move(a));
  }
  return kps;
}

KeyPositionSet HeteroEncoder::predict(const Scene & scene) const
{
  NoGradGuard guard;
  const EncoderInputs in = prepare_encoder_inputs(scene, config_);
  return to_key_positions(in, forward(in));
}

nlohmann::json HeteroEncoder::checkpoint(const nlohmann::json & run_config) const
{
  return {
    {"format", kCheckpointFormat},
    {"version", kCheckpointVersion},
    {"config", config_.to_json()},
    {"run_config", run_config},
    {"parameters", params_.to_json()}};
}

HeteroEncoder HeteroEncoder::from_checkpoint(
  const nlohmann::json & j, const std::optional<EncoderConfig> & expected)
{
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    throw ValidationError("not an encoder checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ValidationError("unsupported encoder checkpoint version");
  }
  const EncoderConfig config = EncoderConfig::from_json(j.at("config"));
  if (expected && !(*expected == config)) {
    throw ValidationError("encoder checkpoint config does not match the requested config");
  }
  HeteroEncoder enc(config, 0);
  enc.params_.load_json(j.at("parameters"));
  return enc;
}

WtaLoss wta_loss(const EncoderInputs & in, const EncoderOutput & out, const EncoderConfig & config)
{
  if (!in.targets) {
    throw ValidationError("training scene has no ground-truth future");
  }
  const std::size_t A = in.n_agents(), F = config.n_modes, K = config.key_timestamps.size();
  const Tensor & off = out.offsets.value();
  const Tensor & target = *in.targets;

  std::vector<std::size_t> winner_rows(A);
  double fde_sum = 0.0;
  for (std::size_t i = 0; i < A; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_f = 0;
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t c = (f * K + K - 1) * 2;
      const double err = std::hypot(off(i, c) - target(i, 2 * K - 2), off(i, c + 1) - target(i, 2 * K - 1));
      if (err < best) {
        best = err;
        best_f = f;
      }
    }
    winner_rows[i] = i * F + best_f;
    fde_sum += best * kEncoderPositionScale;
  }
  // Regression in meters so that the smooth-L1 transition sits at 1 m.
  const Var modes = ops::reshape(out.offsets, A * F, 2 * K);
  const Var chosen = ops::scale(ops::gather_rows(modes, winner_rows), kEncoderPositionScale);
  Tensor target_m = target;
  for (double & v : target_m.data()) {
    v *= kEncoderPositionScale;
  }
  const double inv_a = 1.0 / static_cast<double>(A);
  const Var reg = ops::scale(ops::smooth_l1(chosen, constant(target_m)), inv_a);
  const Var log_p = ops::reshape(ops::log_softmax_rows(out.logits), A * F, 1);
  const Var cls = ops::scale(ops::sum(ops::gather_rows(log_p, winner_rows)), -inv_a);

  WtaLoss loss;
  loss.total = ops::add(reg, cls);
  loss.regression = reg.item();
  loss.classification = cls.item();
  loss.min_fde = fde_sum * inv_a;
  return loss;
}

std::vector<EncoderEpochLog> train_encoder(
  HeteroEncoder & encoder, const std::vector<EncoderInputs> & data, const EncoderTrainConfig & config,
  const std::function<void(const EncoderEpochLog &)> & on_epoch)
{
  if (data.empty()) {
    throw ValidationError("encoder training set is empty");
  }
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  adam_cfg.max_grad_norm = config.max_grad_norm;
  Adam adam(encoder.parameters().vars(), adam_cfg);
  nn::Rng rng(config.seed);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EncoderEpochLog> logs;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    EncoderEpochLog log;
    log.epoch = epoch + 1;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      Var batch_loss;
      for (std::size_t b = start; b < end; ++b) {
        const EncoderInputs & in = data[order[b]];
        const WtaLoss l = wta_loss(in, encoder.forward(in), encoder.config());
        const Var scaled = ops::scale(l.total, w);
        batch_loss = batch_loss ? ops::add(batch_loss, scaled) : scaled;
        log.loss += l.total.item();
        log.regression += l.regression;
        log.classification += l.classification;
        log.min_fde += l.min_fde;
      }
      adam.zero_grad();
      batch_loss.backward();
      adam.step();
    }
    const double n = static_cast<double>(data.size());
    log.loss /= n;
    log.regression /= n;
    log.classification /= n;
    log.min_fde /= n;
    if (!std::isfinite(log.loss)) {
      throw NumericError("encoder training loss became non-finite at epoch " + std::to_string(log.epoch));
    }
    logs.push_back(log);
    if (on_epoch) {
      on_epoch(log);
    }
  }
  return logs;
}

}  // namespace hybridpred
