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

#ifndef HYBRIDPRED__ENCODER_HPP_
#define HYBRIDPRED__ENCODER_HPP_

#include "hybridpred/autodiff.hpp"
#include "hybridpred/hetero_graph.hpp"
#include "hybridpred/key_positions.hpp"
#include "hybridpred/nn.hpp"
#include "hybridpred/scene.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hybridpred
{

/// Which heterogeneity is appended to source attributes and which one the
/// aggregation is stacked over.
enum class EncoderAblation {
  none,                 // no attribute, one aggregation
  type_attr,            // node type in attribute, one aggregation
  dir_attr_type_stack,  // direction in attribute, one aggregation per node type
  full,                 // node type in attribute, one aggregation per direction
};

const char * to_string(EncoderAblation a);
EncoderAblation encoder_ablation_from_string(const std::string & s);

struct EncoderConfig
{
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t layers_local = 1;
  std::size_t layers_temporal = 3;
  std::size_t layers_global = 3;
  std::size_t decoder_mlp_layers = 1;
  double radius = 50.0;
  std::size_t n_modes = 6;
  std::vector<double> key_timestamps{1.5, 3.0};
  EncoderAblation ablation = EncoderAblation::full;

  void validate() const;
  /// Number of stacked aggregations combined per local layer.
  std::size_t groups() const;
  /// Width of the one-hot appended to each source node.
  std::size_t attr_width() const;

  nlohmann::json to_json() const;
  /// Keys present in `j` override `base`; unknown keys are rejected.
  static EncoderConfig from_json(const nlohmann::json & j, EncoderConfig base);
  static EncoderConfig from_json(const nlohmann::json & j) { return from_json(j, EncoderConfig()); }
  bool operator==(const EncoderConfig &) const = default;
};

struct EncoderTrainConfig
{
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double lr = 5e-4;
  double max_grad_norm = 5.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static EncoderTrainConfig from_json(const nlohmann::json & j, EncoderTrainConfig base);
  static EncoderTrainConfig from_json(const nlohmann::json & j)
  {
    return from_json(j, EncoderTrainConfig());
  }
};

/// Per-edge feature rows that only depend on the scene, computed once.
/// Edges of all centers are stored together, sorted by group then center.
struct EncoderInputs
{
  std::vector<std::string> agent_ids;
  std::vector<Vec2> origins;
  std::vector<double> headings;
  /// (A * 20) x 4: per step displacement and position in the agent's frame.
  Tensor history;
  /// L x 6: lane segment features in the frame of the center they belong to.
  Tensor lane_features;
  /// Row into [agent embeddings; lane embeddings] for every edge.
  std::vector<std::size_t> edge_source;
  /// E x attr_width one-hot.
  Tensor edge_attr;
  /// E x 4: relative position (scaled) and relative heading of the source.
  Tensor edge_geometry;
  /// Group g owns edge rows [group_begin[g], group_begin[g + 1]).
  std::vector<std::size_t> group_begin;
  /// Per group, one segment per center with key rows local to the group.
  std::vector<std::vector<AttentionSegment>> group_segments;
  /// (A * A) x 4 pose of agent j in the frame of agent i, row i * A + j.
  Tensor pair_geometry;
  std::vector<std::size_t> pair_source;
  /// A x 2K scaled key positions in each agent's frame, when available.
  std::optional<Tensor> targets;

  std::size_t n_agents() const { return agent_ids.size(); }
};

inline constexpr double kEncoderPositionScale = 10.0;

EncoderInputs prepare_encoder_inputs(const Scene & scene, const EncoderConfig & config);

struct EncoderOutput
{
  /// A x (F * K * 2), scaled offsets in each agent's frame.
  Var offsets;
  /// A x F mode logits.
  Var logits;
};

class HeteroEncoder
{
public:
  HeteroEncoder(EncoderConfig config, std::uint64_t seed);

  const EncoderConfig & config() const { return config_; }
  nn::ParameterSet & parameters() { return params_; }
  const nn::ParameterSet & parameters() const { return params_; }

  /// Final token of the temporal stack per agent, A x d.
  Var embed_agents(const EncoderInputs & in) const;
  /// Linear embedding of lane segment features, L x d.
  Var embed_lanes(const EncoderInputs & in) const;
  /// Edge MLP over relative geometry, E x d.
  Var embed_edges(const EncoderInputs & in) const;
  /// Source rows: [source feature, attribute one-hot, edge feature].
  Var source_rows(const EncoderInputs & in, const Var & agents, const Var & lanes, const Var & edges) const;

  /// Attention of each center over the sources of one group. Centers with
  /// no sources in the group get a zero row.
  Var aggregate(
    std::size_t layer, std::size_t group, const Var & centre, const Var & sources,
    const std::vector<AttentionSegment> & segments) const;
  /// A x G softmax weights over groups.
  Var combine_weights(std::size_t layer, const std::vector<Var> & aggregates) const;
  /// Weighted sum of the group aggregates plus the residual.
  Var combine(std::size_t layer, const Var & centre, const std::vector<Var> & aggregates) const;

  Var local_encoding(const EncoderInputs & in) const;
  Var global_interaction(const Var & h, const EncoderInputs & in) const;
  EncoderOutput decode(const Var & h) const;
  EncoderOutput forward(const EncoderInputs & in) const;

  KeyPositionSet to_key_positions(const EncoderInputs & in, const EncoderOutput & out) const;
  KeyPositionSet predict(const Scene & scene) const;

  nlohmann::json checkpoint(const nlohmann::json & run_config) const;
  /// Throws ValidationError on a format or config mismatch.
  static HeteroEncoder from_checkpoint(
    const nlohmann::json & j, const std::optional<EncoderConfig> & expected = std::nullopt);

private:
  struct LocalLayer
  {
    std::vector<nn::Linear> q, k, v;
    nn::Mlp score;
  };
  struct GlobalLayer
  {
    nn::MultiHeadAttention attn;
    nn::LayerNorm norm1;
    nn::FeedForward ff;
    nn::LayerNorm norm2;
  };

  EncoderConfig config_;
  nn::ParameterSet params_;
  nn::Linear history_in_;
  Var positional_;
  std::vector<nn::EncoderLayer> temporal_;
  nn::Linear lane_in_;
  nn::Mlp edge_mlp_;
  std::vector<LocalLayer> local_;
  nn::Mlp pair_mlp_;
  std::vector<GlobalLayer> global_;
  std::vector<nn::Linear> decoder_hidden_;
  nn::Linear offset_head_;
  nn::Linear mode_head_;
};

struct WtaLoss
{
  Var total;
  double regression = 0.0;
  double classification = 0.0;
  /// Mean over agents of the best-mode error at the last key timestamp, m.
  double min_fde = 0.0;
};

/// Winner-take-all: smooth-L1 on the mode whose final key position is
/// closest to the ground truth, plus cross-entropy toward that mode.
WtaLoss wta_loss(const EncoderInputs & in, const EncoderOutput & out, const EncoderConfig & config);

struct EncoderEpochLog
{
  std::size_t epoch = 0;
  double loss = 0.0;
  double regression = 0.0;
  double classification = 0.0;
  double min_fde = 0.0;
};

std::vector<EncoderEpochLog> train_encoder(
  HeteroEncoder & encoder, const std::vector<EncoderInputs> & data, const EncoderTrainConfig & config,
  const std::function<void(const EncoderEpochLog &)> & on_epoch = {});

}  // namespace hybridpred

#endif  // HYBRIDPRED__ENCODER_HPP_
