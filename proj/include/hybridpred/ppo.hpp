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

#ifndef HYBRIDPRED__PPO_HPP_
#define HYBRIDPRED__PPO_HPP_

#include "hybridpred/autodiff.hpp"
#include "hybridpred/metrics.hpp"
#include "hybridpred/nn.hpp"
#include "hybridpred/optim.hpp"
#include "hybridpred/subscene.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <vector>

namespace hybridpred
{

enum class PolicyArch { transformer, vanilla };

const char * to_string(PolicyArch a);
PolicyArch policy_arch_from_string(const std::string & s);

struct PolicyConfig
{
  PolicyArch arch = PolicyArch::transformer;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  /// Hidden width of the vanilla MLP trunk.
  std::size_t mlp_width = 64;
  double log_std_init = -0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static PolicyConfig from_json(const nlohmann::json & j, PolicyConfig base);
  bool operator==(const PolicyConfig &) const = default;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicyOutput
{
  /// B x 2 normalised action means.
  Var mean;
  /// B x 2, clamped to [kLogStdMin, kLogStdMax].
  Var log_std;
  /// B x 1.
  Var value;
};

/// Shared policy/value network. Actions are normalised: the physical action
/// is the normalised one times the per-dimension bound.
class PolicyNet
{
public:
  PolicyNet(PolicyConfig config, std::uint64_t seed);

  const PolicyConfig & config() const { return config_; }
  nn::ParameterSet & parameters() { return params_; }
  const nn::ParameterSet & parameters() const { return params_; }

  /// Encoded context per lane-token tensor, reused across rollout steps.
  using ContextCache = std::map<const Tensor *, Var>;

  /// Batched forward. Observations that point at the same lane-token tensor
  /// share one context encoding. With a cache, context encodings are looked
  /// up or stored there; the values are identical either way.
  PolicyOutput forward(const std::vector<const Observation *> & batch, ContextCache * cache = nullptr) const;
  PolicyOutput forward(const Observation & obs) const { return forward(std::vector<const Observation *>{&obs}); }

  nlohmann::json checkpoint(const nlohmann::json & extra) const;
  static PolicyNet from_checkpoint(const nlohmann::json & j, const std::optional<PolicyConfig> & expected = std::nullopt);

private:
  Var trunk(const std::vector<const Observation *> & batch, ContextCache * cache) const;
  /// Lane embedding (vanilla) or encoder memory (transformer) of one block.
  Var encode_context(const Var & lanes, const std::vector<AttentionSegment> & blocks) const;

  PolicyConfig config_;
  nn::ParameterSet params_;
  nn::Linear lane_in_;
  nn::Linear motion_in_;
  std::vector<nn::EncoderLayer> encoder_;
  std::vector<nn::DecoderLayer> decoder_;
  nn::Mlp mlp_;
  nn::Linear mean_head_;
  nn::Linear log_std_head_;
  nn::Linear value_head_;
};

struct PPOConfig
{
  double gamma = 0.95;
  double gae_lambda = 0.97;
  double clip = 0.2;
  double lr = 1e-4;
  std::size_t minibatch = 1024;
  std::size_t epochs = 10;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  std::size_t rollout_steps = 512;
  std::size_t buffer_capacity = 8092;
  double max_grad_norm = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static PPOConfig from_json(const nlohmann::json & j, PPOConfig base);
};

struct GaeResult
{
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalised advantage estimation over time-ordered transitions; a done
/// flag ends a segment and bootstraps with zero. The last transition must
/// be done. Throws ContractError on length mismatch.
GaeResult compute_gae(
  const std::vector<double> & rewards, const std::vector<double> & values, const std::vector<bool> & dones,
  double gamma, double lambda);

/// Shifts and scales to zero mean, unit variance (population).
void normalize_advantages(std::vector<double> & advantages);

struct Transition
{
  std::shared_ptr<const SubScene> sub;
  Tensor motion;
  std::array<double, 2> action{};
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

class RolloutBuffer
{
public:
  explicit RolloutBuffer(std::size_t capacity) : capacity_(capacity) {}
  /// Appends one agent's complete, time-ordered segment.
  void add_segment(std::vector<Transition> segment);
  const std::vector<Transition> & transitions() const { return data_; }
  std::size_t size() const { return data_.size(); }
  void clear() { data_.clear(); }

private:
  std::size_t capacity_;
  std::vector<Transition> data_;
};

struct UpdateStats
{
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  std::size_t minibatches = 0;
};

/// Elementwise min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
Var clipped_surrogate(const Var & ratio, const Var & advantage, double clip);

/// Clipped-surrogate update over the whole buffer; one optimizer step per
/// minibatch. Throws NumericError naming the minibatch when the loss is not
/// finite.
UpdateStats ppo_update(
  const RolloutBuffer & buffer, PolicyNet & net, Adam & optimizer, const PPOConfig & config,
  std::mt19937_64 & rng);

struct EpisodeStats
{
  double mean_return = 0.0;
  double collision_rate = 0.0;
  double goal_hit_rate = 0.0;
  std::size_t agent_episodes = 0;
};

/// Runs whole episodes until the buffer holds at least `steps` transitions.
EpisodeStats collect_rollouts(
  const std::function<std::shared_ptr<const SubScene>(std::mt19937_64 &)> & factory, const PolicyNet & net,
  const EnvConfig & env, std::size_t steps, RolloutBuffer & buffer, std::mt19937_64 & rng);

struct TrainLogRow
{
  std::size_t update = 0;
  double mean_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double collision_rate = 0.0;
  double goal_hit_rate = 0.0;
};

void write_train_log_header(std::ostream & out);
void write_train_log_row(std::ostream & out, const TrainLogRow & row);

using SubSceneFactory = std::function<std::shared_ptr<const SubScene>(std::mt19937_64 &)>;

std::vector<TrainLogRow> train_ppo(
  PolicyNet & net, const SubSceneFactory & factory, const EnvConfig & env, const PPOConfig & config,
  std::size_t updates, std::uint64_t seed, const std::function<void(const TrainLogRow &)> & on_update = {});

struct Rollout
{
  /// Per member, positions after each step (horizon points).
  std::vector<Trajectory> trajectories;
  /// Per member, physical actions actually applied (clamped).
  std::vector<std::vector<ActionVec>> actions;
  EpisodeState final_state;
  std::vector<StepResult> steps;
};

/// Runs one episode. Deterministic mode applies the (clamped) mean action;
/// otherwise actions are sampled from `rng`. Finished agents hold position.
/// With `trace`, every step is appended as episode trace rows.
Rollout rollout_predict(
  const SubScene & sub, const PolicyNet & net, const EnvConfig & env, bool deterministic, std::mt19937_64 & rng,
  std::ostream * trace = nullptr);

/// Whether a finished episode reached the final goal within tolerance at
/// its deadline.
bool goal_hit(const SubScene & sub, const Rollout & r, std::size_t slot, const EnvConfig & env);

}  // namespace hybridpred

#endif  // HYBRIDPRED__PPO_HPP_
