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

#include "hybridpred/ppo.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>

namespace hybridpred
{

namespace
{

constexpr const char * kCheckpointFormat = "hybridpred.policy";
constexpr int kCheckpointVersion = 1;

std::size_t as_size(const nlohmann::json & v, const std::string & key)
{
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError("config field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_double(const nlohmann::json & v, const std::string & key)
{
  if (!v.is_number()) {
    throw ValidationError("config field '" + key + "' must be a number");
  }
  return v.get<double>();
}

}  // namespace

const char * to_string(PolicyArch a)
{
  return a == PolicyArch::transformer ? "transformer" : "vanilla";
}

PolicyArch policy_arch_from_string(const std::string & s)
{
  if (s == "transformer") {
    return PolicyArch::transformer;
  }
  if (s == "vanilla") {
    return PolicyArch::vanilla;
  }
  throw ValidationError("unknown policy architecture '" + s + "'");
}

void PolicyConfig::validate() const
{
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ValidationError("policy d_model must be a positive multiple of n_heads");
  }
  if (encoder_layers < 1 || decoder_layers < 1 || mlp_width < 1) {
    throw ValidationError("policy layer counts must be at least 1");
  }
  if (log_std_init < kLogStdMin || log_std_init > kLogStdMax) {
    throw ValidationError("log_std_init outside the clamp range");
  }
}

nlohmann::json PolicyConfig::to_json() const
{
  return {
    {"arch", to_string(arch)},
    {"d_model", d_model},
    {"n_heads", n_heads},
    {"encoder_layers", encoder_layers},
    {"decoder_layers", decoder_layers},
    {"mlp_width", mlp_width},
    {"log_std_init", log_std_init}};
}

PolicyConfig PolicyConfig::from_json(const nlohmann::json & j, PolicyConfig base)
{
  if (!j.is_object()) {
    throw ValidationError("policy config must be an object");
  }
  for (const auto & [key, v] : j.items()) {
    if (key == "arch") {
      if (!v.is_string()) {
        throw ValidationError("config field 'arch' must be a string");
      }
      base.arch = policy_arch_from_string(v.get<std::string>());
    } else if (key == "d_model") {
      base.d_model = as_size(v, key);
    } else if (key == "n_heads") {
      base.n_heads = as_size(v, key);
    } else if (key == "encoder_layers") {
      base.encoder_layers = as_size(v, key);
    } else if (key == "decoder_layers") {
      base.decoder_layers = as_size(v, key);
    } else if (key == "mlp_width") {
      base.mlp_width = as_size(v, key);
    } else if (key == "log_std_init") {
      base.log_std_init = as_double(v, key);
    } else {
      throw ValidationError("unknown policy config field '" + key + "'");
    }
  }
  base.validate();
  return base;
}

void PPOConfig::validate() const
{
  if (!(gamma > 0.0 && gamma <= 1.0) || !(gae_lambda > 0.0 && gae_lambda <= 1.0)) {
    throw ValidationError("gamma and gae_lambda must lie in (0, 1]");
  }
  if (!(clip > 0.0) || !(lr > 0.0)) {
    throw ValidationError("clip and lr must be positive");
  }
  if (minibatch < 1 || epochs < 1 || rollout_steps < 1 || buffer_capacity < rollout_steps) {
    throw ValidationError("invalid PPO batch sizes");
  }
}

nlohmann::json PPOConfig::to_json() const
{
  return {
    {"gamma", gamma},
    {"gae_lambda", gae_lambda},
    {"clip", clip},
    {"lr", lr},
    {"minibatch", minibatch},
    {"epochs", epochs},
    {"value_coef", value_coef},
    {"entropy_coef", entropy_coef},
    {"rollout_steps", rollout_steps},
    {"buffer_capacity", buffer_capacity},
    {"max_grad_norm", max_grad_norm}};
}

PPOConfig PPOConfig::from_json(const nlohmann::json & j, PPOConfig base)
{
  if (!j.is_object()) {
    throw ValidationError("ppo config must be an object");
  }
  for (const auto & [key, v] : j.items()) {
    if (key == "gamma") {
      base.gamma = as_double(v, key);
    } else if (key == "gae_lambda") {
      base.gae_lambda = as_double(v, key);
    } else if (key == "clip") {
      base.clip = as_double(v, key);
    } else if (key == "lr") {
      base.lr = as_double(v, key);
    } else if (key == "minibatch") {
      base.minibatch = as_size(v, key);
    } else if (key == "epochs") {
      base.epochs = as_size(v, key);
    } else if (key == "value_coef") {
      base.value_coef = as_double(v, key);
    } else if (key == "entropy_coef") {
      base.entropy_coef = as_double(v, key);
    } else if (key == "rollout_steps") {
      base.rollout_steps = as_size(v, key);
    } else if (key == "buffer_capacity") {
      base.buffer_capacity = as_size(v, key);
    } else if (key == "max_grad_norm") {
      base.max_grad_norm = as_double(v, key);
    } else {
      throw ValidationError("unknown ppo config field '" + key + "'");
    }
  }
  base.validate();
  return base;
}

PolicyNet::PolicyNet(PolicyConfig config, std::uint64_t seed) : config_(std::move(config))
{
  config_.validate();
  nn::Rng rng(seed);
  const std::size_t d = config_.d_model;
  lane_in_ = nn::Linear(params_, "lane_in", kLaneTokenFeatures, d, rng);
  motion_in_ = nn::Linear(params_, "motion_in", kMotionFeatures, d, rng);
  std::size_t head_in = d;
  if (config_.arch == PolicyArch::transformer) {
    for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
      encoder_.emplace_back(params_, "encoder" + std::to_string(l), d, config_.n_heads, rng);
    }
    for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
      decoder_.emplace_back(params_, "decoder" + std::to_string(l), d, config_.n_heads, rng);
    }
  } else {
    mlp_ = nn::Mlp(params_, "mlp", {2 * d, config_.mlp_width, config_.mlp_width}, rng);
    head_in = config_.mlp_width;
  }
  // Small output layers keep the initial policy close to zero mean.
  mean_head_ = nn::Linear(params_, "mean_head", head_in, 2, rng, 0.1);
  log_std_head_ = nn::Linear(params_, "log_std_head", head_in, 2, rng, 0.1);
  log_std_head_.b.mutable_value().fill(config_.log_std_init);
  value_head_ = nn::Linear(params_, "value_head", head_in, 1, rng);
}

Var PolicyNet::encode_context(const Var & lanes, const std::vector<AttentionSegment> & blocks) const
{
  Var memory = lanes;
  if (config_.arch == PolicyArch::transformer) {
    for (const auto & layer : encoder_) {
      memory = layer(memory, blocks);
    }
  }
  return memory;
}

Var PolicyNet::trunk(const std::vector<const Observation *> & batch, ContextCache * cache) const
{
  const std::size_t B = batch.size();
  // One context block per distinct lane-token tensor.
  std::vector<const Tensor *> blocks;
  std::map<const Tensor *, std::size_t> block_of;
  std::vector<std::size_t> block_begin{0};
  std::vector<double> motion_rows;
  motion_rows.reserve(B * kMotionFeatures);
  for (const Observation * o : batch) {
    if (o->motion.rows() != 1 || o->motion.cols() != kMotionFeatures) {
      throw ShapeError("policy: motion token must be 1 x " + std::to_string(kMotionFeatures));
    }
    motion_rows.insert(motion_rows.end(), o->motion.storage().begin(), o->motion.storage().end());
    const Tensor * t = o->lane_tokens;
    if (t != nullptr && !t->empty() && block_of.find(t) == block_of.end()) {
      if (t->cols() != kLaneTokenFeatures) {
        throw ShapeError("policy: lane tokens must have " + std::to_string(kLaneTokenFeatures) + " columns");
      }
      block_of[t] = blocks.size();
      blocks.push_back(t);
      block_begin.push_back(block_begin.back() + t->rows());
    }
  }
  const Var motion = motion_in_(constant(Tensor({B, kMotionFeatures}, std::move(motion_rows))));

  // Context rows for every block, either encoded together in one segmented
  // pass or assembled block by block from the cache.
  Var memory;
  if (!blocks.empty()) {
    if (cache == nullptr) {
      std::vector<double> rows;
      rows.reserve(block_begin.back() * kLaneTokenFeatures);
      for (const Tensor * t : blocks) {
        rows.insert(rows.end(), t->storage().begin(), t->storage().end());
      }
      std::vector<AttentionSegment> self;
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        self.push_back({block_begin[k], block_begin[k + 1], block_begin[k], block_begin[k + 1]});
      }
      memory = encode_context(
        lane_in_(constant(Tensor({block_begin.back(), kLaneTokenFeatures}, std::move(rows)))), self);
    } else {
      std::vector<Var> parts;
      for (const Tensor * t : blocks) {
        auto it = cache->find(t);
        if (it == cache->end()) {
          it = cache->emplace(t, encode_context(lane_in_(constant(*t)), {{0, t->rows(), 0, t->rows()}})).first;
        }
        parts.push_back(it->second);
      }
      memory = parts.size() == 1 ? parts.front() : ops::concat_rows(parts);
    }
  }
  const auto block_range = [&](const Observation * o) -> std::pair<std::size_t, std::size_t> {
    const auto it = o->lane_tokens ? block_of.find(o->lane_tokens) : block_of.end();
    if (it == block_of.end()) {
      return {0, 0};
    }
    return {block_begin[it->second], block_begin[it->second + 1]};
  };

  if (config_.arch == PolicyArch::vanilla) {
    // Mean-pool each observation's lane tokens with an averaging matrix.
    Var pooled;
    if (memory) {
      Tensor avg = Tensor::zeros(B, block_begin.back());
      for (std::size_t b = 0; b < B; ++b) {
        const auto [lo, hi] = block_range(batch[b]);
        for (std::size_t r = lo; r < hi; ++r) {
          avg(b, r) = 1.0 / static_cast<double>(hi - lo);
        }
      }
      pooled = ops::matmul(constant(std::move(avg)), memory);
    } else {
      pooled = constant(Tensor::zeros(B, config_.d_model));
    }
    return ops::relu(mlp_(ops::concat_cols({pooled, motion})));
  }

  if (!memory) {
    // No context anywhere in the batch: a single zero key that every
    // query ignores through empty segments.
    memory = constant(Tensor::zeros(1, config_.d_model));
  }
  std::vector<AttentionSegment> cross;
  for (std::size_t b = 0; b < B; ++b) {
    const auto [lo, hi] = block_range(batch[b]);
    cross.push_back({b, b + 1, lo, hi});
  }
  const auto self = nn::diagonal_segments(B);
  Var x = motion;
  for (const auto & layer : decoder_) {
    x = layer(x, self, memory, cross);
  }
  return x;
}

PolicyOutput PolicyNet::forward(const std::vector<const Observation *> & batch, ContextCache * cache) const
{
  if (batch.empty()) {
    throw ContractError("policy forward on an empty batch");
  }
  const Var h = trunk(batch, cache);
  return {mean_head_(h), ops::clamp(log_std_head_(h), kLogStdMin, kLogStdMax), value_head_(h)};
}

nlohmann::json PolicyNet::checkpoint(const nlohmann::json & extra) const
{
  nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["policy_config"] = config_.to_json();
  j["parameters"] = params_.to_json();
  return j;
}

PolicyNet PolicyNet::from_checkpoint(const nlohmann::json & j, const std::optional<PolicyConfig> & expected)
{
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    throw ValidationError("not a policy checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ValidationError("unsupported policy checkpoint version");
  }
  const PolicyConfig config = PolicyConfig::from_json(j.at("policy_config"), PolicyConfig());
  if (expected && !(*expected == config)) {
    throw ValidationError("policy checkpoint config does not match the requested config");
  }
  PolicyNet net(config, 0);
  net.params_.load_json(j.at("parameters"));
  return net;
}

GaeResult compute_gae(
  const std::vector<double> & rewards, const std::vector<double> & values, const std::vector<bool> & dones,
  double gamma, double lambda)
{
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw ContractError("compute_gae: rewards, values and dones must have equal length");
  }
  if (n > 0 && !dones.back()) {
    throw ContractError("compute_gae: the last transition must end a segment");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = dones[i] ? 0.0 : values[i + 1];
    const double carry = dones[i] ? 0.0 : running;
    const double delta = rewards[i] + gamma * next_value - values[i];
    running = delta + gamma * lambda * carry;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

void normalize_advantages(std::vector<double> & advantages)
{
  if (advantages.empty()) {
    return;
  }
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) {
    var += (a - mean) * (a - mean);
  }
  const double sd = std::sqrt(var / n);
  for (double & a : advantages) {
    a = (a - mean) / (sd + 1e-8);
  }
}

void RolloutBuffer::add_segment(std::vector<Transition> segment)
{
  if (segment.empty()) {
    return;
  }
  if (!segment.back().done) {
    throw ContractError("rollout buffer: segment must end with a done transition");
  }
  if (data_.size() + segment.size() > capacity_) {
    throw ContractError("rollout buffer capacity exceeded");
  }
  for (auto & t : segment) {
    data_.push_back(std::move(t));
  }
}

Var clipped_surrogate(const Var & ratio, const Var & advantage, double clip)
{
  const Var unclipped = ops::mul(ratio, advantage);
  const Var clipped = ops::mul(ops::clamp(ratio, 1.0 - clip, 1.0 + clip), advantage);
  return ops::minimum(unclipped, clipped);
}

UpdateStats ppo_update(
  const RolloutBuffer & buffer, PolicyNet & net, Adam & optimizer, const PPOConfig & config, std::mt19937_64 & rng)
{
  const auto & data = buffer.transitions();
  const std::size_t n = data.size();
  UpdateStats stats;
  if (n == 0) {
    return stats;
  }
  std::vector<double> rewards(n), values(n);
  std::vector<bool> dones(n);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = data[i].reward;
    values[i] = data[i].value;
    dones[i] = data[i].done;
  }
  GaeResult gae = compute_gae(rewards, values, dones, config.gamma, config.gae_lambda);
  normalize_advantages(gae.advantages);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double entropy_const = std::log(2.0 * std::numbers::pi * std::numbers::e);
  std::size_t clipped = 0, counted = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t end = std::min(n, start + config.minibatch);
      const std::size_t B = end - start;
      std::vector<Observation> obs(B);
      std::vector<const Observation *> ptrs(B);
      Tensor actions = Tensor::zeros(B, 2), old_lp = Tensor::zeros(B, 1), adv = Tensor::zeros(B, 1),
             ret = Tensor::zeros(B, 1);
      for (std::size_t b = 0; b < B; ++b) {
        const Transition & t = data[order[start + b]];
        obs[b].lane_tokens = &t.sub->lane_tokens;
        obs[b].motion = t.motion;
        ptrs[b] = &obs[b];
        actions(b, 0) = t.action[0];
        actions(b, 1) = t.action[1];
        old_lp(b, 0) = t.log_prob;
        adv(b, 0) = gae.advantages[order[start + b]];
        ret(b, 0) = gae.returns[order[start + b]];
      }
      const PolicyOutput out = net.forward(ptrs);
      const Var logp = ops::gaussian_log_density(constant(actions), out.mean, out.log_std);
      const Var ratio = ops::exp(ops::sub(logp, constant(old_lp)));
      const Var policy_loss = ops::scale(ops::mean(clipped_surrogate(ratio, constant(adv), config.clip)), -1.0);
      const Var value_loss = ops::mean(ops::square(ops::sub(out.value, constant(ret))));
      const Var entropy =
        ops::add_scalar(ops::scale(ops::mean(ops::sum_cols(out.log_std)), 1.0), entropy_const);
      const Var loss = ops::sub(
        ops::add(policy_loss, ops::scale(value_loss, config.value_coef)), ops::scale(entropy, config.entropy_coef));
      if (!std::isfinite(loss.item())) {
        throw NumericError(
          "ppo_update: non-finite loss in epoch " + std::to_string(epoch) + " minibatch starting at " +
          std::to_string(start));
      }
      for (std::size_t b = 0; b < B; ++b) {
        clipped += std::abs(ratio.value()(b, 0) - 1.0) > config.clip ? 1 : 0;
      }
      counted += B;
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      stats.policy_loss += policy_loss.item();
      stats.value_loss += value_loss.item();
      stats.entropy += entropy.item();
      ++stats.minibatches;
    }
  }
  const double m = static_cast<double>(stats.minibatches);
  stats.policy_loss /= m;
  stats.value_loss /= m;
  stats.entropy /= m;
  stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(counted);
  return stats;
}

namespace
{

std::array<double, 2> row2(const Var & v, std::size_t r) { return {v.value()(r, 0), v.value()(r, 1)}; }

}  // namespace

bool goal_hit(const SubScene & sub, const Rollout & r, std::size_t slot, const EnvConfig & env)
{
  if (r.final_state.collided.at(slot)) {
    return false;
  }
  const Goal & last = sub.goals.at(slot).back();
  if (last.step == 0 || last.step > r.trajectories.at(slot).size()) {
    return false;
  }
  return distance(r.trajectories[slot][last.step - 1], last.position) <= env.goal_tolerance;
}

Rollout rollout_predict(
  const SubScene & sub, const PolicyNet & net, const EnvConfig & env, bool deterministic, std::mt19937_64 & rng,
  std::ostream * trace)
{
  NoGradGuard guard;
  const std::size_t n = sub.members.size();
  const ActionVec bound = action_bounds(env);
  Rollout out;
  out.trajectories.assign(n, {});
  out.actions.assign(n, {});
  EpisodeState ep = reset(sub);
  PolicyNet::ContextCache cache;
  bool finished = false;
  while (!finished) {
    std::vector<Observation> obs;
    std::vector<std::size_t> slots;
    for (std::size_t s = 0; s < n; ++s) {
      if (!ep.done[s]) {
        obs.push_back(observe(sub, ep, s, env));
        slots.push_back(s);
      }
    }
    std::vector<const Observation *> ptrs;
    for (const auto & o : obs) {
      ptrs.push_back(&o);
    }
    const PolicyOutput p = net.forward(ptrs, &cache);
    std::vector<ActionVec> actions(n, ActionVec{0.0, 0.0});
    for (std::size_t b = 0; b < slots.size(); ++b) {
      const auto mean = row2(p.mean, b);
      const auto log_std = row2(p.log_std, b);
      std::array<double, 2> normalised{};
      if (deterministic) {
        normalised = mean;
      } else {
        normalised = sample_action(mean, {std::exp(log_std[0]), std::exp(log_std[1])}, {1e300, 1e300}, rng).raw;
      }
      for (std::size_t k = 0; k < 2; ++k) {
        actions[slots[b]][k] = std::clamp(normalised[k] * bound[k], -bound[k], bound[k]);
      }
      out.actions[slots[b]].push_back(actions[slots[b]]);
    }
    StepResult r = env_step(sub, ep, actions, env);
    if (trace != nullptr) {
      write_trace_rows(*trace, sub, ep, r);
    }
    for (std::size_t s = 0; s < n; ++s) {
      out.trajectories[s].push_back(ep.states[s].position());
    }
    finished = r.episode_done;
    out.steps.push_back(std::move(r));
  }
  // Finished agents hold their last position until the horizon.
  for (auto & t : out.trajectories) {
    while (t.size() < env.horizon) {
      t.push_back(t.back());
    }
  }
  out.final_state = std::move(ep);
  return out;
}

EpisodeStats collect_rollouts(
  const SubSceneFactory & factory, const PolicyNet & net, const EnvConfig & env, std::size_t steps,
  RolloutBuffer & buffer, std::mt19937_64 & rng)
{
  NoGradGuard guard;
  const ActionVec bound = action_bounds(env);
  EpisodeStats stats;
  double return_sum = 0.0, collisions = 0.0, hits = 0.0;
  while (buffer.size() < steps) {
    const std::shared_ptr<const SubScene> sub = factory(rng);
    const std::size_t n = sub->members.size();
    EpisodeState ep = reset(*sub);
    std::vector<std::vector<Transition>> segments(n);
    std::vector<double> returns(n, 0.0);
    Rollout trace;
    trace.trajectories.assign(n, {});
    PolicyNet::ContextCache cache;
    bool finished = false;
    while (!finished) {
      std::vector<Observation> obs;
      std::vector<std::size_t> slots;
      for (std::size_t s = 0; s < n; ++s) {
        if (!ep.done[s]) {
          obs.push_back(observe(*sub, ep, s, env));
          slots.push_back(s);
        }
      }
      std::vector<const Observation *> ptrs;
      for (const auto & o : obs) {
        ptrs.push_back(&o);
      }
      const PolicyOutput p = net.forward(ptrs, &cache);
      std::vector<ActionVec> actions(n, ActionVec{0.0, 0.0});
      for (std::size_t b = 0; b < slots.size(); ++b) {
        const auto log_std = row2(p.log_std, b);
        const SampledAction a =
          sample_action(row2(p.mean, b), {std::exp(log_std[0]), std::exp(log_std[1])}, {1.0, 1.0}, rng);
        Transition t;
        t.sub = sub;
        t.motion = obs[b].motion;
        t.action = a.raw;
        t.log_prob = a.log_prob;
        t.value = p.value.value()(b, 0);
        segments[slots[b]].push_back(std::move(t));
        for (std::size_t k = 0; k < 2; ++k) {
          actions[slots[b]][k] = a.clamped[k] * bound[k];
        }
      }
      const StepResult r = env_step(*sub, ep, actions, env);
      for (std::size_t s = 0; s < n; ++s) {
        trace.trajectories[s].push_back(ep.states[s].position());
        if (r.acted[s]) {
          segments[s].back().reward = r.training_rewards[s];
          segments[s].back().done = ep.done[s];
          returns[s] += r.rewards[s].total;
        }
      }
      finished = r.episode_done;
    }
    trace.final_state = ep;
    for (std::size_t s = 0; s < n; ++s) {
      buffer.add_segment(std::move(segments[s]));
      return_sum += returns[s];
      collisions += ep.collided[s] ? 1.0 : 0.0;
      hits += goal_hit(*sub, trace, s, env) ? 1.0 : 0.0;
      ++stats.agent_episodes;
    }
  }
  const double m = static_cast<double>(std::max<std::size_t>(1, stats.agent_episodes));
  stats.mean_return = return_sum / m;
  stats.collision_rate = collisions / m;
  stats.goal_hit_rate = hits / m;
  return stats;
}

void write_train_log_header(std::ostream & out)
{
  out << "update,mean_return,policy_loss,value_loss,entropy,clip_fraction,collision_rate,goal_hit_rate\n";
}

void write_train_log_row(std::ostream & out, const TrainLogRow & row)
{
  char buf[384];
  std::snprintf(
    buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", row.update, row.mean_return, row.policy_loss,
    row.value_loss, row.entropy, row.clip_fraction, row.collision_rate, row.goal_hit_rate);
  out << buf;
}

std::vector<TrainLogRow> train_ppo(
  PolicyNet & net, const SubSceneFactory & factory, const EnvConfig & env, const PPOConfig & config,
  std::size_t updates, std::uint64_t seed, const std::function<void(const TrainLogRow &)> & on_update)
{
  config.validate();
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  adam_cfg.max_grad_norm = config.max_grad_norm;
  Adam adam(net.parameters().vars(), adam_cfg);
  std::mt19937_64 rng(seed);
  RolloutBuffer buffer(config.buffer_capacity);
  std::vector<TrainLogRow> log;
  for (std::size_t u = 0; u < updates; ++u) {
    buffer.clear();
    const EpisodeStats ep = collect_rollouts(factory, net, env, config.rollout_steps, buffer, rng);
    const UpdateStats st = ppo_update(buffer, net, adam, config, rng);
    TrainLogRow row;
    row.update = u + 1;
    row.mean_return = ep.mean_return;
    row.policy_loss = st.policy_loss;
    row.value_loss = st.value_loss;
    row.entropy = st.entropy;
    row.clip_fraction = st.clip_fraction;
    row.collision_rate = ep.collision_rate;
    row.goal_hit_rate = ep.goal_hit_rate;
    log.push_back(row);
    if (on_update) {
      on_update(row);
    }
  }
  return log;
}

}  // namespace hybridpred
