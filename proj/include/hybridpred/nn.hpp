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

#ifndef HYBRIDPRED__NN_HPP_
#define HYBRIDPRED__NN_HPP_

#include "hybridpred/autodiff.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hybridpred::nn
{

using Rng = std::mt19937_64;

/// Named, ordered collection of trainable leaves. Order is registration order
/// and is what checkpoints and optimizers rely on.
class ParameterSet
{
public:
  Var add(std::string name, Tensor init);

  const std::vector<std::pair<std::string, Var>> & entries() const { return entries_; }
  std::vector<Var> vars() const;
  std::size_t scalar_count() const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor> & values);

  nlohmann::json to_json() const;
  /// Loads values by name; names, order and shapes must match exactly.
  void load_json(const nlohmann::json & j);

private:
  std::vector<std::pair<std::string, Var>> entries_;
};

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng & rng, double gain = 1.0);

struct Linear
{
  Var w;
  Var b;

  Linear() = default;
  Linear(
    ParameterSet & params, const std::string & name, std::size_t in, std::size_t out, Rng & rng,
    double gain = 1.0);
  Var operator()(const Var & x) const { return ops::linear(x, w, b); }
  std::size_t in() const { return w.rows(); }
  std::size_t out() const { return w.cols(); }
};

struct LayerNorm
{
  Var gamma;
  Var beta;

  LayerNorm() = default;
  LayerNorm(ParameterSet & params, const std::string & name, std::size_t width);
  Var operator()(const Var & x) const { return ops::layer_norm(x, gamma, beta); }
};

/// Stack of Linear layers with ReLU between them (none after the last).
struct Mlp
{
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(
    ParameterSet & params, const std::string & name, const std::vector<std::size_t> & widths,
    Rng & rng);
  Var operator()(Var x) const;
};

struct FeedForward
{
  Linear expand;
  Linear project;

  FeedForward() = default;
  FeedForward(
    ParameterSet & params, const std::string & name, std::size_t width, std::size_t hidden, Rng & rng);
  Var operator()(const Var & x) const { return project(ops::relu(expand(x))); }
};

/// Multi-head attention with separate query and key/value inputs. Key and
/// value inputs may have a different width than the model width.
struct MultiHeadAttention
{
  Linear q;
  Linear k;
  Linear v;
  Linear o;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(
    ParameterSet & params, const std::string & name, std::size_t width, std::size_t kv_width,
    std::size_t heads, Rng & rng);
  Var operator()(
    const Var & query_in, const Var & kv_in, const std::vector<AttentionSegment> & segments) const;
};

/// Post-norm Transformer encoder layer over segmented sequences.
struct EncoderLayer
{
  MultiHeadAttention attn;
  LayerNorm norm1;
  FeedForward ff;
  LayerNorm norm2;

  EncoderLayer() = default;
  EncoderLayer(
    ParameterSet & params, const std::string & name, std::size_t width, std::size_t heads, Rng & rng);
  Var operator()(const Var & x, const std::vector<AttentionSegment> & segments) const;
};

/// Post-norm Transformer decoder layer: self-attention over target segments,
/// cross-attention from targets into memory segments, feed-forward.
struct DecoderLayer
{
  MultiHeadAttention self_attn;
  LayerNorm norm1;
  MultiHeadAttention cross_attn;
  LayerNorm norm2;
  FeedForward ff;
  LayerNorm norm3;

  DecoderLayer() = default;
  DecoderLayer(
    ParameterSet & params, const std::string & name, std::size_t width, std::size_t heads, Rng & rng);
  Var operator()(
    const Var & target, const std::vector<AttentionSegment> & self_segments, const Var & memory,
    const std::vector<AttentionSegment> & cross_segments) const;
};

/// One segment per row: every row attends only to itself.
std::vector<AttentionSegment> diagonal_segments(std::size_t rows);
/// Consecutive equal-length blocks attending within themselves.
std::vector<AttentionSegment> block_segments(std::size_t blocks, std::size_t block_len);

}  // namespace hybridpred::nn

#endif  // HYBRIDPRED__NN_HPP_
