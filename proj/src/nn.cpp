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

#include "hybridpred/nn.hpp"

#include "hybridpred/errors.hpp"

#include <cmath>

namespace hybridpred::nn
{

Var ParameterSet::add(std::string name, Tensor init)
{
  Var v = parameter(std::move(init));
  entries_.emplace_back(std::move(name), v);
  return v;
}

std::vector<Var> ParameterSet::vars() const
{
  std::vector<Var> out;
  out.reserve(entries_.size());
  for (const auto & e : entries_) {
    out.push_back(e.second);
  }
  return out;
}

std::size_t ParameterSet::scalar_count() const
{
  std::size_t n = 0;
  for (const auto & e : entries_) {
    n += e.second.value().size();
  }
  return n;
}

std::vector<Tensor> ParameterSet::snapshot() const
{
  std::vector<Tensor> out;
  for (const auto & e : entries_) {
    out.push_back(e.second.value());
  }
  return out;
}

void ParameterSet::restore(const std::vector<Tensor> & values)
{
  if (values.size() != entries_.size()) {
    throw ContractError("ParameterSet::restore: count mismatch");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    Var v = entries_[i].second;
    if (!v.value().same_shape(values[i])) {
      throw ContractError("ParameterSet::restore: shape mismatch for " + entries_[i].first);
    }
    v.mutable_value() = values[i];
  }
}

nlohmann::json ParameterSet::to_json() const
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & [name, v] : entries_) {
    arr.push_back(
      {{"name", name},
       {"shape", {v.value().rows(), v.value().cols()}},
       {"data", v.value().storage()}});
  }
  return arr;
}

void ParameterSet::load_json(const nlohmann::json & j)
{
  if (!j.is_array() || j.size() != entries_.size()) {
    throw ValidationError("checkpoint parameter count does not match the model");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto & e = j[i];
    const auto name = e.at("name").get<std::string>();
    if (name != entries_[i].first) {
      throw ValidationError("checkpoint parameter '" + name + "' where '" + entries_[i].first + "' expected");
    }
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    auto data = e.at("data").get<std::vector<double>>();
    Var v = entries_[i].second;
    if (shape.size() != 2 || shape[0] != v.value().rows() || shape[1] != v.value().cols()) {
      throw ValidationError("checkpoint shape mismatch for " + name);
    }
    v.mutable_value() = Tensor({shape[0], shape[1]}, std::move(data));
  }
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng & rng, double gain)
{
  const double a = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor t = Tensor::zeros(fan_in, fan_out);
  for (double & v : t.data()) {
    v = dist(rng);
  }
  return t;
}

Linear::Linear(
  ParameterSet & params, const std::string & name, std::size_t in, std::size_t out, Rng & rng,
  double gain)
: w(params.add(name + ".w", xavier_uniform(in, out, rng, gain))),
  b(params.add(name + ".b", Tensor::zeros(1, out)))
{
}

LayerNorm::LayerNorm(ParameterSet & params, const std::string & name, std::size_t width)
: gamma(params.add(name + ".gamma", Tensor::filled(1, width, 1.0))),
  beta(params.add(name + ".beta", Tensor::zeros(1, width)))
{
}

Mlp::Mlp(
  ParameterSet & params, const std::string & name, const std::vector<std::size_t> & widths, Rng & rng)
{
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(params, name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
  }
}

Var Mlp::operator()(Var x) const
{
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](x);
    if (i + 1 < layers.size()) {
      x = ops::relu(x);
    }
  }
  return x;
}

FeedForward::FeedForward(
  ParameterSet & params, const std::string & name, std::size_t width, std::size_t hidden, Rng & rng)
: expand(params, name + ".expand", width, hidden, rng),
  project(params, name + ".project", hidden, width, rng)
{
}

MultiHeadAttention::MultiHeadAttention(
  ParameterSet & params, const std::string & name, std::size_t width, std::size_t kv_width,
  std::size_t heads_, Rng & rng)
: q(params, name + ".q", width, width, rng),
  k(params, name + ".k", kv_width, width, rng),
  v(params, name + ".v", kv_width, width, rng),
  o(params, name + ".o", width, width, rng),
  heads(heads_)
{
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("MultiHeadAttention: width not divisible by heads");
  }
}

Var MultiHeadAttention::operator()(
  const Var & query_in, const Var & kv_in, const std::vector<AttentionSegment> & segments) const
{
  bool single_key = true;
  for (const auto & s : segments) {
    single_key = single_key && (s.k_end - s.k_begin == 1) && (s.q_end - s.q_begin == 1) &&
                 s.q_begin == s.k_begin;
  }
  Var values = v(kv_in);
  if (single_key && segments.size() == query_in.rows() && query_in.rows() == kv_in.rows()) {
    // Each row attends to exactly one key: the weights are 1, so the output is
    // the value projection and the query/key projections do not contribute.
    return o(values);
  }
  return o(ops::attention(q(query_in), k(kv_in), values, heads, segments));
}

EncoderLayer::EncoderLayer(
  ParameterSet & params, const std::string & name, std::size_t width, std::size_t heads, Rng & rng)
: attn(params, name + ".attn", width, width, heads, rng),
  norm1(params, name + ".norm1", width),
  ff(params, name + ".ff", width, 2 * width, rng),
  norm2(params, name + ".norm2", width)
{
}

Var EncoderLayer::operator()(const Var & x, const std::vector<AttentionSegment> & segments) const
{
  Var h = norm1(ops::add(x, attn(x, x, segments)));
  return norm2(ops::add(h, ff(h)));
}

DecoderLayer::DecoderLayer(
  ParameterSet & params, const std::string & name, std::size_t width, std::size_t heads, Rng & rng)
: self_attn(params, name + ".self_attn", width, width, heads, rng),
  norm1(params, name + ".norm1", width),
  cross_attn(params, name + ".cross_attn", width, width, heads, rng),
  norm2(params, name + ".norm2", width),
  ff(params, name + ".ff", width, 2 * width, rng),
  norm3(params, name + ".norm3", width)
{
}

Var DecoderLayer::operator()(
  const Var & target, const std::vector<AttentionSegment> & self_segments, const Var & memory,
  const std::vector<AttentionSegment> & cross_segments) const
{
  Var h = norm1(ops::add(target, self_attn(target, target, self_segments)));
  h = norm2(ops::add(h, cross_attn(h, memory, cross_segments)));
  return norm3(ops::add(h, ff(h)));
}

std::vector<AttentionSegment> diagonal_segments(std::size_t rows)
{
  std::vector<AttentionSegment> out;
  out.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    out.push_back({i, i + 1, i, i + 1});
  }
  return out;
}

std::vector<AttentionSegment> block_segments(std::size_t blocks, std::size_t block_len)
{
  std::vector<AttentionSegment> out;
  out.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    out.push_back({b * block_len, (b + 1) * block_len, b * block_len, (b + 1) * block_len});
  }
  return out;
}

}  // namespace hybridpred::nn
