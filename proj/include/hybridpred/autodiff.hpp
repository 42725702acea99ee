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

#ifndef HYBRIDPRED__AUTODIFF_HPP_
#define HYBRIDPRED__AUTODIFF_HPP_

#include "hybridpred/tensor.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace hybridpred
{

struct Node
{
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward_fn;

  Tensor & grad_buffer();
};

/// Handle to a value in a reverse-mode computation graph. Copies share the
/// node. A graph is confined to the thread that built it; parameter leaves may
/// be read concurrently as long as no thread runs backward.
class Var
{
public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor & value() const { return node_->value; }
  Tensor & mutable_value() { return node_->value; }
  const Tensor & grad() const { return node_->grad; }
  Tensor & mutable_grad() { return node_->grad_buffer(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  double item() const;

  const std::shared_ptr<Node> & node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  /// Seeds d(self)/d(self) = 1 (self must hold one element) and propagates to
  /// every ancestor in reverse topological order. Returns the number of nodes
  /// visited.
  std::size_t backward() const;
  void zero_grad();

private:
  std::shared_ptr<Node> node_;
};

/// Leaf that never receives gradient.
Var constant(Tensor value);
/// Leaf that accumulates gradient across backward calls until zero_grad().
Var parameter(Tensor value);

/// Disables graph recording on the current thread while alive.
class NoGradGuard
{
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard & operator=(const NoGradGuard &) = delete;

private:
  bool previous_;
};

bool grad_mode_enabled();

/// Segment of an attention batch: query rows [q_begin, q_end) attend over
/// key/value rows [k_begin, k_end).
struct AttentionSegment
{
  std::size_t q_begin, q_end, k_begin, k_end;
};

namespace ops
{

Var matmul(const Var & a, const Var & b);
/// a * b^T
Var matmul_nt(const Var & a, const Var & b);
Var transpose(const Var & a);

Var add(const Var & a, const Var & b);
Var sub(const Var & a, const Var & b);
Var mul(const Var & a, const Var & b);
Var scale(const Var & a, double s);
Var add_scalar(const Var & a, double s);
/// Adds a 1 x c row to every row of a (r x c).
Var add_row(const Var & a, const Var & row);
/// Multiplies every row of a (r x c) elementwise by a 1 x c row.
Var mul_row(const Var & a, const Var & row);
/// Multiplies every column of a (r x c) by an r x 1 column.
Var mul_col(const Var & a, const Var & col);

Var concat_cols(const std::vector<Var> & parts);
Var concat_rows(const std::vector<Var> & parts);
Var slice_cols(const Var & a, std::size_t begin, std::size_t count);
Var slice_rows(const Var & a, std::size_t begin, std::size_t count);
Var gather_rows(const Var & a, const std::vector<std::size_t> & index);
Var reshape(const Var & a, std::size_t rows, std::size_t cols);

Var relu(const Var & a);
Var tanh(const Var & a);
Var exp(const Var & a);
Var square(const Var & a);
/// Clamps values into [lo, hi]; gradient is zero where clamped.
Var clamp(const Var & a, double lo, double hi);
Var minimum(const Var & a, const Var & b);

/// Softmax along axis 0 (columns) or 1 (rows).
Var softmax(const Var & a, int axis = 1);
Var log_softmax_rows(const Var & a);
Var layer_norm(const Var & a, const Var & gamma, const Var & beta, double eps = 1e-5);

Var sum(const Var & a);
Var mean(const Var & a);
/// r x c -> 1 x c column means.
Var mean_rows(const Var & a);
/// r x c -> r x 1 row sums.
Var sum_cols(const Var & a);

/// x W + b with x (r x in), W (in x out), b (1 x out).
Var linear(const Var & x, const Var & w, const Var & b);

/// Scaled dot-product attention, softmax(Q K^T / sqrt(d_k)) V, evaluated per
/// segment and per head. Head h uses column block h of Q/K and of V. Query
/// rows whose segment has no keys produce zero rows.
Var attention(
  const Var & q, const Var & k, const Var & v, std::size_t heads,
  const std::vector<AttentionSegment> & segments);
/// Single segment, single head.
Var attention(const Var & q, const Var & k, const Var & v);

/// Row-wise diagonal Gaussian log-density: x, mean, log_std are r x c; the
/// result is r x 1.
Var gaussian_log_density(const Var & x, const Var & mean, const Var & log_std);
Var smooth_l1(const Var & pred, const Var & target, double beta = 1.0);

}  // namespace ops
}  // namespace hybridpred

#endif  // HYBRIDPRED__AUTODIFF_HPP_
