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

#include "hybridpred/autodiff.hpp"

#include "hybridpred/errors.hpp"
#include "hybridpred/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_set>
#include <utility>

namespace hybridpred
{

namespace
{

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make_result(Tensor value, std::vector<NodePtr> parents, std::function<void(Node &)> fn)
{
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by forward op, shape " + value.shape_string());
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto & p : parents) {
      needs = needs || p->requires_grad;
    }
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

void require_same_shape(const Var & a, const Var & b, const char * op)
{
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(
      std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
      b.value().shape_string());
  }
}

Tensor like(const Tensor & t) { return Tensor::zeros(t.rows(), t.cols()); }

// Applies an elementwise unary map with a derivative expressed in terms of
// input x and output y.
template <typename F, typename D>
Var unary(const Var & a, F f, D dfdx)
{
  Tensor out = like(a.value());
  const auto in = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    o[i] = f(in[i]);
  }
  return make_result(std::move(out), {a.node()}, [dfdx](Node & self) {
    Node & p = *self.parents[0];
    if (!p.requires_grad) {
      return;
    }
    auto & g = p.grad_buffer();
    const auto x = p.value.data();
    const auto y = self.value.data();
    const auto up = self.grad.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] += up[i] * dfdx(x[i], y[i]);
    }
  });
}

}  // namespace

Tensor & Node::grad_buffer()
{
  if (grad.size() != value.size() || grad.empty()) {
    grad = Tensor::zeros(value.rows(), value.cols());
  }
  return grad;
}

double Var::item() const
{
  if (node_->value.size() != 1) {
    throw ShapeError("item() on tensor of shape " + node_->value.shape_string());
  }
  return node_->value[0];
}

std::size_t Var::backward() const
{
  if (!node_ || node_->value.size() != 1) {
    throw ShapeError("backward() requires a single-element output");
  }
  if (!node_->requires_grad) {
    return 0;
  }
  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto & [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node * p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node * n : order) {
    if (n->backward_fn) {
      n->grad = Tensor::zeros(n->value.rows(), n->value.cols());
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) {
      (*it)->backward_fn(**it);
    }
  }
  return order.size();
}

void Var::zero_grad()
{
  if (node_) {
    node_->grad = Tensor::zeros(node_->value.rows(), node_->value.cols());
  }
}

Var constant(Tensor value)
{
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Tensor value)
{
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->grad_buffer();
  return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_mode_enabled() { return g_grad_enabled; }

namespace ops
{

Var matmul(const Var & a, const Var & b)
{
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError(
      "matmul: inner dimensions differ " + a.value().shape_string() + " x " +
      b.value().shape_string());
  }
  Tensor out = Tensor::zeros(m, n);
  kernels::matmul(a.value().data(), b.value().data(), out.data(), m, k, n);
  return make_result(std::move(out), {a.node(), b.node()}, [m, k, n](Node & self) {
    Node & pa = *self.parents[0];
    Node & pb = *self.parents[1];
    if (pa.requires_grad) {
      kernels::matmul_nt(self.grad.data(), pb.value.data(), pa.grad_buffer().data(), m, n, k, true);
    }
    if (pb.requires_grad) {
      kernels::matmul_tn(pa.value.data(), self.grad.data(), pb.grad_buffer().data(), k, m, n, true);
    }
  });
}

Var matmul_nt(const Var & a, const Var & b)
{
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw ShapeError(
      "matmul_nt: inner dimensions differ " + a.value().shape_string() + " x " +
      b.value().shape_string() + "^T");
  }
  Tensor out = Tensor::zeros(m, n);
  kernels::matmul_nt(a.value().data(), b.value().data(), out.data(), m, k, n);
  return make_result(std::move(out), {a.node(), b.node()}, [m, k, n](Node & self) {
    Node & pa = *self.parents[0];
    Node & pb = *self.parents[1];
    if (pa.requires_grad) {
      kernels::matmul(self.grad.data(), pb.value.data(), pa.grad_buffer().data(), m, n, k, true);
    }
    if (pb.requires_grad) {
      kernels::matmul_tn(self.grad.data(), pa.value.data(), pb.grad_buffer().data(), n, m, k, true);
    }
  });
}

Var transpose(const Var & a)
{
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out(j, i) = a.value()(i, j);
    }
  }
  return make_result(std::move(out), {a.node()}, [r, c](Node & self) {
    Node & p = *self.parents[0];
    auto & g = p.grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        g(i, j) += self.grad(j, i);
      }
    }
  });
}

Var add(const Var & a, const Var & b)
{
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] += bv[i];
  }
  return make_result(std::move(out), {a.node(), b.node()}, [](Node & self) {
    for (auto & p : self.parents) {
      if (!p->requires_grad) {
        continue;
      }
      auto g = p->grad_buffer().data();
      const auto up = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += up[i];
      }
    }
  });
}

Var sub(const Var & a, const Var & b)
{
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] -= bv[i];
  }
  return make_result(std::move(out), {a.node(), b.node()}, [](Node & self) {
    const auto up = self.grad.data();
    for (std::size_t k = 0; k < 2; ++k) {
      Node & p = *self.parents[k];
      if (!p.requires_grad) {
        continue;
      }
      const double sign = k == 0 ? 1.0 : -1.0;
      auto g = p.grad_buffer().data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += sign * up[i];
      }
    }
  });
}

Var mul(const Var & a, const Var & b)
{
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] *= bv[i];
  }
  return make_result(std::move(out), {a.node(), b.node()}, [](Node & self) {
    Node & pa = *self.parents[0];
    Node & pb = *self.parents[1];
    const auto up = self.grad.data();
    if (pa.requires_grad) {
      auto g = pa.grad_buffer().data();
      const auto bv = pb.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += up[i] * bv[i];
      }
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer().data();
      const auto av = pa.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += up[i] * av[i];
      }
    }
  });
}

Var scale(const Var & a, double s)
{
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var & a, double s)
{
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var add_row(const Var & a, const Var & row)
{
  const std::size_t r = a.rows(), c = a.cols();
  if (row.rows() != 1 || row.cols() != c) {
    throw ShapeError(
      "add_row: " + row.value().shape_string() + " is not a row for " + a.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) += row.value()[j];
    }
  }
  return make_result(std::move(out), {a.node(), row.node()}, [r, c](Node & self) {
    Node & pa = *self.parents[0];
    Node & pr = *self.parents[1];
    if (pa.requires_grad) {
      auto g = pa.grad_buffer().data();
      const auto up = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += up[i];
      }
    }
    if (pr.requires_grad) {
      auto & g = pr.grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          g[j] += self.grad(i, j);
        }
      }
    }
  });
}

Var mul_row(const Var & a, const Var & row)
{
  const std::size_t r = a.rows(), c = a.cols();
  if (row.rows() != 1 || row.cols() != c) {
    throw ShapeError(
      "mul_row: " + row.value().shape_string() + " is not a row for " + a.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) *= row.value()[j];
    }
  }
  return make_result(std::move(out), {a.node(), row.node()}, [r, c](Node & self) {
    Node & pa = *self.parents[0];
    Node & pr = *self.parents[1];
    if (pa.requires_grad) {
      auto & g = pa.grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          g(i, j) += self.grad(i, j) * pr.value[j];
        }
      }
    }
    if (pr.requires_grad) {
      auto & g = pr.grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          g[j] += self.grad(i, j) * pa.value(i, j);
        }
      }
    }
  });
}

Var mul_col(const Var & a, const Var & col)
{
  const std::size_t r = a.rows(), c = a.cols();
  if (col.cols() != 1 || col.rows() != r) {
    throw ShapeError(
      "mul_col: " + col.value().shape_string() + " is not a column for " +
      a.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) *= col.value()[i];
    }
  }
  return make_result(std::move(out), {a.node(), col.node()}, [r, c](Node & self) {
    Node & pa = *self.parents[0];
    Node & pc = *self.parents[1];
    if (pa.requires_grad) {
      auto & g = pa.grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          g(i, j) += self.grad(i, j) * pc.value[i];
        }
      }
    }
    if (pc.requires_grad) {
      auto & g = pc.grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          g[i] += self.grad(i, j) * pa.value(i, j);
        }
      }
    }
  });
}

Var concat_cols(const std::vector<Var> & parts)
{
  if (parts.empty()) {
    throw ShapeError("concat_cols: no inputs");
  }
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  std::vector<std::size_t> offsets;
  std::vector<NodePtr> parents;
  for (const auto & p : parts) {
    if (p.rows() != r) {
      throw ShapeError("concat_cols: row counts differ");
    }
    offsets.push_back(c);
    c += p.cols();
    parents.push_back(p.node());
  }
  Tensor out = Tensor::zeros(r, c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor & v = parts[k].value();
    for (std::size_t i = 0; i < r; ++i) {
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + offsets[k]);
    }
  }
  return make_result(std::move(out), std::move(parents), [offsets, r](Node & self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node & p = *self.parents[k];
      if (!p.requires_grad) {
        continue;
      }
      auto & g = p.grad_buffer();
      const std::size_t w = p.value.cols();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          g(i, j) += self.grad(i, offsets[k] + j);
        }
      }
    }
  });
}

Var concat_rows(const std::vector<Var> & parts)
{
  if (parts.empty()) {
    throw ShapeError("concat_rows: no inputs");
  }
  const std::size_t c = parts.front().cols();
  std::size_t r = 0;
  std::vector<std::size_t> offsets;
  std::vector<NodePtr> parents;
  for (const auto & p : parts) {
    if (p.cols() != c) {
      throw ShapeError("concat_rows: column counts differ");
    }
    offsets.push_back(r);
    r += p.rows();
    parents.push_back(p.node());
  }
  Tensor out = Tensor::zeros(r, c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + offsets[k] * c);
  }
  return make_result(std::move(out), std::move(parents), [offsets, c](Node & self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node & p = *self.parents[k];
      if (!p.requires_grad) {
        continue;
      }
      auto g = p.grad_buffer().data();
      const double * up = self.grad.data().data() + offsets[k] * c;
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += up[i];
      }
    }
  });
}

Var slice_cols(const Var & a, std::size_t begin, std::size_t count)
{
  const std::size_t r = a.rows();
  if (begin + count > a.cols()) {
    throw ShapeError("slice_cols: range out of bounds");
  }
  Tensor out = Tensor::zeros(r, count);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      out(i, j) = a.value()(i, begin + j);
    }
  }
  return make_result(std::move(out), {a.node()}, [r, begin, count](Node & self) {
    auto & g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < count; ++j) {
        g(i, begin + j) += self.grad(i, j);
      }
    }
  });
}

Var slice_rows(const Var & a, std::size_t begin, std::size_t count)
{
  const std::size_t c = a.cols();
  if (begin + count > a.rows()) {
    throw ShapeError("slice_rows: range out of bounds");
  }
  const auto src = a.value().data();
  Tensor out({count, c}, std::vector<double>(src.begin() + begin * c, src.begin() + (begin + count) * c));
  return make_result(std::move(out), {a.node()}, [begin, c](Node & self) {
    auto g = self.parents[0]->grad_buffer().data();
    const auto up = self.grad.data();
    for (std::size_t i = 0; i < up.size(); ++i) {
      g[begin * c + i] += up[i];
    }
  });
}

Var gather_rows(const Var & a, const std::vector<std::size_t> & index)
{
  const std::size_t c = a.cols();
  Tensor out = Tensor::zeros(index.size(), c);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.rows()) {
      throw ShapeError("gather_rows: index out of bounds");
    }
    const auto src = a.value().row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return make_result(std::move(out), {a.node()}, [index, c](Node & self) {
    auto & g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < index.size(); ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        g(index[i], j) += self.grad(i, j);
      }
    }
  });
}

Var reshape(const Var & a, std::size_t rows, std::size_t cols)
{
  if (rows * cols != a.value().size()) {
    throw ShapeError("reshape: element count differs");
  }
  Tensor out({rows, cols}, a.value().storage());
  return make_result(std::move(out), {a.node()}, [](Node & self) {
    auto g = self.parents[0]->grad_buffer().data();
    const auto up = self.grad.data();
    for (std::size_t i = 0; i < up.size(); ++i) {
      g[i] += up[i];
    }
  });
}

Var relu(const Var & a)
{
  return unary(
    a, [](double x) { return x > 0.0 ? x : 0.0; },
    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(const Var & a)
{
  return unary(
    a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(const Var & a)
{
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(const Var & a)
{
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(const Var & a, double lo, double hi)
{
  return unary(
    a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
    [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var minimum(const Var & a, const Var & b)
{
  require_same_shape(a, b, "minimum");
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = std::min(o[i], bv[i]);
  }
  return make_result(std::move(out), {a.node(), b.node()}, [](Node & self) {
    Node & pa = *self.parents[0];
    Node & pb = *self.parents[1];
    const auto av = pa.value.data();
    const auto bv = pb.value.data();
    const auto up = self.grad.data();
    for (std::size_t i = 0; i < up.size(); ++i) {
      const bool pick_a = av[i] <= bv[i];
      if (pick_a && pa.requires_grad) {
        pa.grad_buffer()[i] += up[i];
      } else if (!pick_a && pb.requires_grad) {
        pb.grad_buffer()[i] += up[i];
      }
    }
  });
}

Var softmax(const Var & a, int axis)
{
  if (axis != 0 && axis != 1) {
    throw ShapeError("softmax: axis must be 0 or 1");
  }
  const std::size_t r = a.rows(), c = a.cols();
  // Lines are rows for axis 1 and columns for axis 0.
  const std::size_t lines = axis == 1 ? r : c;
  const std::size_t len = axis == 1 ? c : r;
  const std::size_t stride = axis == 1 ? 1 : c;
  const std::size_t line_step = axis == 1 ? c : 1;
  Tensor out = a.value();
  auto o = out.data();
  for (std::size_t l = 0; l < lines; ++l) {
    double * base = o.data() + l * line_step;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) {
      mx = std::max(mx, base[i * stride]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      base[i * stride] = std::exp(base[i * stride] - mx);
      total += base[i * stride];
    }
    for (std::size_t i = 0; i < len; ++i) {
      base[i * stride] /= total;
    }
  }
  return make_result(
    std::move(out), {a.node()}, [lines, len, stride, line_step](Node & self) {
      auto g = self.parents[0]->grad_buffer().data();
      const auto y = self.value.data();
      const auto up = self.grad.data();
      for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t base = l * line_step;
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          dot += up[base + i * stride] * y[base + i * stride];
        }
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t idx = base + i * stride;
          g[idx] += y[idx] * (up[idx] - dot);
        }
      }
    });
}

Var log_softmax_rows(const Var & a)
{
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = a.value();
  for (std::size_t i = 0; i < r; ++i) {
    auto row = out.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) {
      total += std::exp(v - mx);
    }
    const double lse = mx + std::log(total);
    for (double & v : row) {
      v -= lse;
    }
  }
  return make_result(std::move(out), {a.node()}, [r, c](Node & self) {
    auto & g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        total += self.grad(i, j);
      }
      for (std::size_t j = 0; j < c; ++j) {
        g(i, j) += self.grad(i, j) - std::exp(self.value(i, j)) * total;
      }
    }
  });
}

Var layer_norm(const Var & a, const Var & gamma, const Var & beta, double eps)
{
  const std::size_t r = a.rows(), c = a.cols();
  if (gamma.cols() != c || beta.cols() != c || gamma.rows() != 1 || beta.rows() != 1) {
    throw ShapeError("layer_norm: gamma/beta must be 1 x " + std::to_string(c));
  }
  Tensor normalized = Tensor::zeros(r, c);
  std::vector<double> inv_std(r);
  Tensor out = Tensor::zeros(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const auto x = a.value().row(i);
    double mu = 0.0;
    for (double v : x) {
      mu += v;
    }
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (double v : x) {
      var += (v - mu) * (v - mu);
    }
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      normalized(i, j) = (x[j] - mu) * inv_std[i];
      out(i, j) = normalized(i, j) * gamma.value()[j] + beta.value()[j];
    }
  }
  return make_result(
    std::move(out), {a.node(), gamma.node(), beta.node()},
    [r, c, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node & self) {
      Node & px = *self.parents[0];
      Node & pg = *self.parents[1];
      Node & pb = *self.parents[2];
      if (pg.requires_grad || pb.requires_grad) {
        auto & gg = pg.grad_buffer();
        auto & gb = pb.grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            gg[j] += self.grad(i, j) * normalized(i, j);
            gb[j] += self.grad(i, j);
          }
        }
      }
      if (!px.requires_grad) {
        return;
      }
      auto & gx = px.grad_buffer();
      std::vector<double> dxhat(c);
      for (std::size_t i = 0; i < r; ++i) {
        double mean_d = 0.0, mean_dx = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          dxhat[j] = self.grad(i, j) * pg.value[j];
          mean_d += dxhat[j];
          mean_dx += dxhat[j] * normalized(i, j);
        }
        mean_d /= static_cast<double>(c);
        mean_dx /= static_cast<double>(c);
        for (std::size_t j = 0; j < c; ++j) {
          gx(i, j) += inv_std[i] * (dxhat[j] - mean_d - normalized(i, j) * mean_dx);
        }
      }
    });
}

Var sum(const Var & a)
{
  double total = 0.0;
  for (double v : a.value().data()) {
    total += v;
  }
  return make_result(Tensor({1, 1}, total), {a.node()}, [](Node & self) {
    auto g = self.parents[0]->grad_buffer().data();
    const double up = self.grad[0];
    for (double & v : g) {
      v += up;
    }
  });
}

Var mean(const Var & a)
{
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var mean_rows(const Var & a)
{
  const std::size_t r = a.rows(), c = a.cols();
  if (r == 0) {
    throw ShapeError("mean_rows: no rows");
  }
  Tensor out = Tensor::zeros(1, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out[j] += a.value()(i, j);
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    out[j] /= static_cast<double>(r);
  }
  return make_result(std::move(out), {a.node()}, [r, c](Node & self) {
    auto & g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        g(i, j) += self.grad[j] / static_cast<double>(r);
      }
    }
  });
}

Var sum_cols(const Var & a)
{
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out[i] += a.value()(i, j);
    }
  }
  return make_result(std::move(out), {a.node()}, [r, c](Node & self) {
    auto & g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        g(i, j) += self.grad[i];
      }
    }
  });
}

Var linear(const Var & x, const Var & w, const Var & b)
{
  const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
  if (w.rows() != k || b.rows() != 1 || b.cols() != n) {
    throw ShapeError(
      "linear: " + x.value().shape_string() + " * " + w.value().shape_string() + " + " +
      b.value().shape_string());
  }
  Tensor out = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(b.value().data().begin(), b.value().data().end(), out.row(i).begin());
  }
  kernels::matmul(x.value().data(), w.value().data(), out.data(), m, k, n, true);
  return make_result(std::move(out), {x.node(), w.node(), b.node()}, [m, k, n](Node & self) {
    Node & px = *self.parents[0];
    Node & pw = *self.parents[1];
    Node & pb = *self.parents[2];
    if (px.requires_grad) {
      kernels::matmul_nt(self.grad.data(), pw.value.data(), px.grad_buffer().data(), m, n, k, true);
    }
    if (pw.requires_grad) {
      kernels::matmul_tn(px.value.data(), self.grad.data(), pw.grad_buffer().data(), k, m, n, true);
    }
    if (pb.requires_grad) {
      auto & g = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          g[j] += self.grad(i, j);
        }
      }
    }
  });
}

Var attention(
  const Var & q, const Var & k, const Var & v, std::size_t heads,
  const std::vector<AttentionSegment> & segments)
{
  const std::size_t nq = q.rows(), dq = q.cols(), nk = k.rows(), dv = v.cols();
  if (k.cols() != dq) {
    throw ShapeError("attention: query/key widths differ");
  }
  if (v.rows() != nk) {
    throw ShapeError("attention: key/value row counts differ");
  }
  if (heads == 0 || dq % heads != 0 || dv % heads != 0) {
    throw ShapeError("attention: widths not divisible by head count");
  }
  for (const auto & s : segments) {
    if (s.q_begin > s.q_end || s.q_end > nq || s.k_begin > s.k_end || s.k_end > nk) {
      throw ShapeError("attention: segment out of bounds");
    }
  }
  const std::size_t hq = dq / heads, hv = dv / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hq));
  const Tensor & Q = q.value();
  const Tensor & K = k.value();
  const Tensor & V = v.value();

  // Attention weights for every (segment, head), stored contiguously.
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto & s : segments) {
    offsets.push_back(total);
    total += heads * (s.q_end - s.q_begin) * (s.k_end - s.k_begin);
  }
  std::vector<double> probs(total);
  Tensor out = Tensor::zeros(nq, dv);
  for (std::size_t si = 0; si < segments.size(); ++si) {
    const auto & s = segments[si];
    const std::size_t L = s.q_end - s.q_begin, M = s.k_end - s.k_begin;
    if (M == 0) {
      continue;
    }
    for (std::size_t h = 0; h < heads; ++h) {
      double * P = probs.data() + offsets[si] + h * L * M;
      for (std::size_t i = 0; i < L; ++i) {
        const double * qi = Q.ptr(s.q_begin + i, h * hq);
        double * pi = P + i * M;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < M; ++j) {
          const double * kj = K.ptr(s.k_begin + j, h * hq);
          double acc = 0.0;
          for (std::size_t c = 0; c < hq; ++c) {
            acc += qi[c] * kj[c];
          }
          pi[j] = acc * scale;
          mx = std::max(mx, pi[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
          pi[j] = std::exp(pi[j] - mx);
          z += pi[j];
        }
        double * oi = out.ptr(s.q_begin + i, h * hv);
        for (std::size_t j = 0; j < M; ++j) {
          pi[j] /= z;
          const double * vj = V.ptr(s.k_begin + j, h * hv);
          for (std::size_t c = 0; c < hv; ++c) {
            oi[c] += pi[j] * vj[c];
          }
        }
      }
    }
  }
  return make_result(
    std::move(out), {q.node(), k.node(), v.node()},
    [segments, offsets, probs = std::move(probs), heads, hq, hv, scale](Node & self) {
      Node & pq = *self.parents[0];
      Node & pk = *self.parents[1];
      Node & pv = *self.parents[2];
      const Tensor & Q = pq.value;
      const Tensor & K = pk.value;
      const Tensor & V = pv.value;
      Tensor * gq = pq.requires_grad ? &pq.grad_buffer() : nullptr;
      Tensor * gk = pk.requires_grad ? &pk.grad_buffer() : nullptr;
      Tensor * gv = pv.requires_grad ? &pv.grad_buffer() : nullptr;
      std::vector<double> dS;
      for (std::size_t si = 0; si < segments.size(); ++si) {
        const auto & s = segments[si];
        const std::size_t L = s.q_end - s.q_begin, M = s.k_end - s.k_begin;
        if (M == 0) {
          continue;
        }
        dS.assign(L * M, 0.0);
        for (std::size_t h = 0; h < heads; ++h) {
          const double * P = probs.data() + offsets[si] + h * L * M;
          for (std::size_t i = 0; i < L; ++i) {
            const double * doi = self.grad.ptr(s.q_begin + i, h * hv);
            double row_dot = 0.0;
            for (std::size_t j = 0; j < M; ++j) {
              const double * vj = V.ptr(s.k_begin + j, h * hv);
              double dp = 0.0;
              for (std::size_t c = 0; c < hv; ++c) {
                dp += doi[c] * vj[c];
              }
              dS[i * M + j] = dp;
              row_dot += dp * P[i * M + j];
              if (gv) {
                double * gvj = gv->ptr(s.k_begin + j, h * hv);
                for (std::size_t c = 0; c < hv; ++c) {
                  gvj[c] += P[i * M + j] * doi[c];
                }
              }
            }
            for (std::size_t j = 0; j < M; ++j) {
              dS[i * M + j] = P[i * M + j] * (dS[i * M + j] - row_dot) * scale;
            }
          }
          for (std::size_t i = 0; i < L; ++i) {
            for (std::size_t j = 0; j < M; ++j) {
              const double d = dS[i * M + j];
              if (gq) {
                double * gqi = gq->ptr(s.q_begin + i, h * hq);
                const double * kj = K.ptr(s.k_begin + j, h * hq);
                for (std::size_t c = 0; c < hq; ++c) {
                  gqi[c] += d * kj[c];
                }
              }
              if (gk) {
                double * gkj = gk->ptr(s.k_begin + j, h * hq);
                const double * qi = Q.ptr(s.q_begin + i, h * hq);
                for (std::size_t c = 0; c < hq; ++c) {
                  gkj[c] += d * qi[c];
                }
              }
            }
          }
        }
      }
    });
}

Var attention(const Var & q, const Var & k, const Var & v)
{
  return attention(q, k, v, 1, {AttentionSegment{0, q.rows(), 0, k.rows()}});
}

Var gaussian_log_density(const Var & x, const Var & mean, const Var & log_std)
{
  require_same_shape(x, mean, "gaussian_log_density");
  require_same_shape(x, log_std, "gaussian_log_density");
  const std::size_t r = x.rows(), c = x.cols();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Tensor out = Tensor::zeros(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double z = (x.value()(i, j) - mean.value()(i, j)) * std::exp(-log_std.value()(i, j));
      out[i] += -0.5 * z * z - log_std.value()(i, j) - half_log_2pi;
    }
  }
  return make_result(
    std::move(out), {x.node(), mean.node(), log_std.node()}, [r, c](Node & self) {
      Node & px = *self.parents[0];
      Node & pm = *self.parents[1];
      Node & ps = *self.parents[2];
      for (std::size_t i = 0; i < r; ++i) {
        const double up = self.grad[i];
        for (std::size_t j = 0; j < c; ++j) {
          const double inv_std = std::exp(-ps.value(i, j));
          const double z = (px.value(i, j) - pm.value(i, j)) * inv_std;
          if (px.requires_grad) {
            px.grad_buffer()(i, j) -= up * z * inv_std;
          }
          if (pm.requires_grad) {
            pm.grad_buffer()(i, j) += up * z * inv_std;
          }
          if (ps.requires_grad) {
            ps.grad_buffer()(i, j) += up * (z * z - 1.0);
          }
        }
      }
    });
}

Var smooth_l1(const Var & pred, const Var & target, double beta)
{
  require_same_shape(pred, target, "smooth_l1");
  const auto p = pred.value().data();
  const auto t = target.value().data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::abs(p[i] - t[i]);
    total += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
  }
  return make_result(
    Tensor({1, 1}, total), {pred.node(), target.node()}, [beta](Node & self) {
      Node & pp = *self.parents[0];
      Node & pt = *self.parents[1];
      const double up = self.grad[0];
      const auto p = pp.value.data();
      const auto t = pt.value.data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        const double g = std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : -1.0);
        if (pp.requires_grad) {
          pp.grad_buffer()[i] += up * g;
        }
        if (pt.requires_grad) {
          pt.grad_buffer()[i] -= up * g;
        }
      }
    });
}

}  // namespace ops
}  // namespace hybridpred
