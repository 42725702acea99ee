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

#include "hybridpred/tensor.hpp"

#include "hybridpred/errors.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace hybridpred
{

namespace
{
std::size_t product(const std::vector<std::size_t> & shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
: shape_(std::move(shape)), data_(product(shape_), fill)
{
  if (shape_.empty() || shape_.size() > 2) {
    throw ShapeError("tensor rank must be 1 or 2");
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
: shape_(std::move(shape)), data_(std::move(data))
{
  if (shape_.empty() || shape_.size() > 2) {
    throw ShapeError("tensor rank must be 1 or 2");
  }
  if (product(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string() + " does not match " + std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows)
{
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto & row : rows) {
    if (row.size() != c) {
      throw ShapeError("ragged rows in Tensor::from_rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::row_vector(std::vector<double> values)
{
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::identity(std::size_t n)
{
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    t(i, i) = 1.0;
  }
  return t;
}

std::size_t Tensor::rows() const
{
  if (shape_.size() == 2) {
    return shape_[0];
  }
  return shape_.empty() ? 0 : 1;
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

bool Tensor::all_finite() const
{
  for (double v : data_) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

bool Tensor::same_shape(const Tensor & other) const
{
  return rows() == other.rows() && cols() == other.cols();
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_string() const
{
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    os << (i ? "x" : "") << shape_[i];
  }
  os << ')';
  return os.str();
}

}  // namespace hybridpred
