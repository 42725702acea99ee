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

#ifndef HYBRIDPRED__TENSOR_HPP_
#define HYBRIDPRED__TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hybridpred
{

/// Dense row-major tensor of doubles. All numeric ops in the library work on
/// rank-1 or rank-2 tensors; a rank-1 tensor of length n behaves as a 1 x n
/// row vector.
class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor filled(std::size_t rows, std::size_t cols, double v) { return Tensor({rows, cols}, v); }
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row_vector(std::vector<double> values);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t> & shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool empty() const { return data_.empty(); }

  double & operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double * ptr(std::size_t r, std::size_t c) { return data_.data() + r * cols() + c; }
  const double * ptr(std::size_t r, std::size_t c) const { return data_.data() + r * cols() + c; }
  double & operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double> & storage() { return data_; }
  const std::vector<double> & storage() const { return data_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  bool all_finite() const;
  bool same_shape(const Tensor & other) const;
  void fill(double v);

  bool operator==(const Tensor & other) const = default;

  std::string shape_string() const;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace hybridpred

#endif  // HYBRIDPRED__TENSOR_HPP_
