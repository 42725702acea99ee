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

#ifndef HYBRIDPRED__KERNELS_HPP_
#define HYBRIDPRED__KERNELS_HPP_

#include <cstddef>
#include <span>

/// Dense inner loops used by the autodiff engine.
///
/// Every kernel comes in two flavours: a plain serial reference and an
/// OpenMP version that splits work over output rows. Each output element is
/// produced by exactly one thread with the same summation order as the
/// serial version, so both are bit-identical. `dispatch` variants pick the
/// parallel path only above a work threshold.
namespace hybridpred::kernels
{

// C[m x n] (+)= A[m x k] * B[k x n]
void matmul_serial(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);
void matmul_parallel(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);
void matmul(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);

// C[m x n] (+)= A[m x k] * B[n x k]^T
void matmul_nt_serial(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt_parallel(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);

// C[m x n] (+)= A[k x m]^T * B[k x n]
void matmul_tn_serial(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn_parallel(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate = false);

/// Multiply-add count above which the dispatchers go parallel.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

int max_threads();

}  // namespace hybridpred::kernels

#endif  // HYBRIDPRED__KERNELS_HPP_
