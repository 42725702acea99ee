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

#include "hybridpred/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>

namespace hybridpred::kernels
{

namespace
{

inline void matmul_row(
  const double * a, const double * b, double * c, std::size_t k, std::size_t n)
{
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p];
    const double * brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) {
      c[j] += av * brow[j];
    }
  }
}

inline void matmul_nt_row(
  const double * a, const double * b, double * c, std::size_t k, std::size_t n)
{
  for (std::size_t j = 0; j < n; ++j) {
    const double * brow = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      acc += a[p] * brow[p];
    }
    c[j] += acc;
  }
}

inline void matmul_tn_row(
  const double * a, const double * b, double * c, std::size_t i, std::size_t m, std::size_t k,
  std::size_t n)
{
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double * brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) {
      c[j] += av * brow[j];
    }
  }
}

}  // namespace

void matmul_serial(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  if (!accumulate) {
    std::fill(c.begin(), c.end(), 0.0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    matmul_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
  }
}

void matmul_parallel(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double * crow = c.data() + i * n;
    if (!accumulate) {
      std::fill(crow, crow + n, 0.0);
    }
    matmul_row(a.data() + i * k, b.data(), crow, k, n);
  }
}

void matmul(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  if (m > 1 && m * k * n >= kParallelThreshold && max_threads() > 1) {
    matmul_parallel(a, b, c, m, k, n, accumulate);
  } else {
    matmul_serial(a, b, c, m, k, n, accumulate);
  }
}

void matmul_nt_serial(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  if (!accumulate) {
    std::fill(c.begin(), c.end(), 0.0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    matmul_nt_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
  }
}

void matmul_nt_parallel(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double * crow = c.data() + i * n;
    if (!accumulate) {
      std::fill(crow, crow + n, 0.0);
    }
    matmul_nt_row(a.data() + i * k, b.data(), crow, k, n);
  }
}

void matmul_nt(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  if (m > 1 && m * k * n >= kParallelThreshold && max_threads() > 1) {
    matmul_nt_parallel(a, b, c, m, k, n, accumulate);
  } else {
    matmul_nt_serial(a, b, c, m, k, n, accumulate);
  }
}

void matmul_tn_serial(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  if (!accumulate) {
    std::fill(c.begin(), c.end(), 0.0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    matmul_tn_row(a.data(), b.data(), c.data() + i * n, i, m, k, n);
  }
}

void matmul_tn_parallel(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double * crow = c.data() + i * n;
    if (!accumulate) {
      std::fill(crow, crow + n, 0.0);
    }
    matmul_tn_row(a.data(), b.data(), crow, static_cast<std::size_t>(i), m, k, n);
  }
}

void matmul_tn(
  std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
  std::size_t k, std::size_t n, bool accumulate)
{
  if (m > 1 && m * k * n >= kParallelThreshold && max_threads() > 1) {
    matmul_tn_parallel(a, b, c, m, k, n, accumulate);
  } else {
    matmul_tn_serial(a, b, c, m, k, n, accumulate);
  }
}

int max_threads()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hybridpred::kernels
