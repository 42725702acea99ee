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

#ifndef HYBRIDPRED__GRAD_CHECK_HPP_
#define HYBRIDPRED__GRAD_CHECK_HPP_

#include "hybridpred/autodiff.hpp"

#include <functional>
#include <vector>

namespace hybridpred
{

/// Denominator floor in the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-3;

struct GradCheckReport
{
  bool passed = false;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

using ScalarFn = std::function<Var(const std::vector<Var> &)>;

/// Central-difference gradient of a scalar function w.r.t. input `which`.
Tensor numeric_gradient(const ScalarFn & f, std::vector<Tensor> inputs, std::size_t which, double eps);

double max_relative_error(const Tensor & analytic, const Tensor & numeric);

/// Compares backward() against central differences for every input.
/// `corrupt`, when set, is applied to each analytic gradient before the
/// comparison (used for negative controls).
GradCheckReport grad_check(
  const ScalarFn & f, const std::vector<Tensor> & inputs, double eps = 1e-6, double tol = 1e-4,
  const std::function<void(Tensor &)> & corrupt = {});

GradCheckReport grad_check(
  const std::function<Var(const Var &)> & f, const Tensor & x, double eps = 1e-6,
  double tol = 1e-4);

/// Same check over parameter leaves of an existing model. `loss` must rebuild
/// the graph on every call. At most `max_entries` coordinates per parameter
/// are probed (evenly strided) to bound the cost on larger models.
GradCheckReport grad_check_parameters(
  const std::function<Var()> & loss, const std::vector<Var> & params, double eps = 1e-6,
  double tol = 1e-4, std::size_t max_entries = 0);

}  // namespace hybridpred

#endif  // HYBRIDPRED__GRAD_CHECK_HPP_
