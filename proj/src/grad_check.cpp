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

#include "hybridpred/grad_check.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hybridpred
{

namespace
{
double evaluate(const ScalarFn & f, const std::vector<Tensor> & inputs)
{
  NoGradGuard guard;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto & t : inputs) {
    vars.push_back(constant(t));
  }
  const double v = f(vars).item();
  if (!std::isfinite(v)) {
    throw NumericError("grad_check: non-finite function value");
  }
  return v;
}

void update(GradCheckReport & report, double a, double n)
{
  if (!std::isfinite(a) || !std::isfinite(n)) {
    throw NumericError("grad_check: non-finite gradient");
  }
  const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), kGradCheckFloor});
  report.max_rel_error = std::max(report.max_rel_error, err);
  ++report.entries;
}
}  // namespace

Tensor numeric_gradient(const ScalarFn & f, std::vector<Tensor> inputs, std::size_t which, double eps)
{
  if (eps <= 0.0) {
    throw ContractError("grad_check: eps must be positive");
  }
  Tensor grad = Tensor::zeros(inputs[which].rows(), inputs[which].cols());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double orig = inputs[which][i];
    inputs[which][i] = orig + eps;
    const double up = evaluate(f, inputs);
    inputs[which][i] = orig - eps;
    const double down = evaluate(f, inputs);
    inputs[which][i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const Tensor & analytic, const Tensor & numeric)
{
  if (analytic.size() != numeric.size()) {
    throw ShapeError("max_relative_error: size mismatch");
  }
  GradCheckReport r;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    update(r, analytic[i], numeric[i]);
  }
  return r.max_rel_error;
}

GradCheckReport grad_check(
  const ScalarFn & f, const std::vector<Tensor> & inputs, double eps, double tol,
  const std::function<void(Tensor &)> & corrupt)
{
  std::vector<Var> leaves;
  for (const auto & t : inputs) {
    leaves.push_back(parameter(t));
  }
  f(leaves).backward();
  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor analytic = leaves[k].grad();
    if (corrupt) {
      corrupt(analytic);
    }
    const Tensor numeric = numeric_gradient(f, inputs, k, eps);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      update(report, analytic[i], numeric[i]);
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

GradCheckReport grad_check(
  const std::function<Var(const Var &)> & f, const Tensor & x, double eps, double tol)
{
  return grad_check([&f](const std::vector<Var> & v) { return f(v[0]); }, {x}, eps, tol);
}

GradCheckReport grad_check_parameters(
  const std::function<Var()> & loss, const std::vector<Var> & params, double eps, double tol,
  std::size_t max_entries)
{
  if (eps <= 0.0) {
    throw ContractError("grad_check: eps must be positive");
  }
  for (auto p : params) {
    p.zero_grad();
  }
  loss().backward();
  std::vector<Tensor> analytic;
  for (const auto & p : params) {
    analytic.push_back(p.grad());
  }
  auto eval = [&loss]() {
    NoGradGuard guard;
    const double v = loss().item();
    if (!std::isfinite(v)) {
      throw NumericError("grad_check: non-finite loss");
    }
    return v;
  };
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Var p = params[k];
    Tensor & value = p.mutable_value();
    const std::size_t n = value.size();
    const std::size_t stride = (max_entries == 0 || n <= max_entries) ? 1 : n / max_entries;
    for (std::size_t i = 0; i < n; i += stride) {
      const double orig = value[i];
      value[i] = orig + eps;
      const double up = eval();
      value[i] = orig - eps;
      const double down = eval();
      value[i] = orig;
      update(report, analytic[k][i], (up - down) / (2.0 * eps));
    }
  }
  for (auto p : params) {
    p.zero_grad();
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace hybridpred
