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

#include "hybridpred/optim.hpp"

#include "hybridpred/errors.hpp"

#include <cmath>

namespace hybridpred
{

Adam::Adam(std::vector<Var> params, AdamConfig config)
: params_(std::move(params)), config_(config)
{
  for (const auto & p : params_) {
    m_.push_back(Tensor::zeros(p.value().rows(), p.value().cols()));
    v_.push_back(Tensor::zeros(p.value().rows(), p.value().cols()));
  }
}

double Adam::step()
{
  double sq = 0.0;
  for (auto & p : params_) {
    for (double g : p.mutable_grad().data()) {
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    throw NumericError("Adam: non-finite gradient norm");
  }
  const double clip =
    (config_.max_grad_norm > 0.0 && norm > config_.max_grad_norm) ? config_.max_grad_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k].mutable_value().data();
    const auto g = params_[k].mutable_grad().data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
  return norm;
}

void Adam::zero_grad()
{
  for (auto & p : params_) {
    p.zero_grad();
  }
}

}  // namespace hybridpred
