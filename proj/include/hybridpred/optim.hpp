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

#ifndef HYBRIDPRED__OPTIM_HPP_
#define HYBRIDPRED__OPTIM_HPP_

#include "hybridpred/autodiff.hpp"

#include <vector>

namespace hybridpred
{

struct AdamConfig
{
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double max_grad_norm = 0.0;
};

/// Adam with bias-corrected first and second moments.
class Adam
{
public:
  Adam(std::vector<Var> params, AdamConfig config);

  /// Applies one update from the accumulated gradients. Returns the gradient
  /// norm before clipping.
  double step();
  void zero_grad();

  std::size_t steps() const { return t_; }
  const AdamConfig & config() const { return config_; }

private:
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamConfig config_;
  std::size_t t_ = 0;
};

}  // namespace hybridpred

#endif  // HYBRIDPRED__OPTIM_HPP_
