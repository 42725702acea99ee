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

#ifndef HYBRIDPRED__KINEMATICS_HPP_
#define HYBRIDPRED__KINEMATICS_HPP_

#include "hybridpred/geometry.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <random>

namespace hybridpred
{

struct VehicleParams
{
  double wheelbase = 2.8;
  double max_steer = 0.6;
  double max_speed = 20.0;
  /// Per-step bounds on the action increments.
  double max_steer_increment = 0.05;
  double max_speed_increment = 0.8;
  double dt = 0.1;

  nlohmann::json to_json() const;
  static VehicleParams from_json(const nlohmann::json & j, VehicleParams base);
};

struct VehicleState
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double delta = 0.0;
  double a_long = 0.0;
  double yaw_rate = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const VehicleState &) const = default;
};

struct Action
{
  double d_delta = 0.0;
  double d_v = 0.0;
};

/// Clamps both increments to their per-step bounds.
Action clamp_action(const Action & a, const VehicleParams & p);

/// One forward-Euler step of the single-track model. The increments and the
/// resulting steering angle and speed are clamped, then the position moves
/// with the new speed along the old heading. a_long is the realised speed
/// change over dt. Throws NumericError on non-finite input.
VehicleState step(const VehicleState & s, const Action & a, double dt, const VehicleParams & p);

/// Direct positional action: displacement (ds, dd) in the vehicle frame,
/// clamped to |d| <= v_max dt. Speed, heading and an implied steering angle
/// are read off the displacement.
VehicleState step_direct(const VehicleState & s, const Vec2 & local_displacement, double dt, const VehicleParams & p);

struct SampledAction
{
  std::array<double, 2> raw{};
  std::array<double, 2> clamped{};
  /// Log-density of `raw` under the sampling Gaussian.
  double log_prob = 0.0;
};

/// Diagonal Gaussian sample clamped to [-bound, bound] per dimension.
SampledAction sample_action(
  const std::array<double, 2> & mean, const std::array<double, 2> & std,
  const std::array<double, 2> & bound, std::mt19937_64 & rng);

double gaussian_log_prob(
  const std::array<double, 2> & x, const std::array<double, 2> & mean, const std::array<double, 2> & std);

}  // namespace hybridpred

#endif  // HYBRIDPRED__KINEMATICS_HPP_
