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

#include "hybridpred/kinematics.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hybridpred
{

nlohmann::json VehicleParams::to_json() const
{
  return {
    {"wheelbase", wheelbase},
    {"max_steer", max_steer},
    {"max_speed", max_speed},
    {"max_steer_increment", max_steer_increment},
    {"max_speed_increment", max_speed_increment},
    {"dt", dt}};
}

VehicleParams VehicleParams::from_json(const nlohmann::json & j, VehicleParams base)
{
  if (!j.is_object()) {
    throw ValidationError("vehicle config must be an object");
  }
  for (const auto & [key, v] : j.items()) {
    if (!v.is_number()) {
      throw ValidationError("vehicle config field '" + key + "' must be a number");
    }
    const double x = v.get<double>();
    if (key == "wheelbase") {
      base.wheelbase = x;
    } else if (key == "max_steer") {
      base.max_steer = x;
    } else if (key == "max_speed") {
      base.max_speed = x;
    } else if (key == "max_steer_increment") {
      base.max_steer_increment = x;
    } else if (key == "max_speed_increment") {
      base.max_speed_increment = x;
    } else if (key == "dt") {
      base.dt = x;
    } else {
      throw ValidationError("unknown vehicle config field '" + key + "'");
    }
    if (!(x > 0.0)) {
      throw ValidationError("vehicle config field '" + key + "' must be positive");
    }
  }
  return base;
}

Action clamp_action(const Action & a, const VehicleParams & p)
{
  return {
    std::clamp(a.d_delta, -p.max_steer_increment, p.max_steer_increment),
    std::clamp(a.d_v, -p.max_speed_increment, p.max_speed_increment)};
}

namespace
{

void require_finite(std::initializer_list<double> values, const char * what)
{
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(what) + ": non-finite input");
    }
  }
}

}  // namespace

VehicleState step(const VehicleState & s, const Action & a, double dt, const VehicleParams & p)
{
  require_finite({s.x, s.y, s.theta, s.v, s.delta, a.d_delta, a.d_v, dt}, "kinematics step");
  if (!(dt > 0.0)) {
    throw ContractError("kinematics step: dt must be positive");
  }
  const Action c = clamp_action(a, p);
  VehicleState n;
  n.delta = std::clamp(s.delta + c.d_delta, -p.max_steer, p.max_steer);
  n.v = std::clamp(s.v + c.d_v, 0.0, p.max_speed);
  n.x = s.x + n.v * std::cos(s.theta) * dt;
  n.y = s.y + n.v * std::sin(s.theta) * dt;
  n.yaw_rate = n.v * std::tan(n.delta) / p.wheelbase;
  n.theta = s.theta + n.yaw_rate * dt;
  n.a_long = (n.v - s.v) / dt;
  return n;
}

VehicleState step_direct(const VehicleState & s, const Vec2 & local_displacement, double dt, const VehicleParams & p)
{
  require_finite({s.x, s.y, s.theta, s.v, local_displacement.x, local_displacement.y, dt}, "direct step");
  if (!(dt > 0.0)) {
    throw ContractError("direct step: dt must be positive");
  }
  Vec2 d = local_displacement;
  const double limit = p.max_speed * dt;
  if (d.norm() > limit) {
    d = d * (limit / d.norm());
  }
  const Vec2 world = rotate(d, s.theta);
  VehicleState n;
  n.x = s.x + world.x;
  n.y = s.y + world.y;
  n.v = d.norm() / dt;
  n.theta = d.norm() > 1e-9 ? s.theta + std::atan2(d.y, d.x) : s.theta;
  n.yaw_rate = (n.theta - s.theta) / dt;
  // Steering angle that would produce the same yaw rate at this speed.
  n.delta = n.v > 1e-6 ? std::atan(n.yaw_rate * p.wheelbase / n.v) : s.delta;
  n.a_long = (n.v - s.v) / dt;
  return n;
}

double gaussian_log_prob(
  const std::array<double, 2> & x, const std::array<double, 2> & mean, const std::array<double, 2> & std)
{
  double lp = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double z = (x[i] - mean[i]) / std[i];
    lp += -0.5 * z * z - std::log(std[i]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

SampledAction sample_action(
  const std::array<double, 2> & mean, const std::array<double, 2> & std,
  const std::array<double, 2> & bound, std::mt19937_64 & rng)
{
  for (std::size_t i = 0; i < 2; ++i) {
    if (!(std[i] > 0.0)) {
      throw ContractError("sample_action: std must be positive");
    }
  }
  std::normal_distribution<double> unit(0.0, 1.0);
  SampledAction out;
  for (std::size_t i = 0; i < 2; ++i) {
    out.raw[i] = mean[i] + std[i] * unit(rng);
    out.clamped[i] = std::clamp(out.raw[i], -bound[i], bound[i]);
  }
  out.log_prob = gaussian_log_prob(out.raw, mean, std);
  return out;
}

}  // namespace hybridpred
