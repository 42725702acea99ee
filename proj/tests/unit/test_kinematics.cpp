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

#include "hybridpred/errors.hpp"
#include "hybridpred/kinematics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace hybridpred;  // NOLINT

namespace
{

VehicleState moving(double v, double theta = 0.0, double delta = 0.0)
{
  VehicleState s;
  s.v = v;
  s.theta = theta;
  s.delta = delta;
  return s;
}

}  // namespace

TEST(Kinematics, StraightLineDisplacementIsExact)
{
  const VehicleParams p;
  for (double theta : {0.0, 0.7, -2.1}) {
    const VehicleState s = moving(10.0, theta);
    const VehicleState n = step(s, {}, 0.1, p);
    EXPECT_NEAR(n.x - s.x, 1.0 * std::cos(theta), 1e-9);
    EXPECT_NEAR(n.y - s.y, 1.0 * std::sin(theta), 1e-9);
    EXPECT_EQ(n.theta, theta);
    EXPECT_EQ(n.v, 10.0);
    EXPECT_EQ(n.a_long, 0.0);
    EXPECT_EQ(n.yaw_rate, 0.0);
  }
}

TEST(Kinematics, ConstantSteeringTracesCircle)
{
  VehicleParams p;
  const double delta = 0.3;
  const double radius = p.wheelbase / std::tan(delta);
  VehicleState s = moving(5.0, 0.0, delta);
  const VehicleState start = s;
  // Half a revolution: the chord from the start is the diameter.
  double far = 0.0;
  while (s.theta < std::numbers::pi) {
    s = step(s, {}, 0.001, p);
    far = std::max(far, std::hypot(s.x - start.x, s.y - start.y));
  }
  EXPECT_NEAR(far / 2.0, radius, 0.01 * radius);
}

TEST(Kinematics, ZeroActionKeepsCurvature)
{
  const VehicleParams p;
  VehicleState s = moving(6.0, 0.2, 0.1);
  double last = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < 20; ++k) {
    const VehicleState n = step(s, {}, 0.1, p);
    const double dtheta = n.theta - s.theta;
    if (!std::isnan(last)) {
      EXPECT_NEAR(dtheta, last, 1e-12);
    }
    last = dtheta;
    s = n;
  }
}

TEST(Kinematics, SpeedClampsAtZero)
{
  const VehicleParams p;
  // The increment bound 0.8 caps one step, so start below it.
  const VehicleState n = step(moving(0.4), {0.0, -0.8}, 0.1, p);
  EXPECT_EQ(n.v, 0.0);
  EXPECT_EQ(n.x, 0.0);
  // At v = 1 the increment is clamped first and the speed only drops to 0.2.
  const VehicleState m = step(moving(1.0), {0.0, -2.0}, 0.1, p);
  EXPECT_NEAR(m.v, 0.2, 1e-12);
  EXPECT_GE(m.x, 0.0);
}

TEST(Kinematics, BoundsHoldUnderRandomActions)
{
  const VehicleParams p;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  VehicleState s = moving(8.0);
  for (int k = 0; k < 2000; ++k) {
    const VehicleState next = step(s, {n(rng), 3.0 * n(rng)}, 0.1, p);
    EXPECT_LE(std::abs(next.delta), p.max_steer);
    EXPECT_GE(next.v, 0.0);
    EXPECT_LE(next.v, p.max_speed);
    EXPECT_LE(std::abs(next.delta - s.delta), p.max_steer_increment + 1e-15);
    EXPECT_LE(std::abs(next.v - s.v), p.max_speed_increment + 1e-12);
    EXPECT_NEAR(next.yaw_rate, next.v * std::tan(next.delta) / p.wheelbase, 1e-12);
    s = next;
  }
}

TEST(Kinematics, ErrorsOnBadInput)
{
  const VehicleParams p;
  EXPECT_THROW(step(moving(1.0), {}, 0.0, p), ContractError);
  EXPECT_THROW(step(moving(std::nan("")), {}, 0.1, p), NumericError);
  EXPECT_THROW(step(moving(1.0), {std::numeric_limits<double>::infinity(), 0.0}, 0.1, p), NumericError);
}

TEST(Kinematics, DirectStepClampsDisplacement)
{
  const VehicleParams p;
  const VehicleState n = step_direct(moving(5.0, std::numbers::pi / 2), {10.0, 0.0}, 0.1, p);
  EXPECT_NEAR(n.x, 0.0, 1e-12);
  EXPECT_NEAR(n.y, p.max_speed * 0.1, 1e-12);
  EXPECT_NEAR(n.v, p.max_speed, 1e-12);
  EXPECT_NEAR(n.theta, std::numbers::pi / 2, 1e-12);
}

TEST(Kinematics, ParamsRoundTripAndReject)
{
  VehicleParams p;
  p.wheelbase = 3.1;
  const VehicleParams q = VehicleParams::from_json(p.to_json(), VehicleParams{});
  EXPECT_EQ(q.wheelbase, 3.1);
  EXPECT_THROW(VehicleParams::from_json({{"wheel", 1.0}}, p), ValidationError);
  EXPECT_THROW(VehicleParams::from_json({{"dt", -1.0}}, p), ValidationError);
}

TEST(SampleAction, DegenerateStdReturnsMean)
{
  std::mt19937_64 rng(1);
  const auto a = sample_action({0.01, -0.3}, {1e-12, 1e-12}, {1.0, 1.0}, rng);
  EXPECT_NEAR(a.clamped[0], 0.01, 1e-9);
  EXPECT_NEAR(a.clamped[1], -0.3, 1e-9);
}

TEST(SampleAction, MonteCarloMean)
{
  std::mt19937_64 rng(11);
  const std::array<double, 2> mean{0.2, -0.5};
  const std::array<double, 2> sd{0.7, 1.3};
  const int n = 100000;
  std::array<double, 2> sum{0.0, 0.0};
  for (int k = 0; k < n; ++k) {
    const auto a = sample_action(mean, sd, {100.0, 100.0}, rng);
    sum[0] += a.raw[0];
    sum[1] += a.raw[1];
  }
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(sum[i] / n, mean[i], 3.0 * sd[i] / std::sqrt(static_cast<double>(n)));
  }
}

TEST(SampleAction, LogDensityAtMean)
{
  const std::array<double, 2> sd{0.4, 2.5};
  const double expected = -(std::log(sd[0] * std::sqrt(2.0 * std::numbers::pi)) +
                            std::log(sd[1] * std::sqrt(2.0 * std::numbers::pi)));
  EXPECT_NEAR(gaussian_log_prob({1.0, 2.0}, {1.0, 2.0}, sd), expected, 1e-14);
}

TEST(SampleAction, ClampsButKeepsRawLogProb)
{
  std::mt19937_64 rng(5);
  const auto a = sample_action({5.0, -5.0}, {0.1, 0.1}, {1.0, 1.0}, rng);
  EXPECT_EQ(a.clamped[0], 1.0);
  EXPECT_EQ(a.clamped[1], -1.0);
  EXPECT_NEAR(a.log_prob, gaussian_log_prob(a.raw, {5.0, -5.0}, {0.1, 0.1}), 1e-15);
  std::mt19937_64 r1(9);
  std::mt19937_64 r2(9);
  EXPECT_EQ(sample_action({0, 0}, {1, 1}, {1, 1}, r1).raw, sample_action({0, 0}, {1, 1}, {1, 1}, r2).raw);
  EXPECT_THROW(sample_action({0, 0}, {0, 1}, {1, 1}, r1), ContractError);
}
