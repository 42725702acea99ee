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

#ifndef HYBRIDPRED__GEOMETRY_HPP_
#define HYBRIDPRED__GEOMETRY_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

namespace hybridpred
{

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2 & o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2 & o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 & operator+=(const Vec2 & o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2 &) const = default;

  double dot(const Vec2 & o) const { return x * o.x + y * o.y; }
  double cross(const Vec2 & o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

using Polyline = std::vector<Vec2>;

inline double distance(const Vec2 & a, const Vec2 & b) { return (a - b).norm(); }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(const Vec2 & v, double angle)
{
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Expresses world point `p` in the frame located at `origin` with x-axis
/// along `heading`.
inline Vec2 to_local(const Vec2 & p, const Vec2 & origin, double heading)
{
  return rotate(p - origin, -heading);
}

inline Vec2 to_world(const Vec2 & local, const Vec2 & origin, double heading)
{
  return rotate(local, heading) + origin;
}

/// Wraps into [-pi, pi).
double wrap_angle(double a);

double polyline_length(const Polyline & line);
Vec2 point_at(const Polyline & line, double arc);
double heading_at(const Polyline & line, double arc);

/// Points at arc lengths 0, spacing, 2 spacing, ... plus the end point.
Polyline resample(const Polyline & line, double spacing);

/// Offsets a polyline sideways (positive = left of travel direction).
Polyline offset(const Polyline & line, double lateral);

struct PolylineProjection
{
  Vec2 point;
  double distance = 0.0;
  double arc = 0.0;
  /// Signed lateral offset of the query, positive on the left.
  double lateral = 0.0;
};

PolylineProjection project(const Polyline & line, const Vec2 & p);

/// Crossing-number test; points on the boundary (within 1e-9 m) count as
/// inside.
bool point_in_polygon(const Polyline & polygon, const Vec2 & p);

bool segments_intersect(const Vec2 & a0, const Vec2 & a1, const Vec2 & b0, const Vec2 & b1);

}  // namespace hybridpred

#endif  // HYBRIDPRED__GEOMETRY_HPP_
