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

#include "hybridpred/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace hybridpred
{

double wrap_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) {
    a += two_pi;
  }
  return a - std::numbers::pi;
}

double polyline_length(const Polyline & line)
{
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    total += distance(line[i - 1], line[i]);
  }
  return total;
}

Vec2 point_at(const Polyline & line, double arc)
{
  if (line.empty()) {
    return {};
  }
  if (arc <= 0.0) {
    const Vec2 dir = line[1] - line[0];
    return line[0] + dir * (arc / dir.norm());
  }
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (walked + seg >= arc || i + 1 == line.size()) {
      const double u = (arc - walked) / seg;
      return line[i - 1] + (line[i] - line[i - 1]) * u;
    }
    walked += seg;
  }
  return line.back();
}

double heading_at(const Polyline & line, double arc)
{
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (walked + seg >= arc || i + 1 == line.size()) {
      const Vec2 d = line[i] - line[i - 1];
      return std::atan2(d.y, d.x);
    }
    walked += seg;
  }
  return 0.0;
}

Polyline resample(const Polyline & line, double spacing)
{
  Polyline out;
  const double total = polyline_length(line);
  const auto n = static_cast<std::size_t>(std::floor(total / spacing + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    out.push_back(point_at(line, static_cast<double>(k) * spacing));
  }
  if (total - static_cast<double>(n) * spacing > 1e-6) {
    out.push_back(line.back());
  }
  return out;
}

Polyline offset(const Polyline & line, double lateral)
{
  Polyline out;
  out.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    Vec2 dir;
    if (i == 0) {
      dir = line[1] - line[0];
    } else if (i + 1 == line.size()) {
      dir = line[i] - line[i - 1];
    } else {
      const Vec2 a = line[i] - line[i - 1];
      const Vec2 b = line[i + 1] - line[i];
      dir = a * (1.0 / a.norm()) + b * (1.0 / b.norm());
    }
    dir = dir * (1.0 / dir.norm());
    out.push_back(line[i] + Vec2{-dir.y, dir.x} * lateral);
  }
  return out;
}

PolylineProjection project(const Polyline & line, const Vec2 & p)
{
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1];
    const Vec2 d = line[i] - a;
    const double len2 = d.dot(d);
    const double u = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    const Vec2 foot = a + d * u;
    const double dist = distance(foot, p);
    if (dist < best.distance) {
      best.distance = dist;
      best.point = foot;
      best.arc = walked + u * std::sqrt(len2);
      const double side = d.cross(p - a);
      best.lateral = side >= 0.0 ? dist : -dist;
    }
    walked += std::sqrt(len2);
  }
  return best;
}

bool point_in_polygon(const Polyline & polygon, const Vec2 & p)
{
  const std::size_t n = polygon.size();
  if (n < 3) {
    return false;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[j], b = polygon[i];
    const Vec2 d = b - a;
    const double len2 = d.dot(d);
    if (len2 > 0.0) {
      const double u = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
      if (distance(a + d * u, p) <= 1e-9) {
        return true;
      }
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) {
        inside = !inside;
      }
    }
  }
  return inside;
}

bool segments_intersect(const Vec2 & a0, const Vec2 & a1, const Vec2 & b0, const Vec2 & b1)
{
  const Vec2 r = a1 - a0, s = b1 - b0;
  const double denom = r.cross(s);
  if (std::abs(denom) < 1e-12) {
    return false;
  }
  const double t = (b0 - a0).cross(s) / denom;
  const double u = (b0 - a0).cross(r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

}  // namespace hybridpred
