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

#include "hybridpred/synthetic.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace hybridpred
{

namespace
{

using Route = std::vector<std::string>;

struct MapBuild
{
  Scene scene;
  std::vector<Route> routes;
  std::size_t next_id = 0;
  double width = 3.5;

  std::string add(const Polyline & centerline)
  {
    std::string id = "L" + std::to_string(next_id++);
    Lanelet l = make_lanelet(id, centerline, width);
    const Vec2 chord = centerline.back() - centerline.front();
    const bool same =
      chord.x > 0.1 * chord.norm() || (std::abs(chord.x) <= 0.1 * chord.norm() && chord.y > 0.0);
    l.direction_attr = same ? TrafficDirection::same : TrafficDirection::opposite;
    scene.lanelets.emplace(id, std::move(l));
    return id;
  }

  Lanelet & at(const std::string & id) { return scene.lanelets.at(id); }

  void link(const std::string & from, const std::string & to)
  {
    at(from).successors.push_back(to);
    at(to).predecessors.push_back(from);
  }

  // `right` lies on the right-hand side of `left` in the driving direction.
  void neighbours(const std::string & left, const std::string & right)
  {
    at(left).right_neighbor.push_back(right);
    at(right).left_neighbor.push_back(left);
  }

  std::vector<std::string> chain(const std::vector<Polyline> & pieces)
  {
    std::vector<std::string> ids;
    for (const auto & p : pieces) {
      ids.push_back(add(p));
      if (ids.size() > 1) {
        link(ids[ids.size() - 2], ids.back());
      }
    }
    routes.push_back(ids);
    return ids;
  }
};

Polyline line(Vec2 a, Vec2 b, double step = 5.0)
{
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / step)));
  Polyline out;
  for (std::size_t i = 0; i <= n; ++i) {
    out.push_back(a + (b - a) * (static_cast<double>(i) / static_cast<double>(n)));
  }
  return out;
}

Polyline bezier(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, std::size_t samples = 24)
{
  Polyline out;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(samples);
    const double u = 1.0 - t;
    out.push_back(
      p0 * (u * u * u) + p1 * (3.0 * u * u * t) + p2 * (3.0 * u * t * t) + p3 * (t * t * t));
  }
  return out;
}

// Sub-polyline between two arc lengths, with interpolated end points.
Polyline cut(const Polyline & lineal, double from, double to)
{
  Polyline out{point_at(lineal, from)};
  double walked = 0.0;
  for (std::size_t i = 1; i < lineal.size(); ++i) {
    walked += distance(lineal[i - 1], lineal[i]);
    if (walked > from + 1e-6 && walked < to - 1e-6) {
      out.push_back(lineal[i]);
    }
  }
  out.push_back(point_at(lineal, to));
  return out;
}

std::vector<Polyline> split(const Polyline & path, const std::vector<double> & cuts)
{
  std::vector<Polyline> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    out.push_back(cut(path, cuts[i], cuts[i + 1]));
  }
  return out;
}

Polyline reversed(Polyline p)
{
  std::reverse(p.begin(), p.end());
  return p;
}

void build_straight(MapBuild & m)
{
  const double w = m.width;
  std::vector<Polyline> a, b, c;
  for (int i = 0; i < 3; ++i) {
    const double x0 = -60.0 + 40.0 * i, x1 = x0 + 40.0;
    a.push_back(line({x0, 0.0}, {x1, 0.0}));
    b.push_back(line({x0, w}, {x1, w}));
    c.push_back(line({60.0 - 40.0 * i, -w}, {20.0 - 40.0 * i, -w}));
  }
  const auto la = m.chain(a);
  const auto lb = m.chain(b);
  m.chain(c);
  for (std::size_t i = 0; i < 3; ++i) {
    m.neighbours(lb[i], la[i]);
  }
}

void build_curve(MapBuild & m, std::mt19937_64 & rng)
{
  const double radius = std::uniform_real_distribution<double>(35.0, 60.0)(rng);
  const double sweep =
    std::uniform_real_distribution<double>(60.0, 90.0)(rng) * std::numbers::pi / 180.0;
  // Reference path: 40 m straight, left arc, 40 m straight.
  Polyline path = line({-40.0, 0.0}, {0.0, 0.0}, 1.0);
  const auto arc_steps = static_cast<std::size_t>(std::ceil(radius * sweep));
  for (std::size_t i = 1; i <= arc_steps; ++i) {
    const double a = sweep * static_cast<double>(i) / static_cast<double>(arc_steps);
    path.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a))});
  }
  const Vec2 end = path.back();
  const Vec2 dir{std::cos(sweep), std::sin(sweep)};
  for (int i = 1; i <= 40; ++i) {
    path.push_back(end + dir * static_cast<double>(i));
  }
  const double arc_len = radius * sweep;
  const Polyline inner = offset(path, m.width);
  const Polyline oncoming = reversed(offset(path, -m.width));
  const double l_in = polyline_length(inner), l_on = polyline_length(oncoming);
  const auto outer_ids = m.chain(split(path, {0.0, 40.0, 40.0 + arc_len / 2, 40.0 + arc_len, 80.0 + arc_len}));
  const auto inner_ids = m.chain(split(inner, {0.0, 40.0, 40.0 + l_in / 2 - 20.0, l_in - 40.0, l_in}));
  m.chain(split(oncoming, {0.0, 40.0, l_on / 2, l_on - 40.0, l_on}));
  for (std::size_t i = 0; i < outer_ids.size(); ++i) {
    m.neighbours(inner_ids[i], outer_ids[i]);
  }
}

void build_merge(MapBuild & m)
{
  const double w = m.width;
  std::vector<Polyline> main, second;
  for (int i = 0; i < 3; ++i) {
    const double x0 = -60.0 + 40.0 * i, x1 = x0 + 40.0;
    main.push_back(line({x0, 0.0}, {x1, 0.0}));
    second.push_back(line({x0, w}, {x1, w}));
  }
  const auto lm = m.chain(main);
  const auto ls = m.chain(second);
  for (std::size_t i = 0; i < 3; ++i) {
    m.neighbours(ls[i], lm[i]);
  }
  const std::string ramp = m.add(bezier({-100.0, -24.0}, {-60.0, -24.0}, {-50.0, 0.0}, {-20.0, 0.0}));
  m.link(ramp, lm[1]);
  m.routes.push_back({ramp, lm[1], lm[2]});
}

void build_intersection(MapBuild & m)
{
  const double h = m.width / 2.0;
  std::array<std::string, 4> in_ids, out_ids;
  std::array<Vec2, 4> in_end, out_start;
  std::array<double, 4> in_heading;
  for (int k = 0; k < 4; ++k) {
    const double rot = k * std::numbers::pi / 2.0;
    const auto R = [rot](Vec2 p) { return rotate(p, rot); };
    in_ids[k] = m.add(line(R({-60.0, -h}), R({-10.0, -h})));
    out_ids[k] = m.add(line(R({-10.0, h}), R({-60.0, h})));
    in_end[k] = R({-10.0, -h});
    out_start[k] = R({-10.0, h});
    in_heading[k] = rot;
  }
  for (int k = 0; k < 4; ++k) {
    const Passable signal = (k % 2 == 0) ? Passable::green : Passable::red;
    for (int turn : {2, 1, 3}) {  // straight, right, left
      const int target = (k + turn) % 4;
      const Vec2 a = in_end[k], b = out_start[target];
      const Vec2 ta{std::cos(in_heading[k]), std::sin(in_heading[k])};
      // Outgoing lanes of arm j head away from the centre.
      const double out_heading = in_heading[target] + std::numbers::pi;
      const Vec2 tb{std::cos(out_heading), std::sin(out_heading)};
      const double c = distance(a, b) / 3.0;
      const std::string conn = m.add(bezier(a, a + ta * c, b - tb * c, b));
      m.at(conn).passable = signal;
      m.link(in_ids[k], conn);
      m.link(conn, out_ids[target]);
      m.routes.push_back({in_ids[k], conn, out_ids[target]});
    }
  }
}

Polyline route_path(const Scene & scene, const Route & route)
{
  Polyline path;
  for (const auto & id : route) {
    for (const auto & p : scene.lanelet(id).centerline) {
      if (path.empty() || distance(path.back(), p) > 1e-6) {
        path.push_back(p);
      }
    }
  }
  return path;
}

}  // namespace

const char * to_string(SceneKind kind)
{
  switch (kind) {
    case SceneKind::straight:
      return "straight";
    case SceneKind::curve:
      return "curve";
    case SceneKind::merge:
      return "merge";
    case SceneKind::intersection:
      return "intersection";
  }
  return "straight";
}

SceneKind scene_kind_from_string(const std::string & s)
{
  for (auto k : {SceneKind::straight, SceneKind::curve, SceneKind::merge, SceneKind::intersection}) {
    if (s == to_string(k)) {
      return k;
    }
  }
  throw ValidationError("unknown scene kind '" + s + "'");
}

Lanelet make_lanelet(std::string id, const Polyline & centerline, double width)
{
  Lanelet l;
  l.id = std::move(id);
  l.centerline = centerline;
  l.left_boundary = offset(centerline, width / 2.0);
  l.right_boundary = offset(centerline, -width / 2.0);
  return l;
}

Scene generate_synthetic_scene(
  SceneKind kind, std::size_t n_agents, std::uint64_t seed, const SyntheticOptions & options)
{
  if (n_agents < 1) {
    throw ContractError("generate_synthetic_scene: n_agents must be at least 1");
  }
  std::mt19937_64 rng(seed);
  MapBuild m;
  m.width = options.lane_width;
  switch (kind) {
    case SceneKind::straight:
      build_straight(m);
      break;
    case SceneKind::curve:
      build_curve(m, rng);
      break;
    case SceneKind::merge:
      build_merge(m);
      break;
    case SceneKind::intersection:
      build_intersection(m);
      break;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, options.history_noise);
  std::vector<Vec2> placed;
  for (std::size_t i = 0; i < n_agents; ++i) {
    Polyline path;
    double speed = 0.0, s0 = 0.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const auto r = static_cast<std::size_t>(unit(rng) * static_cast<double>(m.routes.size()));
      path = route_path(m.scene, m.routes[std::min(r, m.routes.size() - 1)]);
      speed = options.min_speed + (options.max_speed - options.min_speed) * unit(rng);
      const double length = polyline_length(path);
      const double lo = 1.9 * speed + 1.0, hi = length - 3.0 * speed - 1.0;
      if (hi <= lo) {
        continue;
      }
      s0 = lo + (hi - lo) * unit(rng);
      const Vec2 p0 = point_at(path, s0);
      bool clear = true;
      for (const auto & q : placed) {
        clear = clear && distance(p0, q) >= options.min_spacing;
      }
      if (clear) {
        break;
      }
    }
    placed.push_back(point_at(path, s0));

    AgentTrack track;
    track.id = "a" + std::to_string(i);
    for (std::size_t k = 0; k < kHistorySteps; ++k) {
      const double back = static_cast<double>(kHistorySteps - 1 - k);
      const Vec2 p = point_at(path, s0 - back * speed * kStepDt);
      track.history.push_back({-back * kStepDt, p.x + noise(rng), p.y + noise(rng)});
    }
    std::vector<TimedPoint> future;
    for (std::size_t k = 1; k <= kFutureSteps; ++k) {
      const double ahead = static_cast<double>(k);
      const Vec2 p = point_at(path, s0 + ahead * speed * kStepDt);
      future.push_back({ahead * kStepDt, p.x, p.y});
    }
    track.future_gt = std::move(future);
    m.scene.agents.push_back(std::move(track));
  }
  m.scene.derive_headings();
  m.scene.validate();
  return m.scene;
}

}  // namespace hybridpred
