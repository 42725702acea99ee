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

#include "hybridpred/scene.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybridpred
{

const char * to_string(TrafficDirection d) { return d == TrafficDirection::same ? "same" : "opposite"; }

const char * to_string(Passable p)
{
  switch (p) {
    case Passable::green:
      return "green";
    case Passable::red:
      return "red";
    case Passable::uncontrolled:
      return "uncontrolled";
  }
  return "uncontrolled";
}

TrafficDirection traffic_direction_from_string(const std::string & s)
{
  if (s == "same") {
    return TrafficDirection::same;
  }
  if (s == "opposite") {
    return TrafficDirection::opposite;
  }
  throw ParseError("unknown direction_attr '" + s + "'");
}

Passable passable_from_string(const std::string & s)
{
  if (s == "green") {
    return Passable::green;
  }
  if (s == "red") {
    return Passable::red;
  }
  if (s == "uncontrolled") {
    return Passable::uncontrolled;
  }
  throw ParseError("unknown passable state '" + s + "'");
}

Polyline Lanelet::polygon() const
{
  Polyline out = left_boundary;
  out.insert(out.end(), right_boundary.rbegin(), right_boundary.rend());
  return out;
}

std::vector<std::string> Lanelet::connected() const
{
  std::vector<std::string> out = successors;
  out.insert(out.end(), predecessors.begin(), predecessors.end());
  out.insert(out.end(), left_neighbor.begin(), left_neighbor.end());
  out.insert(out.end(), right_neighbor.begin(), right_neighbor.end());
  return out;
}

const Lanelet & Scene::lanelet(const std::string & id) const
{
  const auto it = lanelets.find(id);
  if (it == lanelets.end()) {
    throw ValidationError("unknown lanelet " + id);
  }
  return it->second;
}

const AgentTrack * Scene::find_agent(const std::string & id) const
{
  for (const auto & a : agents) {
    if (a.id == id) {
      return &a;
    }
  }
  return nullptr;
}

const AgentTrack & Scene::agent(const std::string & id) const
{
  const AgentTrack * a = find_agent(id);
  if (!a) {
    throw ValidationError("unknown agent " + id);
  }
  return *a;
}

std::size_t Scene::agent_index(const std::string & id) const
{
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].id == id) {
      return i;
    }
  }
  throw ValidationError("unknown agent " + id);
}

BoundingBox Scene::bounds() const
{
  BoundingBox box{
    {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
    {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const auto & [id, l] : lanelets) {
    for (const auto * line : {&l.centerline, &l.left_boundary, &l.right_boundary}) {
      for (const auto & p : *line) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
      }
    }
  }
  return box;
}

bool Scene::in_drivable_area(const Vec2 & p) const
{
  for (const auto & [id, l] : lanelets) {
    if (point_in_polygon(l.polygon(), p)) {
      return true;
    }
  }
  return false;
}

std::optional<std::string> Scene::containing_lanelet(const Vec2 & p) const
{
  std::optional<std::string> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto & [id, l] : lanelets) {
    if (!point_in_polygon(l.polygon(), p)) {
      continue;
    }
    const double d = project(l.centerline, p).distance;
    if (d < best_dist) {
      best_dist = d;
      best = id;
    }
  }
  return best;
}

std::pair<std::string, PolylineProjection> Scene::nearest_centerline(const Vec2 & p) const
{
  std::pair<std::string, PolylineProjection> best;
  best.second.distance = std::numeric_limits<double>::infinity();
  for (const auto & [id, l] : lanelets) {
    const auto proj = project(l.centerline, p);
    if (proj.distance < best.second.distance) {
      best = {id, proj};
    }
  }
  return best;
}

void Scene::derive_headings()
{
  for (auto & a : agents) {
    if (a.history.size() < 2) {
      continue;
    }
    const Vec2 d = a.history.back().position() - a.history[a.history.size() - 2].position();
    if (d.norm() > 1e-6) {
      a.heading = std::atan2(d.y, d.x);
    } else if (!lanelets.empty()) {
      const auto lane = containing_lanelet(a.last_position());
      const Lanelet & l = lane ? lanelet(*lane) : lanelet(nearest_centerline(a.last_position()).first);
      a.heading = heading_at(l.centerline, project(l.centerline, a.last_position()).arc);
    } else {
      a.heading = 0.0;
    }
  }
}

void Scene::validate() const
{
  for (const auto & [id, l] : lanelets) {
    if (id != l.id) {
      throw ValidationError("lanelet key " + id + " does not match id " + l.id);
    }
    if (l.centerline.size() < 2) {
      throw ValidationError("lanelet " + id + " centerline has fewer than 2 points");
    }
    for (std::size_t i = 1; i < l.centerline.size(); ++i) {
      if (l.centerline[i] == l.centerline[i - 1]) {
        throw ValidationError("lanelet " + id + " centerline repeats a point");
      }
    }
    if (l.left_boundary.size() < 2 || l.right_boundary.size() < 2) {
      throw ValidationError("lanelet " + id + " boundary has fewer than 2 points");
    }
    for (const auto & ref : l.connected()) {
      if (!lanelets.count(ref)) {
        throw ValidationError("lanelet " + id + " references unknown lanelet " + ref);
      }
    }
  }
  const BoundingBox box = bounds();
  for (const auto & a : agents) {
    if (a.history.size() != kHistorySteps) {
      throw ValidationError(
        "agent " + a.id + " history has " + std::to_string(a.history.size()) + " states, expected 20");
    }
    for (std::size_t i = 1; i < a.history.size(); ++i) {
      if (std::abs(a.history[i].t - a.history[i - 1].t - kStepDt) > 1e-6) {
        throw ValidationError("agent " + a.id + " history is not spaced at 0.1 s");
      }
    }
    if (a.future_gt) {
      if (a.future_gt->size() != kFutureSteps) {
        throw ValidationError(
          "agent " + a.id + " future_gt has " + std::to_string(a.future_gt->size()) +
          " states, expected 30");
      }
      double prev = a.history.back().t;
      for (const auto & s : *a.future_gt) {
        if (std::abs(s.t - prev - kStepDt) > 1e-6) {
          throw ValidationError("agent " + a.id + " future_gt is not spaced at 0.1 s");
        }
        prev = s.t;
      }
    }
    if (!lanelets.empty() && !box.contains(a.last_position(), 1.0)) {
      throw ValidationError("agent " + a.id + " last position lies outside the map bounds");
    }
  }
}

Vec2 future_position(const AgentTrack & track, double t)
{
  if (!track.future_gt) {
    throw ContractError("agent " + track.id + " has no ground-truth future");
  }
  const auto & f = *track.future_gt;
  const double u = t / kStepDt - 1.0;
  if (u <= 0.0) {
    const Vec2 start = track.last_position();
    return start + (f[0].position() - start) * (t / kStepDt);
  }
  const double nearest = std::round(u);
  if (std::abs(u - nearest) < 1e-9) {
    return f[std::min(static_cast<std::size_t>(nearest), f.size() - 1)].position();
  }
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i + 1 >= f.size()) {
    return f.back().position();
  }
  const double w = u - static_cast<double>(i);
  return f[i].position() * (1.0 - w) + f[i + 1].position() * w;
}

}  // namespace hybridpred
