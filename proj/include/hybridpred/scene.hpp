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

#ifndef HYBRIDPRED__SCENE_HPP_
#define HYBRIDPRED__SCENE_HPP_

#include "hybridpred/geometry.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hybridpred
{

inline constexpr std::size_t kHistorySteps = 20;
inline constexpr std::size_t kFutureSteps = 30;
inline constexpr double kStepDt = 0.1;

enum class TrafficDirection { same, opposite };
enum class Passable { green, red, uncontrolled };
enum class AgentType { agent };

const char * to_string(TrafficDirection d);
const char * to_string(Passable p);
TrafficDirection traffic_direction_from_string(const std::string & s);
Passable passable_from_string(const std::string & s);

struct Lanelet
{
  std::string id;
  Polyline centerline;
  Polyline left_boundary;
  Polyline right_boundary;
  std::vector<std::string> successors;
  std::vector<std::string> predecessors;
  std::vector<std::string> left_neighbor;
  std::vector<std::string> right_neighbor;
  TrafficDirection direction_attr = TrafficDirection::same;
  Passable passable = Passable::uncontrolled;

  /// Closed outline: left boundary followed by the reversed right boundary.
  Polyline polygon() const;
  /// Successors, predecessors and both neighbours, in that order.
  std::vector<std::string> connected() const;

  bool operator==(const Lanelet &) const = default;
};

struct TimedPoint
{
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const TimedPoint &) const = default;
};

struct AgentTrack
{
  std::string id;
  AgentType type = AgentType::agent;
  std::vector<TimedPoint> history;
  std::optional<std::vector<TimedPoint>> future_gt;
  /// Derived from the last history displacement (see Scene::derive_headings).
  double heading = 0.0;

  Vec2 last_position() const { return history.back().position(); }
  bool operator==(const AgentTrack &) const = default;
};

struct BoundingBox
{
  Vec2 min;
  Vec2 max;
  bool contains(const Vec2 & p, double margin = 0.0) const
  {
    return p.x >= min.x - margin && p.x <= max.x + margin && p.y >= min.y - margin &&
           p.y <= max.y + margin;
  }
};

class Scene
{
public:
  std::map<std::string, Lanelet> lanelets;
  std::vector<AgentTrack> agents;

  const Lanelet & lanelet(const std::string & id) const;
  const AgentTrack & agent(const std::string & id) const;
  const AgentTrack * find_agent(const std::string & id) const;
  std::size_t agent_index(const std::string & id) const;

  BoundingBox bounds() const;

  /// True if `p` lies in the union of the lanelet polygons.
  bool in_drivable_area(const Vec2 & p) const;
  /// Lanelet whose polygon contains `p`; among several, the one with the
  /// closest centerline.
  std::optional<std::string> containing_lanelet(const Vec2 & p) const;
  /// Closest point over every lanelet centerline.
  std::pair<std::string, PolylineProjection> nearest_centerline(const Vec2 & p) const;

  /// Fills AgentTrack::heading from the last displacement, or the direction
  /// of the underlying lanelet when the history is stationary.
  void derive_headings();

  /// Throws ValidationError on any invariant violation.
  void validate() const;

  bool operator==(const Scene &) const = default;
};

/// Ground-truth position at time `t` (seconds after the last observation),
/// linearly interpolated between future samples.
Vec2 future_position(const AgentTrack & track, double t);

}  // namespace hybridpred

#endif  // HYBRIDPRED__SCENE_HPP_
