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

#ifndef HYBRIDPRED__HETERO_GRAPH_HPP_
#define HYBRIDPRED__HETERO_GRAPH_HPP_

#include "hybridpred/scene.hpp"

#include <array>
#include <string>
#include <vector>

namespace hybridpred
{

enum class Direction { front = 0, left = 1, back = 2, right = 3 };
inline constexpr std::size_t kNumDirections = 4;
inline constexpr std::array<Direction, 4> kDirections{
  Direction::front, Direction::left, Direction::back, Direction::right};

const char * to_string(Direction d);

/// Label of a bearing (radians, relative to the center heading). Half-open
/// quadrants: front [-45, 45), left [45, 135), back [135, 225), right
/// [225, 315) degrees.
Direction direction_from_bearing(double bearing);

enum class NodeType { lane = 0, agent = 1 };
inline constexpr std::size_t kNumNodeTypes = 2;

/// Lane segment spacing used for graph nodes, meters.
inline constexpr double kLaneNodeSpacing = 2.0;

struct GraphNode
{
  NodeType type = NodeType::agent;
  /// Index into Scene::agents for agent nodes.
  std::size_t agent_index = 0;
  /// Owning lanelet for lane nodes.
  std::string lanelet_id;
  /// World position (last observation, or segment midpoint).
  Vec2 position;
  /// Lane nodes: world segment vector from start to end point.
  Vec2 segment;
};

struct GraphEdge
{
  /// Index into HeteroGraph::nodes; the target is always the center.
  std::size_t source = 0;
  Direction label = Direction::front;
  /// Source position expressed in the center frame.
  Vec2 relative;
};

struct HeteroGraph
{
  std::size_t center_agent = 0;
  Vec2 origin;
  double heading = 0.0;
  double radius = 0.0;
  /// nodes[0] is the center agent.
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  std::size_t count(NodeType type) const;
};

/// Star graph around `center_agent_id`: every other agent and every 2 m
/// lane segment whose position lies within `radius` of the center's last
/// observed position gets one edge into the center.
HeteroGraph build_hetero_graph(const Scene & scene, const std::string & center_agent_id, double radius);

/// Lane segments of one lanelet: (start, end) pairs at the graph spacing.
std::vector<std::pair<Vec2, Vec2>> lane_segments(const Lanelet & lanelet, double spacing = kLaneNodeSpacing);

}  // namespace hybridpred

#endif  // HYBRIDPRED__HETERO_GRAPH_HPP_
