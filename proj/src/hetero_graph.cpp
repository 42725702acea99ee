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

#include "hybridpred/hetero_graph.hpp"

#include "hybridpred/errors.hpp"

#include <cmath>
#include <numbers>

namespace hybridpred
{

const char * to_string(Direction d)
{
  switch (d) {
    case Direction::front:
      return "front";
    case Direction::left:
      return "left";
    case Direction::back:
      return "back";
    case Direction::right:
      return "right";
  }
  return "front";
}

Direction direction_from_bearing(double bearing)
{
  // Shift so that front starts at zero, then bucket by quarter turns.
  constexpr double quarter = std::numbers::pi / 2.0;
  double shifted = std::fmod(bearing + quarter / 2.0, 2.0 * std::numbers::pi);
  if (shifted < 0.0) {
    shifted += 2.0 * std::numbers::pi;
  }
  const auto bucket = static_cast<int>(std::floor(shifted / quarter)) % 4;
  return static_cast<Direction>(bucket);
}

std::size_t HeteroGraph::count(NodeType type) const
{
  std::size_t n = 0;
  for (const auto & node : nodes) {
    n += node.type == type ? 1 : 0;
  }
  return n;
}

std::vector<std::pair<Vec2, Vec2>> lane_segments(const Lanelet & lanelet, double spacing)
{
  const Polyline pts = resample(lanelet.centerline, spacing);
  std::vector<std::pair<Vec2, Vec2>> out;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (distance(pts[i - 1], pts[i]) > 1e-9) {
      out.emplace_back(pts[i - 1], pts[i]);
    }
  }
  return out;
}

HeteroGraph build_hetero_graph(const Scene & scene, const std::string & center_agent_id, double radius)
{
  if (!(radius > 0.0)) {
    throw ContractError("build_hetero_graph: radius must be positive");
  }
  const std::size_t ci = scene.agent_index(center_agent_id);
  const AgentTrack & center = scene.agents[ci];

  HeteroGraph g;
  g.center_agent = ci;
  g.origin = center.last_position();
  g.heading = center.heading;
  g.radius = radius;

  GraphNode c;
  c.type = NodeType::agent;
  c.agent_index = ci;
  c.position = g.origin;
  g.nodes.push_back(c);

  const auto add_edge = [&g](std::size_t source) {
    GraphEdge e;
    e.source = source;
    e.relative = to_local(g.nodes[source].position, g.origin, g.heading);
    e.label = direction_from_bearing(std::atan2(e.relative.y, e.relative.x));
    g.edges.push_back(e);
  };

  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    if (i == ci) {
      continue;
    }
    const Vec2 p = scene.agents[i].last_position();
    if (distance(p, g.origin) <= radius) {
      GraphNode n;
      n.type = NodeType::agent;
      n.agent_index = i;
      n.position = p;
      g.nodes.push_back(n);
      add_edge(g.nodes.size() - 1);
    }
  }
  for (const auto & [id, lanelet] : scene.lanelets) {
    for (const auto & [a, b] : lane_segments(lanelet)) {
      const Vec2 mid = (a + b) * 0.5;
      if (distance(mid, g.origin) <= radius) {
        GraphNode n;
        n.type = NodeType::lane;
        n.lanelet_id = id;
        n.position = mid;
        n.segment = b - a;
        g.nodes.push_back(n);
        add_edge(g.nodes.size() - 1);
      }
    }
  }
  return g;
}

}  // namespace hybridpred
