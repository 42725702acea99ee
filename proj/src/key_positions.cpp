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

#include "hybridpred/key_positions.hpp"

#include "hybridpred/errors.hpp"

#include <cmath>

namespace hybridpred
{

const AgentKeyPositions & KeyPositionSet::agent(const std::string & id) const
{
  for (const auto & a : agents) {
    if (a.agent_id == id) {
      return a;
    }
  }
  throw ValidationError("no key positions for agent '" + id + "'");
}

std::size_t KeyPositionSet::n_modes() const
{
  return agents.empty() ? 0 : agents.front().modes.size();
}

void KeyPositionSet::validate() const
{
  for (std::size_t k = 1; k < timestamps.size(); ++k) {
    if (!(timestamps[k] > timestamps[k - 1])) {
      throw ValidationError("key timestamps must be strictly increasing");
    }
  }
  for (const auto & a : agents) {
    if (a.modes.empty() || a.modes.size() != a.probabilities.size()) {
      throw ValidationError("agent " + a.agent_id + ": mode count and probability count differ");
    }
    double total = 0.0;
    for (double p : a.probabilities) {
      if (!std::isfinite(p) || p < 0.0) {
        throw ValidationError("agent " + a.agent_id + ": invalid mode probability");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw ValidationError("agent " + a.agent_id + ": mode probabilities do not sum to 1");
    }
    for (const auto & mode : a.modes) {
      if (mode.size() != timestamps.size()) {
        throw ValidationError("agent " + a.agent_id + ": key position count differs from timestamps");
      }
      for (std::size_t k = 0; k < mode.size(); ++k) {
        if (std::abs(mode[k].t - timestamps[k]) > 1e-9) {
          throw ValidationError("agent " + a.agent_id + ": key position timestamp mismatch");
        }
        if (!std::isfinite(mode[k].x) || !std::isfinite(mode[k].y)) {
          throw ValidationError("agent " + a.agent_id + ": non-finite key position");
        }
      }
    }
  }
}

KeyPositionSet ground_truth_key_positions(const Scene & scene, const std::vector<double> & timestamps)
{
  KeyPositionSet out;
  out.timestamps = timestamps;
  for (const auto & track : scene.agents) {
    if (!track.future_gt) {
      throw ValidationError("agent " + track.id + " has no ground-truth future");
    }
    AgentKeyPositions a;
    a.agent_id = track.id;
    std::vector<TimedPoint> mode;
    for (double t : timestamps) {
      const Vec2 p = future_position(track, t);
      mode.push_back({t, p.x, p.y});
    }
    a.modes.push_back(std::move(mode));
    a.probabilities.push_back(1.0);
    out.agents.push_back(std::move(a));
  }
  return out;
}

KeyPositionSet calibrate_key_positions(const KeyPositionSet & kps, const Scene & scene)
{
  KeyPositionSet out = kps;
  for (auto & a : out.agents) {
    for (auto & mode : a.modes) {
      for (auto & kp : mode) {
        const Vec2 p = kp.position();
        if (scene.in_drivable_area(p)) {
          continue;
        }
        const auto [id, proj] = scene.nearest_centerline(p);
        Vec2 q = proj.point;
        if (!scene.in_drivable_area(q)) {
          // Only reachable with degenerate lanelet outlines; the closest
          // centerline vertex is inside for every outline built by offsetting.
          const auto & line = scene.lanelet(id).centerline;
          q = line.front();
          for (const auto & v : line) {
            q = distance(v, p) < distance(q, p) ? v : q;
          }
        }
        kp.x = q.x;
        kp.y = q.y;
      }
    }
  }
  return out;
}

std::size_t count_calibrated(const KeyPositionSet & before, const KeyPositionSet & after)
{
  std::size_t n = 0;
  for (std::size_t i = 0; i < before.agents.size(); ++i) {
    for (std::size_t f = 0; f < before.agents[i].modes.size(); ++f) {
      for (std::size_t k = 0; k < before.agents[i].modes[f].size(); ++k) {
        n += before.agents[i].modes[f][k] == after.agents[i].modes[f][k] ? 0 : 1;
      }
    }
  }
  return n;
}

nlohmann::json key_positions_to_json(const KeyPositionSet & kps)
{
  nlohmann::json agents = nlohmann::json::array();
  for (const auto & a : kps.agents) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto & mode : a.modes) {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto & p : mode) {
        pts.push_back({p.t, p.x, p.y});
      }
      modes.push_back(pts);
    }
    agents.push_back({{"id", a.agent_id}, {"modes", modes}, {"probabilities", a.probabilities}});
  }
  return {{"timestamps", kps.timestamps}, {"agents", agents}};
}

KeyPositionSet key_positions_from_json(const nlohmann::json & j)
{
  KeyPositionSet out;
  try {
    out.timestamps = j.at("timestamps").get<std::vector<double>>();
    for (const auto & ja : j.at("agents")) {
      AgentKeyPositions a;
      a.agent_id = ja.at("id").get<std::string>();
      a.probabilities = ja.at("probabilities").get<std::vector<double>>();
      for (const auto & jm : ja.at("modes")) {
        std::vector<TimedPoint> mode;
        for (const auto & jp : jm) {
          const auto v = jp.get<std::vector<double>>();
          if (v.size() != 3) {
            throw ParseError("key position entries must be [t, x, y]");
          }
          mode.push_back({v[0], v[1], v[2]});
        }
        a.modes.push_back(std::move(mode));
      }
      out.agents.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception & e) {
    throw ParseError(std::string("key positions: ") + e.what());
  }
  out.validate();
  return out;
}

}  // namespace hybridpred
