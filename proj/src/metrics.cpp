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

#include "hybridpred/metrics.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace hybridpred
{

void PredictionSet::validate() const
{
  for (const auto & a : agents) {
    if (a.modes.empty()) {
      throw ValidationError("agent " + a.agent_id + ": prediction has no modes");
    }
    if (!a.probabilities.empty() && a.probabilities.size() != a.modes.size()) {
      throw ValidationError("agent " + a.agent_id + ": probability count differs from mode count");
    }
    for (const auto & m : a.modes) {
      if (m.size() != a.modes.front().size() || m.empty()) {
        throw ValidationError("agent " + a.agent_id + ": modal trajectories differ in length");
      }
    }
    if (a.ground_truth && a.ground_truth->size() != a.modes.front().size()) {
      throw ValidationError("agent " + a.agent_id + ": ground truth length differs from prediction");
    }
  }
}

namespace
{

const Trajectory & checked_truth(const AgentPrediction & p)
{
  if (!p.ground_truth) {
    throw ContractError("agent " + p.agent_id + ": no ground truth");
  }
  if (p.modes.empty()) {
    throw ContractError("agent " + p.agent_id + ": no modes");
  }
  for (const auto & m : p.modes) {
    if (m.size() != p.ground_truth->size() || m.empty()) {
      throw ContractError("agent " + p.agent_id + ": trajectory length mismatch");
    }
  }
  return *p.ground_truth;
}

AgentMetrics one_agent(const AgentPrediction & p, const Scene & scene, double threshold)
{
  AgentMetrics m;
  m.min_ade = min_ade(p);
  m.min_fde = min_fde(p);
  m.miss = m.min_fde > threshold;
  m.dac = dac(p, scene);
  return m;
}

}  // namespace

double min_ade(const AgentPrediction & p)
{
  const Trajectory & gt = checked_truth(p);
  double best = std::numeric_limits<double>::infinity();
  for (const auto & m : p.modes) {
    double total = 0.0;
    for (std::size_t t = 0; t < gt.size(); ++t) {
      total += distance(m[t], gt[t]);
    }
    best = std::min(best, total / static_cast<double>(gt.size()));
  }
  return best;
}

double min_fde(const AgentPrediction & p)
{
  const Trajectory & gt = checked_truth(p);
  double best = std::numeric_limits<double>::infinity();
  for (const auto & m : p.modes) {
    best = std::min(best, distance(m.back(), gt.back()));
  }
  return best;
}

double dac(const AgentPrediction & p, const Scene & scene)
{
  if (p.modes.empty()) {
    throw ContractError("agent " + p.agent_id + ": no modes");
  }
  std::size_t ok = 0;
  for (const auto & m : p.modes) {
    ok += std::all_of(m.begin(), m.end(), [&](const Vec2 & q) { return scene.in_drivable_area(q); }) ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(p.modes.size());
}

std::vector<AgentMetrics> agent_metrics_serial(const PredictionSet & set, const Scene & scene, double miss_threshold)
{
  std::vector<AgentMetrics> out;
  out.reserve(set.agents.size());
  for (const auto & a : set.agents) {
    out.push_back(one_agent(a, scene, miss_threshold));
  }
  return out;
}

std::vector<AgentMetrics> agent_metrics_parallel(const PredictionSet & set, const Scene & scene, double miss_threshold)
{
  const auto n = static_cast<std::ptrdiff_t>(set.agents.size());
  std::vector<AgentMetrics> out(set.agents.size());
  // Exceptions must not escape an OpenMP region; keep the first one.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = one_agent(set.agents[static_cast<std::size_t>(i)], scene, miss_threshold);
    } catch (...) {
#pragma omp critical
      if (!error) {
        error = std::current_exception();
      }
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const
{
  return {{"minADE", min_ade}, {"minFDE", min_fde}, {"MR", miss_rate}, {"DAC", dac}, {"n_agents", n_agents}};
}

MetricsReport summarize(const std::vector<AgentMetrics> & per_agent)
{
  MetricsReport r;
  r.n_agents = per_agent.size();
  if (per_agent.empty()) {
    return r;
  }
  for (const auto & m : per_agent) {
    r.min_ade += m.min_ade;
    r.min_fde += m.min_fde;
    r.miss_rate += m.miss ? 1.0 : 0.0;
    r.dac += m.dac;
  }
  const double n = static_cast<double>(per_agent.size());
  r.min_ade /= n;
  r.min_fde /= n;
  r.miss_rate /= n;
  r.dac /= n;
  return r;
}

MetricsReport evaluate(const PredictionSet & set, const Scene & scene, double miss_threshold)
{
  return summarize(agent_metrics_parallel(set, scene, miss_threshold));
}

Trajectory constant_velocity_baseline(const AgentTrack & track, std::size_t steps)
{
  if (track.history.size() < 2) {
    throw ContractError("constant velocity baseline needs two history points");
  }
  const Vec2 last = track.history.back().position();
  const Vec2 prev = track.history[track.history.size() - 2].position();
  const Vec2 d = last - prev;
  Trajectory out;
  for (std::size_t k = 1; k <= steps; ++k) {
    out.push_back(last + d * static_cast<double>(k));
  }
  return out;
}

Trajectory ground_truth_trajectory(const AgentTrack & track)
{
  if (!track.future_gt) {
    throw ValidationError("agent " + track.id + " has no ground-truth future");
  }
  Trajectory out;
  for (const auto & p : *track.future_gt) {
    out.push_back(p.position());
  }
  return out;
}

nlohmann::json predictions_to_json(const PredictionSet & set)
{
  const auto traj = [](const Trajectory & t) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto & p : t) {
      out.push_back({p.x, p.y});
    }
    return out;
  };
  nlohmann::json agents = nlohmann::json::array();
  for (const auto & a : set.agents) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto & m : a.modes) {
      modes.push_back(traj(m));
    }
    nlohmann::json ja = {{"id", a.agent_id}, {"probabilities", a.probabilities}, {"modes", modes}};
    if (a.ground_truth) {
      ja["ground_truth"] = traj(*a.ground_truth);
    }
    agents.push_back(std::move(ja));
  }
  return {{"agents", agents}};
}

PredictionSet predictions_from_json(const nlohmann::json & j)
{
  const auto traj = [](const nlohmann::json & jt) {
    Trajectory t;
    for (const auto & p : jt) {
      const auto v = p.get<std::vector<double>>();
      if (v.size() != 2) {
        throw ParseError("trajectory points must be [x, y]");
      }
      t.push_back({v[0], v[1]});
    }
    return t;
  };
  PredictionSet set;
  try {
    for (const auto & ja : j.at("agents")) {
      AgentPrediction a;
      a.agent_id = ja.at("id").get<std::string>();
      a.probabilities = ja.at("probabilities").get<std::vector<double>>();
      for (const auto & jm : ja.at("modes")) {
        a.modes.push_back(traj(jm));
      }
      if (ja.contains("ground_truth")) {
        a.ground_truth = traj(ja.at("ground_truth"));
      }
      set.agents.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception & e) {
    throw ParseError(std::string("predictions: ") + e.what());
  }
  set.validate();
  return set;
}

}  // namespace hybridpred
