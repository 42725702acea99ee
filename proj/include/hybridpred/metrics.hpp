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

#ifndef HYBRIDPRED__METRICS_HPP_
#define HYBRIDPRED__METRICS_HPP_

#include "hybridpred/scene.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hybridpred
{

using Trajectory = std::vector<Vec2>;

struct AgentPrediction
{
  std::string agent_id;
  std::vector<Trajectory> modes;
  std::vector<double> probabilities;
  std::optional<Trajectory> ground_truth;

  bool operator==(const AgentPrediction &) const = default;
};

struct PredictionSet
{
  std::vector<AgentPrediction> agents;

  /// Throws ValidationError when modes are missing or lengths disagree.
  void validate() const;
  bool operator==(const PredictionSet &) const = default;
};

inline constexpr double kMissThreshold = 2.0;

/// Mean pointwise error of the best mode. Throws ContractError on a length
/// mismatch or a missing ground truth.
double min_ade(const AgentPrediction & p);
/// Endpoint error of the best mode.
double min_fde(const AgentPrediction & p);
/// Fraction of modes whose every point is in the drivable area.
double dac(const AgentPrediction & p, const Scene & scene);

struct AgentMetrics
{
  double min_ade = 0.0;
  double min_fde = 0.0;
  bool miss = false;
  double dac = 0.0;
};

/// Per-agent metrics, one entry per agent in order. The parallel variant
/// distributes agents over threads and returns identical values.
std::vector<AgentMetrics> agent_metrics_serial(
  const PredictionSet & set, const Scene & scene, double miss_threshold = kMissThreshold);
std::vector<AgentMetrics> agent_metrics_parallel(
  const PredictionSet & set, const Scene & scene, double miss_threshold = kMissThreshold);

struct MetricsReport
{
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
  double dac = 0.0;
  std::size_t n_agents = 0;

  nlohmann::json to_json() const;
};

/// Averages over every agent of every (prediction, scene) pair.
MetricsReport summarize(const std::vector<AgentMetrics> & per_agent);
MetricsReport evaluate(const PredictionSet & set, const Scene & scene, double miss_threshold = kMissThreshold);

/// Extrapolates the last observed velocity for `steps` steps.
Trajectory constant_velocity_baseline(const AgentTrack & track, std::size_t steps = kFutureSteps);

/// Ground-truth future positions of a track (30 points).
Trajectory ground_truth_trajectory(const AgentTrack & track);

nlohmann::json predictions_to_json(const PredictionSet & set);
PredictionSet predictions_from_json(const nlohmann::json & j);

}  // namespace hybridpred

#endif  // HYBRIDPRED__METRICS_HPP_
