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

#ifndef HYBRIDPRED__PLOT_HPP_
#define HYBRIDPRED__PLOT_HPP_

#include "hybridpred/key_positions.hpp"
#include "hybridpred/metrics.hpp"
#include "hybridpred/scene.hpp"

#include <istream>
#include <map>
#include <string>

namespace hybridpred
{

struct PlotLayers
{
  const PredictionSet * predictions = nullptr;
  const KeyPositionSet * key_positions = nullptr;
  /// Agent id -> executed positions, e.g. from an episode trace.
  const std::map<std::string, Trajectory> * traces = nullptr;
  /// Free text emitted XML-escaped inside a <metadata> element.
  std::string metadata;
};

/// Lanelets, histories and optional overlays as a standalone SVG document.
std::string render_svg(const Scene & scene, const PlotLayers & layers);

/// Reads the position columns of an episode trace CSV.
std::map<std::string, Trajectory> read_trace_csv(std::istream & in);

}  // namespace hybridpred

#endif  // HYBRIDPRED__PLOT_HPP_
