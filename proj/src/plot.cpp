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

#include "hybridpred/plot.hpp"

#include "hybridpred/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

namespace hybridpred
{

namespace
{

constexpr std::array<const char *, 6> kModeColours{"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string points(const std::vector<Vec2> & line)
{
  std::string out;
  for (const auto & p : line) {
    if (!out.empty()) {
      out += ' ';
    }
    // SVG y grows downwards.
    out += fmt(p.x) + "," + fmt(-p.y);
  }
  return out;
}

void grow(BoundingBox & b, const Vec2 & p)
{
  b.min.x = std::min(b.min.x, p.x);
  b.min.y = std::min(b.min.y, p.y);
  b.max.x = std::max(b.max.x, p.x);
  b.max.y = std::max(b.max.y, p.y);
}

std::string xml_escape(const std::string & text)
{
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Scene & scene, const PlotLayers & layers)
{
  BoundingBox box = scene.bounds();
  if (layers.predictions) {
    for (const auto & a : layers.predictions->agents) {
      for (const auto & m : a.modes) {
        for (const auto & p : m) {
          grow(box, p);
        }
      }
    }
  }
  const double margin = 5.0;
  const double w = box.max.x - box.min.x + 2 * margin;
  const double h = box.max.y - box.min.y + 2 * margin;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(box.min.x - margin) << ' '
      << fmt(-box.max.y - margin) << ' ' << fmt(w) << ' ' << fmt(h) << "\" width=\"" << fmt(w * 8.0)
      << "\" height=\"" << fmt(h * 8.0) << "\">\n";
  if (!layers.metadata.empty()) {
    svg << "<metadata>" << xml_escape(layers.metadata) << "</metadata>\n";
  }
  svg << "<rect x=\"" << fmt(box.min.x - margin) << "\" y=\"" << fmt(-box.max.y - margin) << "\" width=\""
      << fmt(w) << "\" height=\"" << fmt(h) << "\" fill=\"#ffffff\"/>\n";

  svg << "<g id=\"lanelets\">\n";
  for (const auto & [id, l] : scene.lanelets) {
    const char * fill = l.passable == Passable::red ? "#f6d5d5" : (l.passable == Passable::green ? "#d8f0d8" : "#e8e8e8");
    svg << "<polygon data-id=\"" << id << "\" points=\"" << points(l.polygon()) << "\" fill=\"" << fill
        << "\" fill-opacity=\"0.6\" stroke=\"#999999\" stroke-width=\"0.1\"/>\n";
    svg << "<polyline points=\"" << points(l.centerline)
        << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.1\" stroke-dasharray=\"1,1\"/>\n";
  }
  svg << "</g>\n";

  if (layers.predictions) {
    svg << "<g id=\"predictions\">\n";
    for (const auto & a : layers.predictions->agents) {
      for (std::size_t f = 0; f < a.modes.size(); ++f) {
        svg << "<polyline data-agent=\"" << a.agent_id << "\" data-mode=\"" << f << "\" points=\""
            << points(a.modes[f]) << "\" fill=\"none\" stroke=\"" << kModeColours[f % kModeColours.size()]
            << "\" stroke-width=\"0.25\"/>\n";
      }
      if (a.ground_truth) {
        svg << "<polyline data-agent=\"" << a.agent_id << "\" points=\"" << points(*a.ground_truth)
            << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.2\" stroke-dasharray=\"0.6,0.4\"/>\n";
      }
    }
    svg << "</g>\n";
  }

  if (layers.traces) {
    svg << "<g id=\"traces\">\n";
    for (const auto & [id, line] : *layers.traces) {
      svg << "<polyline data-agent=\"" << id << "\" points=\"" << points(line)
          << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"0.25\"/>\n";
    }
    svg << "</g>\n";
  }

  if (layers.key_positions) {
    svg << "<g id=\"key_positions\">\n";
    for (const auto & a : layers.key_positions->agents) {
      for (std::size_t f = 0; f < a.modes.size(); ++f) {
        for (const auto & kp : a.modes[f]) {
          svg << "<circle cx=\"" << fmt(kp.x) << "\" cy=\"" << fmt(-kp.y) << "\" r=\"0.5\" fill=\""
              << kModeColours[f % kModeColours.size()] << "\" stroke=\"#000000\" stroke-width=\"0.08\"/>\n";
        }
      }
    }
    svg << "</g>\n";
  }

  svg << "<g id=\"agents\">\n";
  for (const auto & a : scene.agents) {
    std::vector<Vec2> hist;
    for (const auto & p : a.history) {
      hist.push_back(p.position());
    }
    svg << "<polyline data-agent=\"" << a.id << "\" points=\"" << points(hist)
        << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"0.3\"/>\n";
    svg << "<circle cx=\"" << fmt(a.last_position().x) << "\" cy=\"" << fmt(-a.last_position().y)
        << "\" r=\"0.8\" fill=\"#444444\"/>\n";
    svg << "<text x=\"" << fmt(a.last_position().x + 1.0) << "\" y=\"" << fmt(-a.last_position().y - 1.0)
        << "\" font-size=\"2\" fill=\"#222222\">" << a.id << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

std::map<std::string, Trajectory> read_trace_csv(std::istream & in)
{
  std::map<std::string, Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  // Leading comment lines carry the run configuration.
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("#", 0) != 0) {
      break;
    }
  }
  if (line.rfind("step,agent_id,x,y", 0) != 0) {
    throw ParseError("episode trace: missing or unexpected header");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() < 4) {
      throw ParseError("episode trace line " + std::to_string(line_no) + ": too few columns");
    }
    try {
      out[cells[1]].push_back({std::stod(cells[2]), std::stod(cells[3])});
    } catch (const std::exception &) {
      throw ParseError("episode trace line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

}  // namespace hybridpred
