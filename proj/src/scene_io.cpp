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

#include "hybridpred/scene_io.hpp"

#include "hybridpred/errors.hpp"

#include <fstream>
#include <sstream>

namespace hybridpred
{

namespace
{

using nlohmann::json;

const json & field(const json & obj, const char * key, const std::string & path)
{
  if (!obj.is_object()) {
    throw ParseError(path + ": expected an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(path + "." + key + ": missing field");
  }
  return *it;
}

double number(const json & v, const std::string & path)
{
  if (!v.is_number()) {
    throw ParseError(path + ": expected a number");
  }
  return v.get<double>();
}

std::string text(const json & v, const std::string & path)
{
  if (!v.is_string()) {
    throw ParseError(path + ": expected a string");
  }
  return v.get<std::string>();
}

const json & array(const json & v, const std::string & path)
{
  if (!v.is_array()) {
    throw ParseError(path + ": expected an array");
  }
  return v;
}

Polyline polyline(const json & v, const std::string & path)
{
  Polyline out;
  const auto & arr = array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const auto & pt = array(arr[i], p);
    if (pt.size() != 2) {
      throw ParseError(p + ": expected [x, y]");
    }
    out.push_back({number(pt[0], p + "[0]"), number(pt[1], p + "[1]")});
  }
  return out;
}

std::vector<std::string> ids(const json & v, const std::string & path)
{
  std::vector<std::string> out;
  const auto & arr = array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(text(arr[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<TimedPoint> states(const json & v, const std::string & path)
{
  std::vector<TimedPoint> out;
  const auto & arr = array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const auto & s = array(arr[i], p);
    if (s.size() != 3) {
      throw ParseError(p + ": expected [t, x, y]");
    }
    out.push_back({number(s[0], p + "[0]"), number(s[1], p + "[1]"), number(s[2], p + "[2]")});
  }
  return out;
}

json to_json(const Polyline & line)
{
  json arr = json::array();
  for (const auto & p : line) {
    arr.push_back({p.x, p.y});
  }
  return arr;
}

json to_json(const std::vector<TimedPoint> & s)
{
  json arr = json::array();
  for (const auto & p : s) {
    arr.push_back({p.t, p.x, p.y});
  }
  return arr;
}

}  // namespace

json scene_to_json(const Scene & scene)
{
  json lanelets = json::array();
  for (const auto & [id, l] : scene.lanelets) {
    lanelets.push_back(
      {{"id", l.id},
       {"centerline", to_json(l.centerline)},
       {"left_boundary", to_json(l.left_boundary)},
       {"right_boundary", to_json(l.right_boundary)},
       {"successors", l.successors},
       {"predecessors", l.predecessors},
       {"left_neighbor", l.left_neighbor},
       {"right_neighbor", l.right_neighbor},
       {"direction_attr", to_string(l.direction_attr)},
       {"passable", to_string(l.passable)}});
  }
  json agents = json::array();
  for (const auto & a : scene.agents) {
    json obj = {{"id", a.id}, {"history", to_json(a.history)}};
    if (a.future_gt) {
      obj["future_gt"] = to_json(*a.future_gt);
    }
    agents.push_back(std::move(obj));
  }
  return {{"lanelets", std::move(lanelets)}, {"agents", std::move(agents)}};
}

Scene scene_from_json(const json & j)
{
  Scene scene;
  const auto & lanelets = array(field(j, "lanelets", "scene"), "lanelets");
  for (std::size_t i = 0; i < lanelets.size(); ++i) {
    const std::string p = "lanelets[" + std::to_string(i) + "]";
    const auto & o = lanelets[i];
    Lanelet l;
    l.id = text(field(o, "id", p), p + ".id");
    l.centerline = polyline(field(o, "centerline", p), p + ".centerline");
    l.left_boundary = polyline(field(o, "left_boundary", p), p + ".left_boundary");
    l.right_boundary = polyline(field(o, "right_boundary", p), p + ".right_boundary");
    l.successors = ids(field(o, "successors", p), p + ".successors");
    l.predecessors = ids(field(o, "predecessors", p), p + ".predecessors");
    l.left_neighbor = ids(field(o, "left_neighbor", p), p + ".left_neighbor");
    l.right_neighbor = ids(field(o, "right_neighbor", p), p + ".right_neighbor");
    try {
      l.direction_attr = traffic_direction_from_string(text(field(o, "direction_attr", p), p));
      l.passable = passable_from_string(text(field(o, "passable", p), p));
    } catch (const ParseError & e) {
      throw ParseError(p + ": " + e.what());
    }
    if (!scene.lanelets.emplace(l.id, l).second) {
      throw ValidationError("duplicate lanelet id " + l.id);
    }
  }
  const auto & agents = array(field(j, "agents", "scene"), "agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string p = "agents[" + std::to_string(i) + "]";
    const auto & o = agents[i];
    AgentTrack a;
    a.id = text(field(o, "id", p), p + ".id");
    a.history = states(field(o, "history", p), p + ".history");
    if (o.contains("future_gt") && !o.at("future_gt").is_null()) {
      a.future_gt = states(o.at("future_gt"), p + ".future_gt");
    }
    scene.agents.push_back(std::move(a));
  }
  scene.validate();
  scene.derive_headings();
  return scene;
}

json parse_json_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error & e) {
    // nlohmann reports "at line L, column C" in the message.
    throw ParseError(path.string() + ": " + e.what());
  }
}

Scene load_scene(const std::filesystem::path & path)
{
  const json j = parse_json_file(path);
  try {
    return scene_from_json(j);
  } catch (const ParseError & e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError & e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_scene(const Scene & scene, const std::filesystem::path & path, const json & extra)
{
  json j = scene_to_json(scene);
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    j[it.key()] = it.value();
  }
  write_file_atomic(path, dump_json(j));
}

std::string dump_json(const json & j) { return j.dump(2) + "\n"; }

void write_file_atomic(const std::filesystem::path & path, const std::string & contents)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ValidationError("cannot write " + tmp.string());
    }
    out << contents;
    if (!out) {
      throw ValidationError("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hybridpred
