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

#ifndef HYBRIDPRED__SCENE_IO_HPP_
#define HYBRIDPRED__SCENE_IO_HPP_

#include "hybridpred/scene.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace hybridpred
{

nlohmann::json scene_to_json(const Scene & scene);
/// Parses and validates. Errors name the offending field path.
Scene scene_from_json(const nlohmann::json & j);

/// Reads a scene file. Extra top-level keys (such as `run_config`) are
/// ignored.
Scene load_scene(const std::filesystem::path & path);
/// Writes atomically; `extra` top-level keys are merged into the document.
void save_scene(
  const Scene & scene, const std::filesystem::path & path,
  const nlohmann::json & extra = nlohmann::json::object());

/// Parses JSON text, reporting line and column on syntax errors.
nlohmann::json parse_json_file(const std::filesystem::path & path);

/// Writes `text` to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path & path, const std::string & text);

/// Stable serialization used for every artifact (2-space indent, newline).
std::string dump_json(const nlohmann::json & j);

}  // namespace hybridpred

#endif  // HYBRIDPRED__SCENE_IO_HPP_
