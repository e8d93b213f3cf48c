/*
 *  Copyright 2026 The sdgjudge Authors. All Rights Reserved.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdgjudge/corpus.hpp"
#include "sdgjudge/ensemble.hpp"
#include "sdgjudge/llm_backend.hpp"

namespace sdgjudge::config {

/// Parses the TOML subset used by pipeline configs into JSON: comments,
/// [table], [[array of tables]], bare keys, basic and literal strings,
/// integers, floats, booleans and (possibly multi-line) arrays of those.
/// Throws kConfig with the line number on anything else.
nlohmann::json parse_toml(std::string_view text);

struct EnsembleConfig {
  ensemble::Rule rule = ensemble::Rule::kMajority;
  std::vector<std::string> members;  // also the cascade stage order
};

struct PipelineConfig {
  std::filesystem::path base_dir;  // relative paths below are resolved against it

  std::vector<std::filesystem::path> corpus_inputs;
  corpus::InputFormat input_format = corpus::InputFormat::kCsv;
  std::filesystem::path corpus_path;
  std::optional<std::filesystem::path> copyright_patterns;

  std::filesystem::path registry_path;
  std::vector<std::filesystem::path> prompt_specs;

  std::vector<llm::ModelConfig> models;
  EnsembleConfig ensemble;
  std::optional<std::filesystem::path> cache_path;
  std::filesystem::path out_dir;

  int workers = 4;
  int reasks = 1;
  double chars_per_token = 3.0;
};

/// Built-in defaults: the shipped registry and SDG 1 prompt from
/// `data_dir`, no models, outputs under ./sdgjudge-out.
PipelineConfig default_config(const std::filesystem::path& data_dir);

/// Reads a .toml (or .json) config. Sections: [corpus], [registry],
/// [prompt], [evaluation], [[models]], [ensemble], [cache], [output].
/// Missing keys fall back to default_config(data_dir). Referenced registry,
/// prompt and pattern files must exist (kConfig).
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::filesystem::path& data_dir);

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                const std::filesystem::path& data_dir);

}  // namespace sdgjudge::config
