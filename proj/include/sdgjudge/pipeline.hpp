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
#include <vector>

#include "json.hpp"
#include "sdgjudge/config.hpp"

namespace sdgjudge::pipeline {

/// Directory holding one model's run for a goal:
/// <out_dir>/goal<N>/<model id with unsafe characters replaced by '_'>.
std::filesystem::path run_dir(const std::filesystem::path& out_dir, int goal,
                              const std::string& model_id);

/// The commands behind the CLI. Each returns a JSON summary; failures
/// throw sdgjudge::Error.
class Pipeline {
 public:
  explicit Pipeline(config::PipelineConfig cfg);

  config::PipelineConfig& config() { return cfg_; }
  const config::PipelineConfig& config() const { return cfg_; }

  /// Completions come from this script instead of the configured servers.
  void set_replay(std::optional<std::filesystem::path> script) { replay_ = std::move(script); }
  void set_cache_enabled(bool enabled) { cache_enabled_ = enabled; }

  /// Inputs default to the configured ones; the format is taken from the
  /// extension when not given.
  nlohmann::json ingest(const std::vector<std::filesystem::path>& inputs,
                        std::optional<corpus::InputFormat> format,
                        const std::optional<std::filesystem::path>& out);

  /// `models` empty or containing "all" selects every configured model
  /// (or every model in the replay script when none is configured).
  nlohmann::json classify(int goal, const std::optional<std::filesystem::path>& corpus_path,
                          const std::vector<std::string>& models);

  nlohmann::json ensemble(int goal, std::optional<ensemble::Rule> rule,
                          const std::vector<std::filesystem::path>& runs,
                          const std::optional<std::filesystem::path>& out);

  nlohmann::json report(int goal, const std::vector<std::filesystem::path>& runs,
                        const std::optional<std::filesystem::path>& out_dir);

  nlohmann::json cache_stats(const std::optional<std::filesystem::path>& cache_path) const;

  std::filesystem::path cache_path() const;

 private:
  std::vector<std::filesystem::path> default_runs(int goal) const;

  config::PipelineConfig cfg_;
  std::optional<std::filesystem::path> replay_;
  bool cache_enabled_ = true;
};

}  // namespace sdgjudge::pipeline
