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

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sdgjudge/prompting.hpp"

namespace sdgjudge {

struct Verdict {
  Label label = Label::kNonRelevant;
  std::string reasoning;
  std::string raw_text;  // model output, verbatim

  bool operator==(const Verdict&) const = default;
};

struct ParseFailure {
  std::string raw_text;
  std::string reason;

  bool operator==(const ParseFailure&) const = default;
};

struct BackendFailure {
  std::string error;   // error class, e.g. "backend unavailable"
  std::string message;

  bool operator==(const BackendFailure&) const = default;
};

using Outcome = std::variant<Verdict, ParseFailure, BackendFailure>;

/// One document judged by one model for one goal.
struct JudgedRecord {
  std::string doc_key;
  int goal_number = 0;
  std::string model_id;
  std::string prompt_digest;
  Outcome outcome;
  int attempts = 0;
  bool from_cache = false;

  std::optional<Label> label() const;
  bool operator==(const JudgedRecord&) const = default;
};

/// Line format of verdicts.jsonl and of the cache journal. `from_cache` is
/// run provenance and is not serialized; run manifests count it instead.
nlohmann::json judged_record_to_json(const JudgedRecord& record);
JudgedRecord judged_record_from_json(const nlohmann::json& j);

struct RunResult {
  std::string run_id;
  int goal_number = 0;
  std::string model_id;
  std::string prompt_digest;
  std::vector<JudgedRecord> records;
  std::size_t skipped = 0;  // documents not labeled with the goal
  std::chrono::system_clock::time_point started{};
  std::chrono::system_clock::time_point finished{};

  struct Counts {
    std::size_t relevant = 0;
    std::size_t nonrelevant = 0;
    std::size_t parse_failures = 0;
    std::size_t backend_failures = 0;
    std::size_t from_cache = 0;
  };
  Counts counts() const;
};

/// Content equality: run identity, goal, model, digest, records and skip
/// count. Timestamps and cache provenance are ignored.
bool same_content(const RunResult& a, const RunResult& b);

}  // namespace sdgjudge
