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

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "sdgjudge/prompting.hpp"
#include "sdgjudge/records.hpp"

namespace sdgjudge::store {

struct CacheKey {
  std::string doc_key;
  int goal_number = 0;
  std::string model_id;
  std::string prompt_digest;
  prompting::Decoding decoding;

  /// Order-fixed JSON array text; decoding rendered at fixed precision.
  std::string canonical() const;
  bool operator==(const CacheKey&) const = default;
};

struct CacheStats {
  std::size_t entries = 0;          // live keys
  std::size_t journal_lines = 0;    // lines read at open plus lines appended
  std::size_t corrupted_lines = 0;  // skipped at open
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t writes = 0;
};

/// Append-only JSONL journal of judged records keyed by CacheKey. Each line
/// is {"key": <canonical>, "doc_key", "goal_number", "model_id",
/// "prompt_digest", "temperature", "max_tokens", "record": {...}}. The
/// newest line for a key wins. Readers share a lock; writes are serialized
/// and fsync'ed before put() returns.
class ResultCache {
 public:
  /// Opens (creating if needed) the journal. Unparseable lines, such as a
  /// torn final line after a crash, are skipped with a warning. The journal
  /// is compacted at open when superseded lines outnumber live entries.
  explicit ResultCache(std::filesystem::path path);
  ~ResultCache();
  ResultCache(const ResultCache&) = delete;
  ResultCache& operator=(const ResultCache&) = delete;

  /// The returned record has from_cache = true.
  std::optional<JudgedRecord> get(const CacheKey& key);
  /// Throws kValidation when the record's identity fields differ from the
  /// key and kIo when the append fails.
  void put(const CacheKey& key, const JudgedRecord& record);

  /// Rewrites the journal with one line per live key (atomic rename).
  void compact();

  CacheStats stats() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void open_for_append();

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  mutable std::mutex stats_mutex_;
  std::unordered_map<std::string, JudgedRecord> entries_;
  std::FILE* file_ = nullptr;
  CacheStats stats_;
};

/// Scans a journal without keeping it open.
CacheStats inspect_cache(const std::filesystem::path& path);

/// Writes `verdicts.jsonl` (one JudgedRecord per line, in record order) and
/// `manifest.json` (run id, digests, counts, timestamps) into `dir`.
void write_run(const RunResult& run, const std::filesystem::path& dir,
               const nlohmann::json& extra_manifest = nlohmann::json::object());

/// Accepts either a run directory or a verdicts.jsonl path. The manifest is
/// optional; without it, goal/model/digest are taken from the records.
RunResult read_run(const std::filesystem::path& path);

}  // namespace sdgjudge::store
