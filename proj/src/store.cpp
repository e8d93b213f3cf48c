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
#include "sdgjudge/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <vector>

#include "sdgjudge/digest.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/log.hpp"
#include "text_util.hpp"

namespace sdgjudge::store {

using nlohmann::json;

std::string CacheKey::canonical() const {
  return json::array({doc_key, goal_number, model_id, prompt_digest,
                      fixed_decimal(decoding.temperature), decoding.max_tokens})
      .dump();
}

namespace {

struct JournalLine {
  std::string key;
  JudgedRecord record;
};

JournalLine parse_line(const std::string& line) {
  const json j = json::parse(line);
  JournalLine out{j.at("key").get<std::string>(), judged_record_from_json(j.at("record"))};
  return out;
}

std::string render_line(const CacheKey& key, const JudgedRecord& record) {
  json j = {{"key", key.canonical()},
            {"doc_key", key.doc_key},
            {"goal_number", key.goal_number},
            {"model_id", key.model_id},
            {"prompt_digest", key.prompt_digest},
            {"temperature", fixed_decimal(key.decoding.temperature)},
            {"max_tokens", key.decoding.max_tokens},
            {"record", judged_record_to_json(record)}};
  return j.dump() + "\n";
}

void write_all(std::FILE* f, const std::string& data, const std::filesystem::path& path) {
  if (std::fwrite(data.data(), 1, data.size(), f) != data.size() || std::fflush(f) != 0 ||
      ::fsync(::fileno(f)) != 0) {
    throw Error(ErrorCode::kIo, "write to cache journal " + path.string() + " failed");
  }
}

template <typename Fn>
CacheStats scan_journal(const std::filesystem::path& path, Fn&& on_entry) {
  CacheStats stats;
  std::ifstream in(path, std::ios::binary);
  if (!in) return stats;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    ++stats.journal_lines;
    try {
      on_entry(parse_line(line));
    } catch (const std::exception& e) {
      ++stats.corrupted_lines;
      log::warn("cache " + path.string() + ":" + std::to_string(n) +
                ": skipping unreadable entry (" + e.what() + ")");
    }
  }
  return stats;
}

}  // namespace

ResultCache::ResultCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  stats_ = scan_journal(path_, [this](JournalLine entry) {
    entries_[entry.key] = std::move(entry.record);
  });
  stats_.entries = entries_.size();
  const std::size_t superseded = stats_.journal_lines - entries_.size();
  if (superseded > entries_.size() && stats_.journal_lines >= 64) {
    compact();
  } else {
    open_for_append();
  }
}

ResultCache::~ResultCache() {
  if (file_ != nullptr) std::fclose(file_);
}

void ResultCache::open_for_append() {
  if (file_ != nullptr) std::fclose(file_);
  file_ = std::fopen(path_.c_str(), "ab+");
  if (file_ == nullptr) throw Error(ErrorCode::kIo, "cannot open cache journal " + path_.string());
  // A torn final line must not swallow the next record.
  if (std::fseek(file_, -1, SEEK_END) == 0) {
    const int last = std::fgetc(file_);
    std::fseek(file_, 0, SEEK_END);
    if (last != '\n' && last != EOF) write_all(file_, "\n", path_);
  }
}

std::optional<JudgedRecord> ResultCache::get(const CacheKey& key) {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key.canonical());
  if (it == entries_.end()) {
    std::lock_guard count(stats_mutex_);
    ++stats_.misses;
    return std::nullopt;
  }
  JudgedRecord record = it->second;
  record.from_cache = true;
  std::lock_guard count(stats_mutex_);
  ++stats_.hits;
  return record;
}

void ResultCache::put(const CacheKey& key, const JudgedRecord& record) {
  if (key.doc_key.empty() || key.model_id.empty() || key.prompt_digest.empty()) {
    throw Error(ErrorCode::kValidation, "cache key has empty components");
  }
  if (record.doc_key != key.doc_key || record.goal_number != key.goal_number ||
      record.model_id != key.model_id || record.prompt_digest != key.prompt_digest) {
    throw Error(ErrorCode::kValidation, "record identity does not match cache key for " +
                                            key.doc_key);
  }
  const std::string line = render_line(key, record);
  std::unique_lock lock(mutex_);
  write_all(file_, line, path_);
  JudgedRecord stored = record;
  stored.from_cache = false;
  entries_[key.canonical()] = std::move(stored);
  std::lock_guard count(stats_mutex_);
  ++stats_.writes;
  ++stats_.journal_lines;
  stats_.entries = entries_.size();
}

void ResultCache::compact() {
  std::unique_lock lock(mutex_, std::defer_lock);
  if (file_ != nullptr) lock.lock();  // the constructor calls this unlocked
  const auto tmp = std::filesystem::path(path_.string() + ".compact");
  std::FILE* out = std::fopen(tmp.c_str(), "wb");
  if (out == nullptr) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  std::vector<const std::string*> keys;
  keys.reserve(entries_.size());
  for (const auto& [key, record] : entries_) keys.push_back(&key);
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
  try {
    std::string data;
    for (const auto* key : keys) {
      const auto& record = entries_.at(*key);
      CacheKey k;
      const json parts = json::parse(*key);
      k.doc_key = parts.at(0).get<std::string>();
      k.goal_number = parts.at(1).get<int>();
      k.model_id = parts.at(2).get<std::string>();
      k.prompt_digest = parts.at(3).get<std::string>();
      k.decoding.temperature = std::stod(parts.at(4).get<std::string>());
      k.decoding.max_tokens = parts.at(5).get<int>();
      data += render_line(k, record);
    }
    write_all(out, data, tmp);
  } catch (...) {
    std::fclose(out);
    throw;
  }
  std::fclose(out);
  std::filesystem::rename(tmp, path_);
  {
    std::lock_guard count(stats_mutex_);
    stats_.journal_lines = entries_.size();
  }
  log::info("compacted cache journal " + path_.string() + " to " +
            std::to_string(entries_.size()) + " entries");
  open_for_append();
}

CacheStats ResultCache::stats() const {
  std::lock_guard count(stats_mutex_);
  return stats_;
}

CacheStats inspect_cache(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kNotFound, "cache journal " + path.string() + " does not exist");
  }
  std::unordered_map<std::string, int> keys;
  CacheStats stats = scan_journal(path, [&keys](JournalLine entry) { keys[entry.key] = 1; });
  stats.entries = keys.size();
  return stats;
}

// ---------------------------------------------------------------------------
// Run files
// ---------------------------------------------------------------------------

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_run(const RunResult& run, const std::filesystem::path& dir,
               const json& extra_manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create run directory " + dir.string());
  {
    std::ofstream out(dir / "verdicts.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "verdicts.jsonl").string());
    for (const auto& r : run.records) out << judged_record_to_json(r).dump() << '\n';
    if (!out.flush()) throw Error(ErrorCode::kIo, "write failed in " + dir.string());
  }
  const auto c = run.counts();
  json manifest = {{"run_id", run.run_id},
                   {"goal_number", run.goal_number},
                   {"model_id", run.model_id},
                   {"prompt_digest", run.prompt_digest},
                   {"started", iso8601(run.started)},
                   {"finished", iso8601(run.finished)},
                   {"counts",
                    {{"records", run.records.size()},
                     {"relevant", c.relevant},
                     {"nonrelevant", c.nonrelevant},
                     {"parse_failures", c.parse_failures},
                     {"backend_failures", c.backend_failures},
                     {"skipped", run.skipped},
                     {"cache_hits", c.from_cache}}}};
  for (const auto& [k, v] : extra_manifest.items()) manifest[k] = v;
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out.flush()) throw Error(ErrorCode::kIo, "write failed in " + dir.string());
}

RunResult read_run(const std::filesystem::path& path) {
  std::filesystem::path dir = path;
  std::filesystem::path verdicts = path;
  if (std::filesystem::is_directory(path)) {
    verdicts = path / "verdicts.jsonl";
  } else {
    dir = path.parent_path();
  }
  std::ifstream in(verdicts, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "run file " + verdicts.string() + " not found");

  RunResult run;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      run.records.push_back(judged_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, verdicts.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  if (!run.records.empty()) {
    run.goal_number = run.records.front().goal_number;
    run.model_id = run.records.front().model_id;
    run.prompt_digest = run.records.front().prompt_digest;
  }
  if (std::ifstream mf(dir / "manifest.json"); mf) {
    try {
      const json m = json::parse(mf);
      run.run_id = m.value("run_id", "");
      run.goal_number = m.value("goal_number", run.goal_number);
      run.model_id = m.value("model_id", run.model_id);
      run.prompt_digest = m.value("prompt_digest", run.prompt_digest);
      if (const auto c = m.find("counts"); c != m.end()) run.skipped = c->value("skipped", 0);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "manifest in " + dir.string() + ": " + e.what());
    }
  }
  for (const auto& r : run.records) {
    if (r.goal_number != run.goal_number || r.model_id != run.model_id) {
      throw Error(ErrorCode::kParse, verdicts.string() + " mixes goals or models");
    }
  }
  return run;
}

}  // namespace sdgjudge::store
