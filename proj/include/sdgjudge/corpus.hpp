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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/regex.hpp>

#include "json.hpp"

#include "sdgjudge/retry.hpp"

namespace sdgjudge::corpus {

inline constexpr int kMinGoal = 1;
inline constexpr int kMaxGoal = 17;

inline bool is_valid_goal(int goal) { return goal >= kMinGoal && goal <= kMaxGoal; }

enum class RecordSource { kFile, kApi };
enum class InputFormat { kCsv, kJsonl };

InputFormat parse_input_format(std::string_view name);

/// One retrieval hit for one goal's keyword query.
struct RawRecord {
  std::string source_id;
  std::optional<std::string> doi;
  std::optional<std::string> title;
  std::optional<std::string> abstract;
  std::optional<int> year;
  std::optional<std::string> venue;
  int sdg_query_label = 0;
  RecordSource source = RecordSource::kFile;
};

/// A cleaned, deduplicated bibliographic record.
struct Document {
  std::string doc_key;
  std::optional<std::string> doi;
  std::string title;
  std::string abstract;
  std::optional<int> year;
  std::set<int> sdg_labels;

  bool operator==(const Document&) const = default;
};

enum class RejectionReason { kMissingTitle, kMissingAbstract, kEmptyAfterCleaning };

std::string_view rejection_reason_name(RejectionReason reason);

struct RejectionRecord {
  std::string source_id;
  RejectionReason reason;
};

struct RowError {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string message;
};

struct IngestResult {
  std::vector<RawRecord> records;
  std::vector<RowError> errors;
};

/// Decodes a CSV (header row + RFC 4180 quoting) or JSONL stream. Malformed
/// rows are collected in `errors`; an unreadable stream throws kIo and a
/// missing CSV header column throws kParse.
IngestResult ingest_records(std::istream& in, InputFormat format);
IngestResult ingest_file(const std::filesystem::path& path, InputFormat format);

/// Ordered, case-insensitive list of copyright-statement patterns. Matches
/// are removed repeatedly until none remain, whitespace is collapsed to
/// single spaces and the result is trimmed, so strip() is idempotent.
class CopyrightStripper {
 public:
  /// The shipped default list.
  CopyrightStripper();
  explicit CopyrightStripper(std::vector<std::string> patterns);

  /// Reads a JSON array of ECMAScript regex strings.
  static CopyrightStripper from_file(const std::filesystem::path& path);
  static const std::vector<std::string>& default_patterns();

  std::string strip(std::string_view text) const;
  bool contains_statement(std::string_view text) const;
  const std::vector<std::string>& patterns() const { return sources_; }

 private:
  std::vector<std::string> sources_;
  std::vector<boost::regex> compiled_;
};

std::string strip_copyright(std::string_view text);

/// "doi" lowercased and trimmed when present and non-empty, else the SHA-256
/// hex of the normalized title.
std::string make_doc_key(const std::optional<std::string>& doi, std::string_view title);
/// Lowercase, ASCII punctuation removed, whitespace collapsed and trimmed.
std::string normalize_title(std::string_view title);

using ValidationResult = std::variant<Document, RejectionRecord>;

ValidationResult validate_record(const RawRecord& record,
                                 const CopyrightStripper& stripper = CopyrightStripper());

struct MergeResult {
  std::vector<Document> documents;
  std::size_t merged = 0;  // inputs folded into an earlier document
  std::vector<std::string> warnings;
};

MergeResult merge_duplicates(std::vector<Document> docs);

/// Full file-side preprocessing of a batch.
struct BuildSummary {
  std::size_t ingested = 0;
  std::size_t row_errors = 0;
  std::size_t rejected = 0;
  std::size_t valid = 0;
  std::size_t merged = 0;
  std::vector<RejectionRecord> rejections;
  std::vector<RowError> errors;
  std::vector<std::string> warnings;
  std::vector<Document> documents;
};

BuildSummary build_corpus(const IngestResult& ingested, const CopyrightStripper& stripper);

nlohmann::json document_to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);
void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path);
std::vector<Document> read_corpus(const std::filesystem::path& path);

/// Connection settings for a Scopus-style search API.
struct RetrievalConfig {
  std::string base_url;
  std::string credential_env;  // environment variable holding the API key
  int page_size = 25;
  int max_retries = 3;
  std::chrono::seconds timeout{30};
  BackoffPolicy backoff;
};

struct RetrievalPage {
  std::vector<RawRecord> records;
  std::optional<std::string> next_cursor;  // nullopt at end of results
};

/// GET {base_url}/content/search/scopus?query=..&count=..&cursor=.. and map
/// `search-results.entry[]` to RawRecords tagged with `sdg_label`.
RetrievalPage fetch_scopus_page(const RetrievalConfig& config, std::string_view query,
                                int sdg_label, const std::optional<std::string>& cursor,
                                const SleepFn& sleep = default_sleep());

}  // namespace sdgjudge::corpus
