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
#include "sdgjudge/corpus.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>

#include "httplib.h"
#include "http_util.hpp"
#include "sdgjudge/digest.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/log.hpp"
#include "text_util.hpp"

namespace sdgjudge::corpus {

using nlohmann::json;

InputFormat parse_input_format(std::string_view name) {
  const std::string lower = detail::to_lower_ascii(name);
  if (lower == "csv") return InputFormat::kCsv;
  if (lower == "jsonl") return InputFormat::kJsonl;
  throw Error(ErrorCode::kInvalidArgument, "unknown input format '" + std::string(name) + "'");
}

std::string_view rejection_reason_name(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::kMissingTitle: return "missing_title";
    case RejectionReason::kMissingAbstract: return "missing_abstract";
    case RejectionReason::kEmptyAfterCleaning: return "empty_after_cleaning";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

std::optional<std::string> non_empty(std::string_view s) {
  if (detail::trim(s).empty()) return std::nullopt;
  return std::string(s);
}

int parse_int_field(std::string_view raw, const char* field) {
  const auto s = detail::trim(raw);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParse,
                std::string("field '") + field + "' is not an integer: '" + std::string(s) + "'");
  }
  return value;
}

void check_record(const RawRecord& r) {
  if (detail::trim(r.source_id).empty()) {
    throw Error(ErrorCode::kParse, "source_id is empty");
  }
  if (!is_valid_goal(r.sdg_query_label)) {
    throw Error(ErrorCode::kParse,
                "sdg_query_label " + std::to_string(r.sdg_query_label) + " outside 1..17");
  }
}

// RFC 4180 reader. Returns false at end of input. Quoted fields may span
// lines; an unterminated quote throws kParse.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : text_(std::istreambuf_iterator<char>(in), {}) {
    if (text_.rfind("\xEF\xBB\xBF", 0) == 0) pos_ = 3;
  }

  bool next(std::vector<std::string>& fields) {
    fields.clear();
    if (pos_ >= text_.size()) return false;
    std::string field;
    bool quoted = false;
    bool after_quote = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
            after_quote = true;
          }
        } else {
          field.push_back(c);
        }
        continue;
      }
      if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        fields.push_back(std::move(field));
        return true;
      } else if (c == '"' && field.empty() && !after_quote) {
        quoted = true;
      } else {
        field.push_back(c);
      }
    }
    if (quoted) throw Error(ErrorCode::kParse, "unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
};

IngestResult ingest_csv(std::istream& in) {
  IngestResult result;
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) return result;
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    column.emplace(std::string(detail::trim(header[i])), i);
  }
  for (const char* required : {"source_id", "sdg_query_label"}) {
    if (!column.count(required)) {
      throw Error(ErrorCode::kParse, std::string("CSV header lacks column '") + required + "'");
    }
  }
  auto get = [&](const std::vector<std::string>& row, const char* name) -> std::string_view {
    const auto it = column.find(name);
    if (it == column.end() || it->second >= row.size()) return {};
    return row[it->second];
  };

  std::vector<std::string> row;
  std::size_t row_number = 0;
  while (true) {
    try {
      if (!reader.next(row)) break;
    } catch (const Error& e) {
      result.errors.push_back({row_number + 1, e.what()});
      break;
    }
    if (row.size() == 1 && detail::trim(row[0]).empty()) continue;  // blank line
    ++row_number;
    try {
      if (row.size() != header.size()) {
        throw Error(ErrorCode::kParse, "expected " + std::to_string(header.size()) +
                                           " fields, found " + std::to_string(row.size()));
      }
      RawRecord r;
      r.source_id = std::string(detail::trim(get(row, "source_id")));
      r.doi = non_empty(get(row, "doi"));
      r.title = non_empty(get(row, "title"));
      r.abstract = non_empty(get(row, "abstract"));
      if (const auto y = get(row, "year"); !detail::trim(y).empty()) {
        r.year = parse_int_field(y, "year");
      }
      r.venue = non_empty(get(row, "venue"));
      r.sdg_query_label = parse_int_field(get(row, "sdg_query_label"), "sdg_query_label");
      r.source = RecordSource::kFile;
      check_record(r);
      result.records.push_back(std::move(r));
    } catch (const Error& e) {
      result.errors.push_back({row_number, e.what()});
    }
  }
  return result;
}

std::optional<std::string> json_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kParse, std::string("field '") + key + "' is not a string");
  }
  return non_empty(it->get_ref<const std::string&>());
}

std::optional<int> json_int(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return it->get<int>();
  if (it->is_string()) {
    if (detail::trim(it->get_ref<const std::string&>()).empty()) return std::nullopt;
    return parse_int_field(it->get_ref<const std::string&>(), key);
  }
  throw Error(ErrorCode::kParse, std::string("field '") + key + "' is not an integer");
}

IngestResult ingest_jsonl(std::istream& in) {
  IngestResult result;
  std::string line;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row_number;
    try {
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object()) throw Error(ErrorCode::kParse, "line is not a JSON object");
      RawRecord r;
      const auto id = obj.find("source_id");
      if (id == obj.end() || !(id->is_string() || id->is_number_integer())) {
        throw Error(ErrorCode::kParse, "source_id missing");
      }
      r.source_id = id->is_string() ? id->get<std::string>() : std::to_string(id->get<long long>());
      r.doi = json_string(obj, "doi");
      r.title = json_string(obj, "title");
      r.abstract = json_string(obj, "abstract");
      r.year = json_int(obj, "year");
      r.venue = json_string(obj, "venue");
      const auto label = json_int(obj, "sdg_query_label");
      if (!label) throw Error(ErrorCode::kParse, "sdg_query_label missing");
      r.sdg_query_label = *label;
      r.source = RecordSource::kFile;
      check_record(r);
      result.records.push_back(std::move(r));
    } catch (const Error& e) {
      result.errors.push_back({row_number, e.what()});
    }
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "stream read failure");
  return result;
}

}  // namespace

IngestResult ingest_records(std::istream& in, InputFormat format) {
  if (!in.good()) throw Error(ErrorCode::kIo, "input stream is not readable");
  return format == InputFormat::kCsv ? ingest_csv(in) : ingest_jsonl(in);
}

IngestResult ingest_file(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open input file " + path.string());
  return ingest_records(in, format);
}

// ---------------------------------------------------------------------------
// Copyright stripping
// ---------------------------------------------------------------------------

const std::vector<std::string>& CopyrightStripper::default_patterns() {
  // A statement runs to the first sentence end (a period followed by
  // whitespace or end of text) or to end of text. "B.V." does not end it.
  static const std::vector<std::string> kPatterns = {
      R"(copyright\s*(?:©|\(c\))?\s*(?:\d{4}|©|\(c\)).*?(?:\.(?=\s|$)|$))",
      R"(©.*?(?:\.(?=\s|$)|$))",
      R"(\(c\)\s*\d{4}.*?(?:\.(?=\s|$)|$))",
      R"(all\s+rights\s+reserved\.?)",
  };
  return kPatterns;
}

CopyrightStripper::CopyrightStripper() : CopyrightStripper(default_patterns()) {}

CopyrightStripper::CopyrightStripper(std::vector<std::string> patterns)
    : sources_(std::move(patterns)) {
  compiled_.reserve(sources_.size());
  for (const auto& p : sources_) {
    try {
      compiled_.emplace_back(p, boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
      throw Error(ErrorCode::kConfig, "invalid copyright pattern '" + p + "': " + e.what());
    }
  }
}

CopyrightStripper CopyrightStripper::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open pattern file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "pattern file " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kConfig, "pattern file must hold a JSON array");
  std::vector<std::string> patterns;
  for (const auto& p : j) {
    if (!p.is_string()) throw Error(ErrorCode::kConfig, "pattern entries must be strings");
    patterns.push_back(p.get<std::string>());
  }
  return CopyrightStripper(std::move(patterns));
}

std::string CopyrightStripper::strip(std::string_view text) const {
  std::string current = detail::collapse_whitespace(text);
  // Removal can only shrink the text, so this terminates.
  while (true) {
    std::string next = current;
    for (const auto& re : compiled_) {
      next = boost::regex_replace(next, re, " ");
    }
    next = detail::collapse_whitespace(next);
    if (next == current) return next;
    current = std::move(next);
  }
}

bool CopyrightStripper::contains_statement(std::string_view text) const {
  const std::string s(text);
  for (const auto& re : compiled_) {
    if (boost::regex_search(s, re)) return true;
  }
  return false;
}

std::string strip_copyright(std::string_view text) {
  static const CopyrightStripper kDefault;
  return kDefault.strip(text);
}

// ---------------------------------------------------------------------------
// Validation and merging
// ---------------------------------------------------------------------------

std::string normalize_title(std::string_view title) {
  std::string kept;
  kept.reserve(title.size());
  for (unsigned char c : title) {
    if (c < 0x80 && std::ispunct(c)) continue;
    kept.push_back(static_cast<char>(c));
  }
  return detail::collapse_whitespace(detail::to_lower_ascii(kept));
}

std::string make_doc_key(const std::optional<std::string>& doi, std::string_view title) {
  if (doi) {
    const auto trimmed = detail::trim(*doi);
    if (!trimmed.empty()) return detail::to_lower_ascii(trimmed);
  }
  return sha256_hex(normalize_title(title));
}

ValidationResult validate_record(const RawRecord& record, const CopyrightStripper& stripper) {
  if (!record.title || detail::trim(*record.title).empty()) {
    return RejectionRecord{record.source_id, RejectionReason::kMissingTitle};
  }
  if (!record.abstract || detail::trim(*record.abstract).empty()) {
    return RejectionRecord{record.source_id, RejectionReason::kMissingAbstract};
  }
  std::string cleaned = stripper.strip(*record.abstract);
  if (cleaned.empty()) {
    return RejectionRecord{record.source_id, RejectionReason::kEmptyAfterCleaning};
  }
  Document doc;
  doc.title = detail::collapse_whitespace(*record.title);
  doc.abstract = std::move(cleaned);
  if (record.doi && !detail::trim(*record.doi).empty()) {
    doc.doi = std::string(detail::trim(*record.doi));
  }
  doc.doc_key = make_doc_key(doc.doi, doc.title);
  doc.year = record.year;
  doc.sdg_labels = {record.sdg_query_label};
  return doc;
}

MergeResult merge_duplicates(std::vector<Document> docs) {
  MergeResult result;
  std::unordered_map<std::string, std::size_t> index;
  for (auto& doc : docs) {
    const auto [it, inserted] = index.emplace(doc.doc_key, result.documents.size());
    if (inserted) {
      result.documents.push_back(std::move(doc));
      continue;
    }
    Document& first = result.documents[it->second];
    if (first.doi && doc.doi && *first.doi != *doc.doi) {
      std::string warning = "doc_key " + doc.doc_key + ": differing DOIs '" + *first.doi +
                            "' and '" + *doc.doi + "', keeping the first";
      log::warn(warning);
      result.warnings.push_back(std::move(warning));
    }
    if (!first.doi && doc.doi) first.doi = doc.doi;
    first.sdg_labels.insert(doc.sdg_labels.begin(), doc.sdg_labels.end());
    ++result.merged;
  }
  return result;
}

BuildSummary build_corpus(const IngestResult& ingested, const CopyrightStripper& stripper) {
  BuildSummary summary;
  summary.ingested = ingested.records.size() + ingested.errors.size();
  summary.row_errors = ingested.errors.size();
  summary.errors = ingested.errors;
  std::vector<Document> valid;
  for (const auto& record : ingested.records) {
    auto outcome = validate_record(record, stripper);
    if (auto* doc = std::get_if<Document>(&outcome)) {
      valid.push_back(std::move(*doc));
    } else {
      const auto& rejection = std::get<RejectionRecord>(outcome);
      log::info("rejected " + rejection.source_id + ": " +
                std::string(rejection_reason_name(rejection.reason)));
      summary.rejections.push_back(rejection);
    }
  }
  summary.rejected = summary.rejections.size();
  summary.valid = valid.size();
  auto merged = merge_duplicates(std::move(valid));
  summary.merged = merged.merged;
  summary.warnings = std::move(merged.warnings);
  summary.documents = std::move(merged.documents);
  return summary;
}

// ---------------------------------------------------------------------------
// Corpus files
// ---------------------------------------------------------------------------

json document_to_json(const Document& doc) {
  json j;
  j["doc_key"] = doc.doc_key;
  j["doi"] = doc.doi ? json(*doc.doi) : json(nullptr);
  j["title"] = doc.title;
  j["abstract"] = doc.abstract;
  j["year"] = doc.year ? json(*doc.year) : json(nullptr);
  j["sdg_labels"] = json(std::vector<int>(doc.sdg_labels.begin(), doc.sdg_labels.end()));
  return j;
}

Document document_from_json(const json& j) {
  try {
    Document doc;
    doc.doc_key = j.at("doc_key").get<std::string>();
    if (j.contains("doi") && !j["doi"].is_null()) doc.doi = j["doi"].get<std::string>();
    doc.title = j.at("title").get<std::string>();
    doc.abstract = j.at("abstract").get<std::string>();
    if (j.contains("year") && !j["year"].is_null()) doc.year = j["year"].get<int>();
    for (const auto& label : j.at("sdg_labels")) doc.sdg_labels.insert(label.get<int>());
    if (doc.doc_key.empty() || doc.title.empty() || doc.abstract.empty() ||
        doc.sdg_labels.empty()) {
      throw Error(ErrorCode::kParse, "corpus document has empty required fields");
    }
    for (int label : doc.sdg_labels) {
      if (!is_valid_goal(label)) throw Error(ErrorCode::kParse, "corpus label outside 1..17");
    }
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("corpus document: ") + e.what());
  }
}

void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write corpus file " + path.string());
  for (const auto& doc : docs) out << document_to_json(doc).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<Document> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open corpus file " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      docs.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Search API client
// ---------------------------------------------------------------------------

namespace {

RawRecord entry_to_record(const json& entry, int sdg_label) {
  RawRecord r;
  r.source = RecordSource::kApi;
  r.sdg_query_label = sdg_label;
  if (auto id = json_string(entry, "dc:identifier")) {
    r.source_id = *id;
  } else if (auto eid = json_string(entry, "eid")) {
    r.source_id = *eid;
  } else {
    throw Error(ErrorCode::kMalformedResponse, "search entry without identifier");
  }
  r.doi = json_string(entry, "prism:doi");
  r.title = json_string(entry, "dc:title");
  r.abstract = json_string(entry, "dc:description");
  r.venue = json_string(entry, "prism:publicationName");
  if (auto date = json_string(entry, "prism:coverDate"); date && date->size() >= 4) {
    int year = 0;
    const auto [ptr, ec] = std::from_chars(date->data(), date->data() + 4, year);
    if (ec == std::errc() && ptr == date->data() + 4) r.year = year;
  }
  return r;
}

}  // namespace

RetrievalPage fetch_scopus_page(const RetrievalConfig& config, std::string_view query,
                                int sdg_label, const std::optional<std::string>& cursor,
                                const SleepFn& sleep) {
  if (!is_valid_goal(sdg_label)) {
    throw Error(ErrorCode::kInvalidArgument, "sdg label outside 1..17");
  }
  if (config.base_url.empty()) throw Error(ErrorCode::kConfig, "retrieval base_url not set");
  const auto api_key = detail::read_env(config.credential_env);
  if (!api_key) {
    throw Error(ErrorCode::kCredential,
                "credential environment variable '" + config.credential_env + "' is not set");
  }

  const auto url = detail::split_url(config.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  const httplib::Headers headers = {{"X-ELS-APIKey", *api_key}, {"Accept", "application/json"}};
  httplib::Params params = {{"query", std::string(query)},
                            {"count", std::to_string(config.page_size)},
                            {"cursor", cursor.value_or("*")}};
  const std::string path = url.path + "/content/search/scopus";

  std::mt19937_64 rng(std::hash<std::string>{}(std::string(query)));
  for (int attempt = 0;; ++attempt) {
    auto res = client.Get(path, params, headers);
    const bool retryable = !res || res->status == 429;
    if (!retryable) {
      if (detail::is_credential_status(res->status)) {
        throw Error(ErrorCode::kCredential,
                    "search API rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status != 200) {
        throw Error(ErrorCode::kHttp, "search API returned HTTP " + std::to_string(res->status));
      }
      json body;
      try {
        body = json::parse(res->body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kMalformedResponse, std::string("search payload: ") + e.what());
      }
      const auto results = body.find("search-results");
      if (results == body.end() || !results->is_object()) {
        throw Error(ErrorCode::kMalformedResponse, "payload lacks 'search-results'");
      }
      RetrievalPage page;
      if (const auto entries = results->find("entry"); entries != results->end()) {
        if (!entries->is_array()) {
          throw Error(ErrorCode::kMalformedResponse, "'entry' is not an array");
        }
        for (const auto& entry : *entries) {
          if (!entry.is_object()) throw Error(ErrorCode::kMalformedResponse, "entry not object");
          if (entry.contains("error")) continue;  // empty-result marker
          page.records.push_back(entry_to_record(entry, sdg_label));
        }
      }
      bool has_next = false;
      if (const auto links = results->find("link"); links != results->end() && links->is_array()) {
        for (const auto& link : *links) {
          if (link.is_object() && link.value("@ref", "") == "next") has_next = true;
        }
      }
      if (has_next && !page.records.empty()) {
        const auto next = results->find("cursor");
        if (next == results->end() || !next->is_object() || !next->contains("@next") ||
            !(*next)["@next"].is_string()) {
          throw Error(ErrorCode::kMalformedResponse, "next link without cursor");
        }
        page.next_cursor = (*next)["@next"].get<std::string>();
      }
      return page;
    }
    if (attempt >= config.max_retries) {
      throw Error(ErrorCode::kBackendUnavailable,
                  "search API unavailable after " + std::to_string(attempt + 1) + " attempts");
    }
    sleep(config.backoff.delay(attempt, rng));
  }
}

}  // namespace sdgjudge::corpus
