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
#include "sdgjudge/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <boost/regex.hpp>

#include "sdgjudge/digest.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/log.hpp"
#include "text_util.hpp"

namespace sdgjudge::evaluation {

namespace {

// Hyphen, space, underscore, en dash or em dash between "non" and
// "relevant".
constexpr const char* kLabelToken =
    R"(\b(non(?:[\s_\-]|\xE2\x80[\x93\x94])*relevant|not\s+relevant|relevant)\b)";

const boost::regex& label_re() {
  static const boost::regex re(kLabelToken, boost::regex::perl | boost::regex::icase);
  return re;
}

const boost::regex& classification_re() {
  static const boost::regex re(std::string(R"(classification\**\s*:[\s*"'\[]*)") +
                                   kLabelToken,
                               boost::regex::perl | boost::regex::icase);
  return re;
}

const boost::regex& reasoning_re() {
  static const boost::regex re(R"(reasoning\**\s*:\**)", boost::regex::perl | boost::regex::icase);
  return re;
}

Label token_label(std::string_view token) {
  const std::string lower = detail::to_lower_ascii(token);
  return lower == "relevant" ? Label::kRelevant : Label::kNonRelevant;
}

std::set<Label> labels_in(std::string::const_iterator begin, std::string::const_iterator end) {
  std::set<Label> found;
  for (boost::sregex_iterator it(begin, end, label_re()), stop; it != stop; ++it) {
    found.insert(token_label(it->str(1)));
  }
  return found;
}

std::string_view strip_leading_punct(std::string_view s) {
  s = detail::trim(s);
  while (!s.empty() && (s.front() == '.' || s.front() == ':' || s.front() == '-' ||
                        s.front() == ',' || s.front() == ';' || s.front() == '*' ||
                        s.front() == ')' || s.front() == ']' || detail::is_space(s.front()))) {
    s.remove_prefix(1);
  }
  if (s.rfind("\xE2\x80\x94", 0) == 0 || s.rfind("\xE2\x80\x93", 0) == 0) {
    return strip_leading_punct(s.substr(3));
  }
  return s;
}

}  // namespace

ParseResult parse_verdict(std::string_view text_view) {
  const std::string text(text_view);
  try {
    boost::smatch cls;
    if (boost::regex_search(text, cls, classification_re())) {
      const Label label = token_label(cls.str(1));
      boost::smatch rsn;
      if (boost::regex_search(cls[0].second, text.cend(), rsn, reasoning_re())) {
        const auto between = labels_in(cls[0].second, rsn[0].first);
        if (!between.empty() && *between.begin() != label) {
          return ParseFailure{text, "conflicting labels after CLASSIFICATION"};
        }
        const auto reasoning = detail::trim(std::string_view(text).substr(
            static_cast<std::size_t>(rsn[0].second - text.cbegin())));
        if (!reasoning.empty()) return Verdict{label, std::string(reasoning), text};
      }
    }

    std::size_t scan = std::min(text.size(), kFallbackScanChars);
    while (scan < text.size() && scan > 0 &&
           (static_cast<unsigned char>(text[scan]) & 0xC0) == 0x80) {
      --scan;
    }
    const auto scan_end = text.cbegin() + static_cast<std::ptrdiff_t>(scan);
    boost::smatch first;
    if (!boost::regex_search(text.cbegin(), scan_end, first, label_re())) {
      return ParseFailure{text, "no label in the first 200 characters"};
    }
    const auto found = labels_in(text.cbegin(), scan_end);
    if (found.size() > 1) {
      return ParseFailure{text, "both labels in the first 200 characters"};
    }
    const Label label = token_label(first.str(1));
    const auto offset = static_cast<std::size_t>(first[0].second - text.cbegin());
    std::string_view reasoning = strip_leading_punct(std::string_view(text).substr(offset));
    if (reasoning.empty()) {
      // A bare "CLASSIFICATION: <label>" has no reasoning on either side.
      static const boost::regex tag(R"(^\W*classification\W*$)",
                                    boost::regex::perl | boost::regex::icase);
      reasoning = detail::trim(std::string_view(text).substr(
          0, static_cast<std::size_t>(first[0].first - text.cbegin())));
      if (boost::regex_match(reasoning.begin(), reasoning.end(), tag)) reasoning = {};
    }
    if (reasoning.empty()) return ParseFailure{text, "label without reasoning"};
    return Verdict{label, std::string(reasoning), text};
  } catch (const std::exception& e) {
    return ParseFailure{text, std::string("parser error: ") + e.what()};
  }
}

// ---------------------------------------------------------------------------

EvaluationAgent::EvaluationAgent(const registry::Registry& reg, prompting::PromptSpec spec,
                                 llm::Backend& backend, int context_window_tokens,
                                 store::ResultCache* cache, JudgeOptions options)
    : registry_(reg),
      spec_(std::move(spec)),
      backend_(backend),
      cache_(cache),
      options_(options),
      digest_(prompting::prompt_digest(spec_, reg)),
      budget_(prompting::user_char_budget(spec_, reg, context_window_tokens,
                                         options.chars_per_token)) {
  if (options_.reasks < 0) throw Error(ErrorCode::kConfig, "reasks must be >= 0");
}

JudgedRecord EvaluationAgent::judge(const corpus::Document& doc) const {
  const int goal = spec_.goal_number;
  if (!doc.sdg_labels.count(goal)) {
    log::warn("document " + doc.doc_key + " is not labeled with goal " + std::to_string(goal) +
              "; judging anyway");
  }
  const store::CacheKey key{doc.doc_key, goal, backend_.model_id(), digest_, spec_.decoding};
  if (cache_ != nullptr) {
    if (auto hit = cache_->get(key)) return std::move(*hit);
  }

  JudgedRecord record;
  record.doc_key = doc.doc_key;
  record.goal_number = goal;
  record.model_id = backend_.model_id();
  record.prompt_digest = digest_;

  prompting::MessageSequence messages;
  try {
    messages = prompting::assemble_prompt(spec_, registry_, doc, budget_);
  } catch (const Error& e) {
    record.outcome = BackendFailure{"prompt assembly", e.what()};
    return record;
  }

  prompting::Decoding decoding = spec_.decoding;
  bool cacheable = false;
  for (int ask = 0; ask <= options_.reasks; ++ask) {
    try {
      const auto completion = backend_.complete({&messages, decoding, doc.doc_key});
      record.attempts += completion.attempts;
      auto parsed = parse_verdict(completion.text);
      cacheable = true;
      if (auto* verdict = std::get_if<Verdict>(&parsed)) {
        record.outcome = std::move(*verdict);
        break;
      }
      record.outcome = std::get<ParseFailure>(std::move(parsed));
      decoding.temperature = 0.0;
    } catch (const llm::BackendError& e) {
      record.attempts += e.attempts();
      record.outcome = BackendFailure{std::string(error_code_name(e.code())), e.what()};
      cacheable = false;
      break;
    } catch (const Error& e) {
      record.outcome = BackendFailure{std::string(error_code_name(e.code())), e.what()};
      cacheable = false;
      break;
    }
  }

  // Backend failures are transient facts about the run, not about the
  // document, so they are not cached.
  if (cache_ != nullptr && cacheable) {
    try {
      cache_->put(key, record);
    } catch (const Error& e) {
      log::warn(std::string("cache write failed, continuing uncached: ") + e.what());
    }
  }
  return record;
}

RunResult EvaluationAgent::judge_corpus(const std::vector<corpus::Document>& docs,
                                        int workers) const {
  if (workers < 1) throw Error(ErrorCode::kConfig, "workers must be >= 1");
  RunResult run;
  run.goal_number = spec_.goal_number;
  run.model_id = backend_.model_id();
  run.prompt_digest = digest_;
  run.started = std::chrono::system_clock::now();

  std::vector<const corpus::Document*> selected;
  std::set<std::string> seen;
  for (const auto& doc : docs) {
    if (!doc.sdg_labels.count(spec_.goal_number)) {
      ++run.skipped;
      continue;
    }
    if (!seen.insert(doc.doc_key).second) {
      throw Error(ErrorCode::kValidation, "corpus is not deduplicated: " + doc.doc_key);
    }
    selected.push_back(&doc);
  }

  std::vector<JudgedRecord> results(selected.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= selected.size()) return;
      try {
        results[i] = judge(*selected[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(selected.size());
        return;
      }
    }
  };
  const int pool = std::max(1, std::min(workers, backend_.max_concurrent()));
  {
    std::vector<std::jthread> threads;
    for (int t = 1; t < pool; ++t) threads.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  run.records = std::move(results);
  run.run_id = make_run_id(run.goal_number, run.model_id, run.prompt_digest, run.records);
  run.finished = std::chrono::system_clock::now();
  return run;
}

JudgedRecord judge_document(const corpus::Document& doc, int goal,
                            const prompting::PromptSpec& spec, llm::Backend& backend,
                            int context_window_tokens, store::ResultCache* cache,
                            const registry::Registry& reg, JudgeOptions options) {
  if (spec.goal_number != goal) {
    throw Error(ErrorCode::kConfig, "prompt spec is for goal " + std::to_string(spec.goal_number) +
                                        ", not " + std::to_string(goal));
  }
  return EvaluationAgent(reg, spec, backend, context_window_tokens, cache, options).judge(doc);
}

RunResult judge_corpus(const std::vector<corpus::Document>& docs, int goal,
                       const prompting::PromptSpec& spec, llm::Backend& backend,
                       int context_window_tokens, store::ResultCache* cache,
                       const registry::Registry& reg, int workers, JudgeOptions options,
                       const std::optional<std::filesystem::path>& persist_dir) {
  if (spec.goal_number != goal) {
    throw Error(ErrorCode::kConfig, "prompt spec is for goal " + std::to_string(spec.goal_number) +
                                        ", not " + std::to_string(goal));
  }
  EvaluationAgent agent(reg, spec, backend, context_window_tokens, cache, options);
  RunResult run = agent.judge_corpus(docs, workers);
  if (persist_dir) store::write_run(run, *persist_dir);
  return run;
}

std::string make_run_id(int goal, const std::string& model_id, const std::string& digest,
                        const std::vector<JudgedRecord>& records) {
  std::string material = std::to_string(goal) + "\n" + model_id + "\n" + digest + "\n";
  for (const auto& r : records) {
    material += r.doc_key;
    material += '\n';
  }
  return sha256_hex(material).substr(0, 16);
}

}  // namespace sdgjudge::evaluation
