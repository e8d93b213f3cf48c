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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "sdgjudge/corpus.hpp"
#include "sdgjudge/llm_backend.hpp"
#include "sdgjudge/prompting.hpp"
#include "sdgjudge/records.hpp"
#include "sdgjudge/registry.hpp"
#include "sdgjudge/store.hpp"

namespace sdgjudge::evaluation {

using ParseResult = std::variant<Verdict, ParseFailure>;

/// Never throws.
///
/// Strict pass: a "CLASSIFICATION: <label>" marker followed somewhere later
/// by "REASONING:"; the reasoning is everything after that marker. The
/// label accepts Relevant and the enumerated Non-Relevant spellings
/// ("non-relevant", "non relevant", "nonrelevant", "not relevant"),
/// case-insensitively.
///
/// Fallback pass: the label tokens found in the first 200 characters. One
/// distinct label yields a Verdict whose reasoning is the text after the
/// first token; both labels, or none, yield ParseFailure.
ParseResult parse_verdict(std::string_view text);

inline constexpr std::size_t kFallbackScanChars = 200;

struct JudgeOptions {
  int reasks = 1;  // extra completions after a ParseFailure
  double chars_per_token = 3.0;
};

/// Judges documents for one (goal, prompt spec, model). The prompt digest
/// and character budget are computed once at construction.
class EvaluationAgent {
 public:
  /// Throws kValidation/kNotFound if the spec does not resolve against the
  /// registry, and kConfig when `context_window_tokens` leaves no room.
  EvaluationAgent(const registry::Registry& reg, prompting::PromptSpec spec,
                  llm::Backend& backend, int context_window_tokens,
                  store::ResultCache* cache = nullptr, JudgeOptions options = {});

  /// Cache lookup, then assemble -> complete -> parse with re-asks on
  /// ParseFailure. Backend errors become BackendFailure records. Judging a
  /// document not labeled with the spec's goal logs a warning.
  JudgedRecord judge(const corpus::Document& doc) const;

  /// Judges every document labeled with the goal, in parallel up to
  /// min(workers, backend max_concurrent). Records keep input order.
  RunResult judge_corpus(const std::vector<corpus::Document>& docs, int workers) const;

  int goal_number() const { return spec_.goal_number; }
  const std::string& prompt_digest() const { return digest_; }
  const std::string& model_id() const { return backend_.model_id(); }
  std::size_t char_budget() const { return budget_; }

 private:
  const registry::Registry& registry_;
  prompting::PromptSpec spec_;
  llm::Backend& backend_;
  store::ResultCache* cache_;
  JudgeOptions options_;
  std::string digest_;
  std::size_t budget_;
};

JudgedRecord judge_document(const corpus::Document& doc, int goal,
                            const prompting::PromptSpec& spec, llm::Backend& backend,
                            int context_window_tokens, store::ResultCache* cache,
                            const registry::Registry& reg, JudgeOptions options = {});

RunResult judge_corpus(const std::vector<corpus::Document>& docs, int goal,
                       const prompting::PromptSpec& spec, llm::Backend& backend,
                       int context_window_tokens, store::ResultCache* cache,
                       const registry::Registry& reg, int workers,
                       JudgeOptions options = {},
                       const std::optional<std::filesystem::path>& persist_dir = std::nullopt);

/// First 16 hex digits of SHA-256 over goal, model, digest and the ordered
/// judged doc keys; equal inputs give equal run ids.
std::string make_run_id(int goal, const std::string& model_id, const std::string& digest,
                        const std::vector<JudgedRecord>& records);

}  // namespace sdgjudge::evaluation
