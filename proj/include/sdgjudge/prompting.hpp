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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdgjudge/corpus.hpp"
#include "sdgjudge/registry.hpp"

namespace sdgjudge {

enum class Label { kNonRelevant = 0, kRelevant = 1 };

std::string_view label_name(Label label);  // "Relevant" / "Non-Relevant"
/// Accepts the names produced by label_name plus "NonRelevant".
Label label_from_name(std::string_view name);

}  // namespace sdgjudge

namespace sdgjudge::prompting {

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 512;

  bool operator==(const Decoding&) const = default;
};

/// "temperature=0.000000;max_tokens=512"
std::string decoding_fingerprint(const Decoding& decoding);

struct FewShotExample {
  Label label = Label::kRelevant;
  std::string synopsis;
  std::string rationale;

  bool operator==(const FewShotExample&) const = default;
};

/// The five evaluation-prompt components: role, goal definition (resolved
/// from the registry), classification guidelines with target criteria,
/// example abstracts, and output requirements.
struct PromptSpec {
  int goal_number = 0;
  std::string system_role_text;
  std::string guidelines_text;
  std::vector<std::string> target_ids;
  std::vector<FewShotExample> examples;
  std::string output_instructions_text;
  Decoding decoding;

  bool operator==(const PromptSpec&) const = default;
};

PromptSpec prompt_spec_from_json(const nlohmann::json& j);
nlohmann::json prompt_spec_to_json(const PromptSpec& spec);
PromptSpec load_prompt_spec(const std::filesystem::path& path);

/// Throws kValidation for an empty component or missing example label, and
/// kNotFound for goals/targets the registry cannot resolve.
void validate(const PromptSpec& spec, const registry::Registry& reg);

enum class Role { kSystem, kUser };
std::string_view role_name(Role role);

struct Message {
  Role role;
  std::string content;

  bool operator==(const Message&) const = default;
};

using MessageSequence = std::vector<Message>;

inline constexpr std::string_view kTruncationMarker = "[TRUNCATED]";
inline constexpr std::size_t kNoBudget = static_cast<std::size_t>(-1);

/// Fully resolved system message for the spec.
std::string render_system_message(const PromptSpec& spec, const registry::Registry& reg);

/// "TITLE: <title>\nABSTRACT: <abstract>", truncated at a sentence boundary
/// and suffixed with kTruncationMarker when longer than `char_budget`.
std::string render_user_message(const corpus::Document& doc, std::size_t char_budget);

/// One system message followed by one user message.
MessageSequence assemble_prompt(const PromptSpec& spec, const registry::Registry& reg,
                                const corpus::Document& doc,
                                std::size_t char_budget = kNoBudget);

/// Character budget for the user message:
/// (context_window_tokens - overhead_tokens) * chars_per_token, where the
/// overhead is the system message estimated at chars_per_token characters
/// per token plus the completion allowance max_tokens.
std::size_t user_char_budget(const PromptSpec& spec, const registry::Registry& reg,
                             int context_window_tokens, double chars_per_token = 3.0);

/// SHA-256 hex over the canonical, length-tagged serialization of every
/// resolved component plus the decoding parameters. The document is not
/// part of it.
std::string prompt_digest(const PromptSpec& spec, const registry::Registry& reg);

}  // namespace sdgjudge::prompting
