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
#include "sdgjudge/prompting.hpp"

#include <cmath>
#include <fstream>

#include "sdgjudge/digest.hpp"
#include "sdgjudge/error.hpp"
#include "text_util.hpp"

namespace sdgjudge {

std::string_view label_name(Label label) {
  return label == Label::kRelevant ? "Relevant" : "Non-Relevant";
}

Label label_from_name(std::string_view name) {
  const std::string lower = detail::to_lower_ascii(detail::trim(name));
  if (lower == "relevant") return Label::kRelevant;
  if (lower == "non-relevant" || lower == "nonrelevant") return Label::kNonRelevant;
  throw Error(ErrorCode::kParse, "unknown label '" + std::string(name) + "'");
}

}  // namespace sdgjudge

namespace sdgjudge::prompting {

using nlohmann::json;

std::string decoding_fingerprint(const Decoding& decoding) {
  return "temperature=" + fixed_decimal(decoding.temperature) +
         ";max_tokens=" + std::to_string(decoding.max_tokens);
}

std::string_view role_name(Role role) { return role == Role::kSystem ? "system" : "user"; }

PromptSpec prompt_spec_from_json(const json& j) {
  try {
    PromptSpec spec;
    spec.goal_number = j.at("goal_number").get<int>();
    spec.system_role_text = j.at("system_role_text").get<std::string>();
    spec.guidelines_text = j.at("guidelines_text").get<std::string>();
    spec.target_ids = j.at("target_ids").get<std::vector<std::string>>();
    for (const auto& e : j.at("examples")) {
      spec.examples.push_back({label_from_name(e.at("label").get<std::string>()),
                               e.at("synopsis").get<std::string>(),
                               e.at("rationale").get<std::string>()});
    }
    spec.output_instructions_text = j.at("output_instructions_text").get<std::string>();
    if (const auto d = j.find("decoding"); d != j.end()) {
      spec.decoding.temperature = d->value("temperature", spec.decoding.temperature);
      spec.decoding.max_tokens = d->value("max_tokens", spec.decoding.max_tokens);
    }
    if (spec.decoding.temperature < 0.0 || !std::isfinite(spec.decoding.temperature)) {
      throw Error(ErrorCode::kValidation, "decoding.temperature must be >= 0");
    }
    if (spec.decoding.max_tokens <= 0) {
      throw Error(ErrorCode::kValidation, "decoding.max_tokens must be positive");
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("prompt spec: ") + e.what());
  }
}

json prompt_spec_to_json(const PromptSpec& spec) {
  json examples = json::array();
  for (const auto& e : spec.examples) {
    examples.push_back({{"label", label_name(e.label)},
                        {"synopsis", e.synopsis},
                        {"rationale", e.rationale}});
  }
  return {{"goal_number", spec.goal_number},
          {"system_role_text", spec.system_role_text},
          {"guidelines_text", spec.guidelines_text},
          {"target_ids", spec.target_ids},
          {"examples", std::move(examples)},
          {"output_instructions_text", spec.output_instructions_text},
          {"decoding",
           {{"temperature", spec.decoding.temperature}, {"max_tokens", spec.decoding.max_tokens}}}};
}

PromptSpec load_prompt_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open prompt spec " + path.string());
  try {
    return prompt_spec_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "prompt spec " + path.string() + ": " + e.what());
  }
}

void validate(const PromptSpec& spec, const registry::Registry& reg) {
  auto require = [](std::string_view text, const char* what) {
    if (detail::trim(text).empty()) {
      throw Error(ErrorCode::kValidation, std::string("prompt component '") + what + "' is empty");
    }
  };
  require(spec.system_role_text, "system role");
  require(spec.guidelines_text, "classification guidelines");
  require(spec.output_instructions_text, "output requirements");
  const auto& goal = reg.goal(spec.goal_number);
  require(goal.definition, "goal definition");
  if (spec.target_ids.empty()) {
    throw Error(ErrorCode::kValidation, "prompt spec selects no targets");
  }
  for (const auto& id : spec.target_ids) {
    const auto& target = reg.target(id);
    if (target.id.rfind(std::to_string(spec.goal_number) + ".", 0) != 0) {
      throw Error(ErrorCode::kValidation,
                  "target " + id + " does not belong to goal " + std::to_string(spec.goal_number));
    }
  }
  bool has_relevant = false;
  bool has_nonrelevant = false;
  for (const auto& e : spec.examples) {
    require(e.synopsis, "example synopsis");
    require(e.rationale, "example rationale");
    (e.label == Label::kRelevant ? has_relevant : has_nonrelevant) = true;
  }
  if (!has_relevant || !has_nonrelevant) {
    throw Error(ErrorCode::kValidation, "prompt spec needs at least one example of each label");
  }
  if (spec.decoding.temperature < 0.0 || spec.decoding.max_tokens <= 0) {
    throw Error(ErrorCode::kValidation, "invalid decoding parameters");
  }
}

std::string render_system_message(const PromptSpec& spec, const registry::Registry& reg) {
  validate(spec, reg);
  const auto& goal = reg.goal(spec.goal_number);
  std::string out;
  out += spec.system_role_text;
  out += "\n\n### SDG DEFINITION\nSDG " + std::to_string(goal.number) + ": " + goal.definition;
  out += "\n\n### SDG TARGETS";
  for (const auto& id : spec.target_ids) {
    out += "\nTarget " + id + ": " + reg.target(id).description;
  }
  out += "\n\n### CLASSIFICATION GUIDELINES\n" + spec.guidelines_text;
  out += "\n\n### EXAMPLE ABSTRACTS";
  for (std::size_t i = 0; i < spec.examples.size(); ++i) {
    const auto& e = spec.examples[i];
    out += "\nExample " + std::to_string(i + 1) + " (" + std::string(label_name(e.label)) +
           "): " + e.synopsis + "\nWhy: " + e.rationale;
  }
  out += "\n\n### OUTPUT REQUIREMENTS\n" + spec.output_instructions_text;
  return out;
}

namespace {

constexpr std::string_view kUserTemplate = "TITLE: {title}\nABSTRACT: {abstract}";

// Largest prefix length <= limit that does not split a UTF-8 sequence.
std::size_t utf8_floor(std::string_view s, std::size_t limit) {
  if (limit >= s.size()) return s.size();
  while (limit > 0 && (static_cast<unsigned char>(s[limit]) & 0xC0) == 0x80) --limit;
  return limit;
}

std::size_t truncation_point(std::string_view text, std::size_t room) {
  // Sentence end: terminal punctuation followed by whitespace.
  for (std::size_t i = std::min(room, text.size()); i > 0; --i) {
    const char c = text[i - 1];
    if ((c == '.' || c == '!' || c == '?') && i < text.size() && detail::is_space(text[i])) {
      return i;
    }
  }
  for (std::size_t i = std::min(room, text.size()); i > 0; --i) {
    if (detail::is_space(text[i - 1])) return i - 1;
  }
  return utf8_floor(text, room);
}

}  // namespace

std::string render_user_message(const corpus::Document& doc, std::size_t char_budget) {
  std::string prefix = "TITLE: " + doc.title + "\nABSTRACT: ";
  if (prefix.size() + doc.abstract.size() <= char_budget) return prefix + doc.abstract;
  const std::size_t suffix = 1 + kTruncationMarker.size();
  if (char_budget < prefix.size() + suffix) {
    throw Error(ErrorCode::kValidation, "character budget " + std::to_string(char_budget) +
                                            " cannot hold the title and truncation marker");
  }
  const std::size_t room = char_budget - prefix.size() - suffix;
  const std::string_view abstract = doc.abstract;
  std::string out = std::move(prefix);
  out += detail::trim(abstract.substr(0, truncation_point(abstract, room)));
  out += ' ';
  out += kTruncationMarker;
  return out;
}

MessageSequence assemble_prompt(const PromptSpec& spec, const registry::Registry& reg,
                                const corpus::Document& doc, std::size_t char_budget) {
  if (detail::trim(doc.abstract).empty()) {
    throw Error(ErrorCode::kValidation, "document " + doc.doc_key + " has an empty abstract");
  }
  return {{Role::kSystem, render_system_message(spec, reg)},
          {Role::kUser, render_user_message(doc, char_budget)}};
}

std::size_t user_char_budget(const PromptSpec& spec, const registry::Registry& reg,
                             int context_window_tokens, double chars_per_token) {
  if (chars_per_token <= 0.0) throw Error(ErrorCode::kConfig, "chars_per_token must be > 0");
  const double system_tokens =
      std::ceil(static_cast<double>(render_system_message(spec, reg).size()) / chars_per_token);
  const double available =
      static_cast<double>(context_window_tokens) - system_tokens - spec.decoding.max_tokens;
  if (available <= 0.0) {
    throw Error(ErrorCode::kConfig, "context window of " + std::to_string(context_window_tokens) +
                                        " tokens leaves no room for the abstract");
  }
  return static_cast<std::size_t>(std::floor(available * chars_per_token));
}

std::string prompt_digest(const PromptSpec& spec, const registry::Registry& reg) {
  validate(spec, reg);
  std::string canonical = "sdgjudge-prompt/1\n";
  auto field = [&canonical](std::string_view tag, std::string_view value) {
    canonical += tag;
    canonical += ':';
    canonical += std::to_string(value.size());
    canonical += '\n';
    canonical += value;
    canonical += '\n';
  };
  const auto& goal = reg.goal(spec.goal_number);
  field("role", spec.system_role_text);
  field("goal", std::to_string(goal.number));
  field("definition", goal.definition);
  for (const auto& id : spec.target_ids) {
    field("target.id", id);
    field("target.description", reg.target(id).description);
  }
  field("guidelines", spec.guidelines_text);
  for (const auto& e : spec.examples) {
    field("example.label", label_name(e.label));
    field("example.synopsis", e.synopsis);
    field("example.rationale", e.rationale);
  }
  field("output", spec.output_instructions_text);
  field("user", kUserTemplate);
  field("rendered.system", render_system_message(spec, reg));
  field("temperature", fixed_decimal(spec.decoding.temperature));
  field("max_tokens", std::to_string(spec.decoding.max_tokens));
  return sha256_hex(canonical);
}

}  // namespace sdgjudge::prompting
