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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdgjudge/corpus.hpp"
#include "sdgjudge/records.hpp"

namespace sdgjudge::ensemble {

enum class Rule { kMajority, kUnanimous, kCascade };

std::string_view rule_name(Rule rule);
Rule parse_rule(std::string_view name);

struct VoteResult {
  Label label;
  bool tie = false;
};

/// Strict majority wins; an exact tie gives NonRelevant with tie = true.
/// Throws kInvalidArgument on empty input.
VoteResult majority_vote(std::span<const Label> labels);

/// Relevant iff every member says Relevant. Throws kInvalidArgument on
/// empty input.
Label unanimous(std::span<const Label> labels);

struct MemberLabel {
  std::string model_id;
  std::optional<Label> label;  // nullopt: the member failed (parse/backend)

  bool operator==(const MemberLabel&) const = default;
};

struct PanelResult {
  std::string doc_key;
  int goal_number = 0;
  Rule rule = Rule::kMajority;
  std::vector<MemberLabel> member_labels;
  std::optional<Label> combined;  // nullopt: every consulted member failed
  bool tie = false;
  std::vector<MemberLabel> stage_trace;  // cascade only

  bool operator==(const PanelResult&) const = default;
};

/// A cascade stage: a model id and a function producing its outcome for a
/// document and goal.
struct Stage {
  std::string model_id;
  std::function<Outcome(const corpus::Document&, int)> judge;
};

/// Consults stages in order. The first NonRelevant ends the cascade with
/// NonRelevant; Relevant requires every stage that answered to say
/// Relevant. A failed stage is recorded in the trace and skipped.
PanelResult cascade(std::span<const Stage> stages, const corpus::Document& doc, int goal);

/// Combines finished runs per document. The universe is the set of doc keys
/// present in every run (kUndefinedComparison if empty); it keeps the order
/// of the first run. For kCascade the runs are taken as stages in the given
/// order. Failed members are dropped from the vote; documents with no
/// surviving member have combined = nullopt.
std::vector<PanelResult> combine_runs(std::span<const RunResult> runs, Rule rule);

struct PanelSummary {
  std::size_t documents = 0;
  std::size_t relevant = 0;
  std::size_t nonrelevant = 0;
  std::size_t undecided = 0;
  std::size_t ties = 0;
  std::vector<std::pair<std::string, std::size_t>> stage_invocations;  // cascade only
};

PanelSummary summarize(const std::vector<PanelResult>& panel);

nlohmann::json panel_result_to_json(const PanelResult& result);
PanelResult panel_result_from_json(const nlohmann::json& j);

}  // namespace sdgjudge::ensemble
