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
#include "sdgjudge/ensemble.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "sdgjudge/error.hpp"
#include "text_util.hpp"

namespace sdgjudge::ensemble {

using nlohmann::json;

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::kMajority: return "majority";
    case Rule::kUnanimous: return "unanimous";
    case Rule::kCascade: return "cascade";
  }
  return "unknown";
}

Rule parse_rule(std::string_view name) {
  const auto lower = detail::to_lower_ascii(name);
  if (lower == "majority") return Rule::kMajority;
  if (lower == "unanimous") return Rule::kUnanimous;
  if (lower == "cascade") return Rule::kCascade;
  throw Error(ErrorCode::kConfig, "unknown ensemble rule '" + std::string(name) + "'");
}

VoteResult majority_vote(std::span<const Label> labels) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "majority vote over no labels");
  const auto relevant =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kRelevant));
  const std::size_t nonrelevant = labels.size() - relevant;
  if (relevant == nonrelevant) return {Label::kNonRelevant, true};
  return {relevant > nonrelevant ? Label::kRelevant : Label::kNonRelevant, false};
}

Label unanimous(std::span<const Label> labels) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "unanimity over no labels");
  const bool all = std::all_of(labels.begin(), labels.end(),
                               [](Label l) { return l == Label::kRelevant; });
  return all ? Label::kRelevant : Label::kNonRelevant;
}

PanelResult cascade(std::span<const Stage> stages, const corpus::Document& doc, int goal) {
  if (stages.empty()) throw Error(ErrorCode::kInvalidArgument, "cascade without stages");
  PanelResult result;
  result.doc_key = doc.doc_key;
  result.goal_number = goal;
  result.rule = Rule::kCascade;
  for (const auto& stage : stages) {
    const Outcome outcome = stage.judge(doc, goal);
    std::optional<Label> label;
    if (const auto* v = std::get_if<Verdict>(&outcome)) label = v->label;
    result.stage_trace.push_back({stage.model_id, label});
    result.member_labels.push_back({stage.model_id, label});
    if (!label) continue;
    result.combined = *label;
    if (*label == Label::kNonRelevant) break;
  }
  return result;
}

std::vector<PanelResult> combine_runs(std::span<const RunResult> runs, Rule rule) {
  if (runs.empty()) throw Error(ErrorCode::kArity, "ensemble needs at least one run");
  std::set<std::string> models;
  for (const auto& run : runs) {
    if (run.goal_number != runs.front().goal_number) {
      throw Error(ErrorCode::kValidation, "ensemble members judge different goals");
    }
    if (!models.insert(run.model_id).second) {
      throw Error(ErrorCode::kValidation, "model '" + run.model_id + "' appears twice");
    }
  }

  std::vector<std::unordered_map<std::string, const JudgedRecord*>> index(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& r : runs[i].records) index[i][r.doc_key] = &r;
  }
  std::vector<std::string> universe;
  for (const auto& r : runs.front().records) {
    const bool everywhere = std::all_of(index.begin(), index.end(), [&](const auto& m) {
      return m.count(r.doc_key) != 0;
    });
    if (everywhere) universe.push_back(r.doc_key);
  }
  if (universe.empty()) {
    throw Error(ErrorCode::kUndefinedComparison, "ensemble members share no documents");
  }

  const int goal = runs.front().goal_number;
  std::vector<PanelResult> panel;
  panel.reserve(universe.size());

  if (rule == Rule::kCascade) {
    std::vector<Stage> stages;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      stages.push_back({runs[i].model_id, [&index, i](const corpus::Document& d, int) {
                          return index[i].at(d.doc_key)->outcome;
                        }});
    }
    for (const auto& key : universe) {
      corpus::Document doc;
      doc.doc_key = key;
      panel.push_back(cascade(stages, doc, goal));
    }
    return panel;
  }

  for (const auto& key : universe) {
    PanelResult result;
    result.doc_key = key;
    result.goal_number = goal;
    result.rule = rule;
    std::vector<Label> present;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto label = index[i].at(key)->label();
      result.member_labels.push_back({runs[i].model_id, label});
      if (label) present.push_back(*label);
    }
    if (!present.empty()) {
      if (rule == Rule::kMajority) {
        const auto vote = majority_vote(present);
        result.combined = vote.label;
        result.tie = vote.tie;
      } else {
        result.combined = unanimous(present);
      }
    }
    panel.push_back(std::move(result));
  }
  return panel;
}

PanelSummary summarize(const std::vector<PanelResult>& panel) {
  PanelSummary s;
  std::map<std::string, std::size_t> invocations;
  std::vector<std::string> order;
  for (const auto& p : panel) {
    ++s.documents;
    if (!p.combined) {
      ++s.undecided;
    } else if (*p.combined == Label::kRelevant) {
      ++s.relevant;
    } else {
      ++s.nonrelevant;
    }
    if (p.tie) ++s.ties;
    for (const auto& step : p.stage_trace) {
      if (invocations[step.model_id]++ == 0) order.push_back(step.model_id);
    }
  }
  for (const auto& m : order) s.stage_invocations.emplace_back(m, invocations[m]);
  return s;
}

namespace {

json member_list(const std::vector<MemberLabel>& members) {
  json out = json::array();
  for (const auto& m : members) {
    out.push_back({{"model_id", m.model_id},
                   {"label", m.label ? json(label_name(*m.label)) : json(nullptr)}});
  }
  return out;
}

std::vector<MemberLabel> member_list_from(const json& j) {
  std::vector<MemberLabel> out;
  for (const auto& m : j) {
    MemberLabel ml{m.at("model_id").get<std::string>(), std::nullopt};
    if (!m.at("label").is_null()) ml.label = label_from_name(m["label"].get<std::string>());
    out.push_back(std::move(ml));
  }
  return out;
}

}  // namespace

json panel_result_to_json(const PanelResult& r) {
  json j = {{"doc_key", r.doc_key},
            {"goal_number", r.goal_number},
            {"rule", rule_name(r.rule)},
            {"member_labels", member_list(r.member_labels)},
            {"combined", r.combined ? json(label_name(*r.combined)) : json(nullptr)},
            {"undecided", !r.combined.has_value()},
            {"tie_flag", r.tie}};
  if (r.rule == Rule::kCascade) j["stage_trace"] = member_list(r.stage_trace);
  return j;
}

PanelResult panel_result_from_json(const json& j) {
  try {
    PanelResult r;
    r.doc_key = j.at("doc_key").get<std::string>();
    r.goal_number = j.at("goal_number").get<int>();
    r.rule = parse_rule(j.at("rule").get<std::string>());
    r.member_labels = member_list_from(j.at("member_labels"));
    if (!j.at("combined").is_null()) r.combined = label_from_name(j["combined"].get<std::string>());
    r.tie = j.at("tie_flag").get<bool>();
    if (j.contains("stage_trace")) r.stage_trace = member_list_from(j["stage_trace"]);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("panel result: ") + e.what());
  }
}

}  // namespace sdgjudge::ensemble
