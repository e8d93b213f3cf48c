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
#include "sdgjudge/records.hpp"

#include "sdgjudge/error.hpp"

namespace sdgjudge {

using nlohmann::json;

std::optional<Label> JudgedRecord::label() const {
  if (const auto* v = std::get_if<Verdict>(&outcome)) return v->label;
  return std::nullopt;
}

json judged_record_to_json(const JudgedRecord& record) {
  json j = {{"doc_key", record.doc_key},
            {"goal_number", record.goal_number},
            {"model_id", record.model_id},
            {"prompt_digest", record.prompt_digest}};
  if (const auto* v = std::get_if<Verdict>(&record.outcome)) {
    j["outcome"] = "verdict";
    j["label"] = label_name(v->label);
    j["reasoning"] = v->reasoning;
    j["raw_text"] = v->raw_text;
  } else if (const auto* p = std::get_if<ParseFailure>(&record.outcome)) {
    j["outcome"] = "parse_failure";
    j["reason"] = p->reason;
    j["raw_text"] = p->raw_text;
  } else {
    const auto& b = std::get<BackendFailure>(record.outcome);
    j["outcome"] = "backend_failure";
    j["error"] = b.error;
    j["message"] = b.message;
  }
  j["attempts"] = record.attempts;
  return j;
}

JudgedRecord judged_record_from_json(const json& j) {
  try {
    JudgedRecord r;
    r.doc_key = j.at("doc_key").get<std::string>();
    r.goal_number = j.at("goal_number").get<int>();
    r.model_id = j.at("model_id").get<std::string>();
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.attempts = j.at("attempts").get<int>();
    const auto kind = j.at("outcome").get<std::string>();
    if (kind == "verdict") {
      r.outcome = Verdict{label_from_name(j.at("label").get<std::string>()),
                          j.at("reasoning").get<std::string>(), j.at("raw_text").get<std::string>()};
    } else if (kind == "parse_failure") {
      r.outcome = ParseFailure{j.at("raw_text").get<std::string>(), j.at("reason").get<std::string>()};
    } else if (kind == "backend_failure") {
      r.outcome = BackendFailure{j.at("error").get<std::string>(), j.at("message").get<std::string>()};
    } else {
      throw Error(ErrorCode::kParse, "unknown outcome '" + kind + "'");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("judged record: ") + e.what());
  }
}

RunResult::Counts RunResult::counts() const {
  Counts c;
  for (const auto& r : records) {
    if (const auto* v = std::get_if<Verdict>(&r.outcome)) {
      (v->label == Label::kRelevant ? c.relevant : c.nonrelevant)++;
    } else if (std::holds_alternative<ParseFailure>(r.outcome)) {
      ++c.parse_failures;
    } else {
      ++c.backend_failures;
    }
    if (r.from_cache) ++c.from_cache;
  }
  return c;
}

bool same_content(const RunResult& a, const RunResult& b) {
  if (a.run_id != b.run_id || a.goal_number != b.goal_number || a.model_id != b.model_id ||
      a.prompt_digest != b.prompt_digest || a.skipped != b.skipped ||
      a.records.size() != b.records.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    JudgedRecord x = a.records[i];
    JudgedRecord y = b.records[i];
    x.from_cache = y.from_cache = false;
    if (!(x == y)) return false;
  }
  return true;
}

}  // namespace sdgjudge
