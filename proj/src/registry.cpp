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
#include "sdgjudge/registry.hpp"

#include <charconv>
#include <fstream>

#include "sdgjudge/corpus.hpp"
#include "sdgjudge/error.hpp"

namespace sdgjudge::registry {

using nlohmann::json;

namespace {

bool parse_positive(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size() && out > 0;
}

void check_target_id(const std::string& id, int goal) {
  const auto dot = id.find('.');
  int prefix = 0;
  int index = 0;
  if (dot == std::string::npos || !parse_positive(std::string_view(id).substr(0, dot), prefix) ||
      !parse_positive(std::string_view(id).substr(dot + 1), index)) {
    throw Error(ErrorCode::kConfig, "malformed target id '" + id + "'");
  }
  if (prefix != goal) {
    throw Error(ErrorCode::kConfig, "target '" + id + "' listed under goal " +
                                        std::to_string(goal));
  }
}

}  // namespace

Registry Registry::from_json(const json& j) {
  Registry reg;
  try {
    for (const auto& g : j.at("goals")) {
      SdgGoal goal;
      goal.number = g.at("number").get<int>();
      goal.name = g.value("name", "");
      goal.definition = g.at("definition").get<std::string>();
      if (!corpus::is_valid_goal(goal.number)) {
        throw Error(ErrorCode::kConfig, "goal number " + std::to_string(goal.number) +
                                            " outside 1..17");
      }
      if (goal.definition.empty()) {
        throw Error(ErrorCode::kConfig, "goal " + std::to_string(goal.number) +
                                            " has an empty definition");
      }
      if (const auto t = g.find("targets"); t != g.end()) {
        for (const auto& tj : *t) {
          SdgTarget target{tj.at("id").get<std::string>(), tj.at("description").get<std::string>()};
          check_target_id(target.id, goal.number);
          if (target.description.empty()) {
            throw Error(ErrorCode::kConfig, "target " + target.id + " has no description");
          }
          for (const auto& existing : goal.targets) {
            if (existing.id == target.id) {
              throw Error(ErrorCode::kConfig, "duplicate target id " + target.id);
            }
          }
          goal.targets.push_back(std::move(target));
        }
      }
      const int number = goal.number;
      if (!reg.goals_.emplace(number, std::move(goal)).second) {
        throw Error(ErrorCode::kConfig, "duplicate goal number " + std::to_string(number));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("registry: ") + e.what());
  }
  return reg;
}

Registry Registry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open registry " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "registry " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json Registry::to_json() const {
  json goals = json::array();
  for (const auto& [number, goal] : goals_) {
    json targets = json::array();
    for (const auto& t : goal.targets) {
      targets.push_back({{"id", t.id}, {"description", t.description}});
    }
    goals.push_back({{"number", number},
                     {"name", goal.name},
                     {"definition", goal.definition},
                     {"targets", std::move(targets)}});
  }
  return {{"goals", std::move(goals)}};
}

const SdgGoal& Registry::goal(int number) const {
  const auto it = goals_.find(number);
  if (it == goals_.end()) {
    throw Error(ErrorCode::kNotFound, "goal " + std::to_string(number) + " not in registry");
  }
  return it->second;
}

const SdgTarget& Registry::target(std::string_view id) const {
  const auto dot = id.find('.');
  int goal_number = 0;
  if (dot != std::string_view::npos && parse_positive(id.substr(0, dot), goal_number)) {
    if (const auto it = goals_.find(goal_number); it != goals_.end()) {
      for (const auto& t : it->second.targets) {
        if (t.id == id) return t;
      }
    }
  }
  throw Error(ErrorCode::kNotFound, "target '" + std::string(id) + "' not in registry");
}

}  // namespace sdgjudge::registry
