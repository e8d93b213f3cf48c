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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sdgjudge::registry {

struct SdgTarget {
  std::string id;  // "<goal>.<n>"
  std::string description;

  bool operator==(const SdgTarget&) const = default;
};

struct SdgGoal {
  int number = 0;
  std::string name;
  std::string definition;
  std::vector<SdgTarget> targets;

  bool operator==(const SdgGoal&) const = default;
};

/// Immutable goal/target registry loaded from a JSON document of the form
/// {"goals": [{"number", "name", "definition", "targets": [{"id",
/// "description"}]}]}. Goals may ship with an empty target list; such goals
/// can be looked up but not used to assemble prompts.
class Registry {
 public:
  static Registry from_json(const nlohmann::json& j);
  static Registry load(const std::filesystem::path& path);

  nlohmann::json to_json() const;

  /// Throws kNotFound for unknown goal numbers.
  const SdgGoal& goal(int number) const;
  bool has_goal(int number) const { return goals_.count(number) != 0; }
  /// Throws kNotFound when the id is not registered.
  const SdgTarget& target(std::string_view id) const;
  std::size_t size() const { return goals_.size(); }

  bool operator==(const Registry&) const = default;

 private:
  std::map<int, SdgGoal> goals_;
};

}  // namespace sdgjudge::registry
