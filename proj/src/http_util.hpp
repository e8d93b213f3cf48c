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

#include <optional>
#include <string>
#include <string_view>

namespace sdgjudge::detail {

/// "http://host:8000/prefix/" -> origin "http://host:8000", path "/prefix".
struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(std::string_view url);

/// Value of the named environment variable, or nullopt when unset/empty.
std::optional<std::string> read_env(const std::string& name);

inline bool is_transient_status(int status) { return status == 429 || status >= 500; }
inline bool is_credential_status(int status) { return status == 401 || status == 403; }

}  // namespace sdgjudge::detail
