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
#include <cmath>
#include <cstdlib>
#include <thread>

#include "http_util.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/retry.hpp"

namespace sdgjudge {

std::chrono::milliseconds BackoffPolicy::delay(int attempt, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> dist(1.0 - jitter, 1.0 + jitter);
  const double nominal = static_cast<double>(base.count()) * std::pow(factor, attempt);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(nominal * dist(rng))));
}

SleepFn default_sleep() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

namespace detail {

SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kConfig, "URL has no scheme: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string_view::npos) {
    out.origin = std::string(url);
  } else {
    out.origin = std::string(url.substr(0, path_start));
    out.path = std::string(url.substr(path_start));
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  }
  return out;
}

std::optional<std::string> read_env(const std::string& name) {
  if (name.empty()) return std::nullopt;
  const char* value = std::getenv(name.c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

}  // namespace detail
}  // namespace sdgjudge
