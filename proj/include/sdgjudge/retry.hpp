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

#include <chrono>
#include <functional>
#include <random>

namespace sdgjudge {

/// Exponential backoff with multiplicative jitter. With the default jitter
/// of 0.2 and factor 2 the delay sequence is non-decreasing for every draw,
/// since base*2^k*1.2 < base*2^(k+1)*0.8.
struct BackoffPolicy {
  std::chrono::milliseconds base{500};
  double factor = 2.0;
  double jitter = 0.2;

  /// Delay to wait after failed attempt number `attempt` (0-based).
  std::chrono::milliseconds delay(int attempt, std::mt19937_64& rng) const;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// std::this_thread::sleep_for.
SleepFn default_sleep();

}  // namespace sdgjudge
