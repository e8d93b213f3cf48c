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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "sdgjudge/error.hpp"
#include "sdgjudge/prompting.hpp"
#include "sdgjudge/retry.hpp"

namespace sdgjudge::llm {

struct ModelConfig {
  std::string model_id;
  std::string base_url;
  std::optional<std::string> credential_env;  // bearer token lives in this variable
  int context_window_tokens = 8192;
  int max_retries = 3;
  std::chrono::milliseconds timeout{120000};
  int max_concurrent = 1;
  BackoffPolicy backoff;
};

/// Throws kConfig when a ModelConfig invariant does not hold.
void validate(const ModelConfig& cfg);

struct CompletionOutcome {
  std::string text;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
};

/// Failure after one or more attempts; `attempts()` counts them.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message, int attempts)
      : Error(code, message), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

struct CompletionRequest {
  const prompting::MessageSequence* messages = nullptr;
  prompting::Decoding decoding;
  std::string doc_key;  // used by the replay backend only
};

/// A chat-completion model. Implementations are safe to call from several
/// threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& model_id() const = 0;
  virtual int max_concurrent() const = 0;
  /// Throws BackendError.
  virtual CompletionOutcome complete(const CompletionRequest& request) = 0;
  /// Completions served so far, including failed ones.
  virtual std::size_t calls() const = 0;
};

/// OpenAI-compatible endpoint: POST {base_url}/v1/chat/completions.
/// Retries timeouts, HTTP 429 and 5xx with exponential backoff; 401/403 raise
/// kCredential immediately and any other 4xx raises kHttp.
class HttpChatBackend final : public Backend {
 public:
  explicit HttpChatBackend(ModelConfig cfg, SleepFn sleep = default_sleep());

  const std::string& model_id() const override { return cfg_.model_id; }
  int max_concurrent() const override { return cfg_.max_concurrent; }
  CompletionOutcome complete(const CompletionRequest& request) override;
  std::size_t calls() const override { return calls_.load(); }

 private:
  ModelConfig cfg_;
  SleepFn sleep_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::uint64_t> seed_{0};
};

/// Scripted completions keyed by (doc_key, model_id), loaded from JSONL
/// lines {"doc_key", "model_id", "text"}. Later lines override earlier ones.
class ReplayScript {
 public:
  static ReplayScript load(const std::filesystem::path& path);
  void add(std::string doc_key, std::string model_id, std::string text);
  /// Throws kScriptMiss.
  const std::string& lookup(const std::string& doc_key, const std::string& model_id) const;
  bool contains(const std::string& doc_key, const std::string& model_id) const;
  std::size_t size() const { return entries_.size(); }
  /// Distinct model ids, sorted.
  std::vector<std::string> model_ids() const;

 private:
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

CompletionOutcome replay_complete(const ReplayScript& script, const std::string& doc_key,
                                  const std::string& model_id);

class ReplayBackend final : public Backend {
 public:
  ReplayBackend(std::shared_ptr<const ReplayScript> script, std::string model_id,
                int max_concurrent = 16);

  const std::string& model_id() const override { return model_id_; }
  int max_concurrent() const override { return max_concurrent_; }
  CompletionOutcome complete(const CompletionRequest& request) override;
  std::size_t calls() const override { return calls_.load(); }

 private:
  std::shared_ptr<const ReplayScript> script_;
  std::string model_id_;
  int max_concurrent_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace sdgjudge::llm
