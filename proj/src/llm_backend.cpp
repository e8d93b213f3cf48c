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
#include "sdgjudge/llm_backend.hpp"

#include <fstream>
#include <set>

#include "httplib.h"
#include "http_util.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace sdgjudge::llm {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void validate(const ModelConfig& cfg) {
  if (cfg.model_id.empty()) throw Error(ErrorCode::kConfig, "model id is empty");
  if (cfg.context_window_tokens <= 0) {
    throw Error(ErrorCode::kConfig, cfg.model_id + ": context_window_tokens must be > 0");
  }
  if (cfg.max_concurrent < 1) {
    throw Error(ErrorCode::kConfig, cfg.model_id + ": max_concurrent must be >= 1");
  }
  if (cfg.max_retries < 0) throw Error(ErrorCode::kConfig, cfg.model_id + ": max_retries < 0");
}

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

std::chrono::milliseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
}

}  // namespace

HttpChatBackend::HttpChatBackend(ModelConfig cfg, SleepFn sleep)
    : cfg_(std::move(cfg)), sleep_(std::move(sleep)), slots_((validate(cfg_), cfg_.max_concurrent)) {
  if (cfg_.base_url.empty()) throw Error(ErrorCode::kConfig, cfg_.model_id + ": base_url not set");
  detail::split_url(cfg_.base_url);
}

CompletionOutcome HttpChatBackend::complete(const CompletionRequest& request) {
  if (request.messages == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "completion request without messages");
  }
  std::optional<std::string> token;
  if (cfg_.credential_env) {
    token = detail::read_env(*cfg_.credential_env);
    if (!token) {
      throw BackendError(ErrorCode::kCredential,
                         "credential environment variable '" + *cfg_.credential_env +
                             "' is not set",
                         0);
    }
  }

  json messages = json::array();
  for (const auto& m : *request.messages) {
    messages.push_back({{"role", prompting::role_name(m.role)}, {"content", m.content}});
  }
  const std::string body = json{{"model", cfg_.model_id},
                                {"messages", std::move(messages)},
                                {"temperature", request.decoding.temperature},
                                {"max_tokens", request.decoding.max_tokens}}
                               .dump();
  httplib::Headers headers;
  if (token) headers.emplace("Authorization", "Bearer " + *token);

  const auto url = detail::split_url(cfg_.base_url);
  const std::string path = url.path + "/v1/chat/completions";
  std::mt19937_64 rng(seed_.fetch_add(1) + 0x9E3779B97F4A7C15ull);

  SlotGuard slot(slots_);
  const auto start = Clock::now();
  for (int attempt = 0;; ++attempt) {
    ++calls_;
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    auto res = client.Post(path, headers, body, "application/json");

    std::string transient_reason;
    if (!res) {
      transient_reason = httplib::to_string(res.error());
    } else if (detail::is_transient_status(res->status)) {
      transient_reason = "HTTP " + std::to_string(res->status);
    } else if (detail::is_credential_status(res->status)) {
      throw BackendError(ErrorCode::kCredential,
                         cfg_.model_id + ": server rejected credentials (HTTP " +
                             std::to_string(res->status) + ")",
                         attempt + 1);
    } else if (res->status < 200 || res->status >= 300) {
      throw BackendError(ErrorCode::kHttp,
                         cfg_.model_id + ": HTTP " + std::to_string(res->status), attempt + 1);
    } else {
      try {
        const json reply = json::parse(res->body);
        const auto& choices = reply.at("choices");
        if (!choices.is_array() || choices.empty()) {
          throw BackendError(ErrorCode::kMalformedResponse,
                             cfg_.model_id + ": response has no choices", attempt + 1);
        }
        const auto& content = choices.at(0).at("message").at("content");
        return {content.is_string() ? content.get<std::string>() : std::string(), since(start),
                attempt + 1};
      } catch (const json::exception& e) {
        throw BackendError(ErrorCode::kMalformedResponse,
                           cfg_.model_id + ": malformed response: " + e.what(), attempt + 1);
      }
    }

    if (attempt >= cfg_.max_retries) {
      throw BackendError(ErrorCode::kBackendUnavailable,
                         cfg_.model_id + ": giving up after " + std::to_string(attempt + 1) +
                             " attempts (" + transient_reason + ")",
                         attempt + 1);
    }
    sleep_(cfg_.backoff.delay(attempt, rng));
  }
}

// ---------------------------------------------------------------------------

ReplayScript ReplayScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open replay script " + path.string());
  ReplayScript script;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      script.add(j.at("doc_key").get<std::string>(), j.at("model_id").get<std::string>(),
                 j.at("text").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return script;
}

void ReplayScript::add(std::string doc_key, std::string model_id, std::string text) {
  entries_[{std::move(doc_key), std::move(model_id)}] = std::move(text);
}

bool ReplayScript::contains(const std::string& doc_key, const std::string& model_id) const {
  return entries_.count({doc_key, model_id}) != 0;
}

const std::string& ReplayScript::lookup(const std::string& doc_key,
                                        const std::string& model_id) const {
  const auto it = entries_.find({doc_key, model_id});
  if (it == entries_.end()) {
    throw BackendError(ErrorCode::kScriptMiss,
                       "no scripted completion for (" + doc_key + ", " + model_id + ")", 1);
  }
  return it->second;
}

std::vector<std::string> ReplayScript::model_ids() const {
  std::set<std::string> ids;
  for (const auto& [key, text] : entries_) ids.insert(key.second);
  return {ids.begin(), ids.end()};
}

CompletionOutcome replay_complete(const ReplayScript& script, const std::string& doc_key,
                                  const std::string& model_id) {
  return {script.lookup(doc_key, model_id), std::chrono::milliseconds(0), 1};
}

ReplayBackend::ReplayBackend(std::shared_ptr<const ReplayScript> script, std::string model_id,
                             int max_concurrent)
    : script_(std::move(script)), model_id_(std::move(model_id)), max_concurrent_(max_concurrent) {
  if (!script_) throw Error(ErrorCode::kInvalidArgument, "replay backend without script");
  if (max_concurrent_ < 1) throw Error(ErrorCode::kConfig, "max_concurrent must be >= 1");
}

CompletionOutcome ReplayBackend::complete(const CompletionRequest& request) {
  ++calls_;
  return replay_complete(*script_, request.doc_key, model_id_);
}

}  // namespace sdgjudge::llm
