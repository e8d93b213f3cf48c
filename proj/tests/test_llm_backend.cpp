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
#include <stdlib.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "sdgjudge/error.hpp"
#include "sdgjudge/llm_backend.hpp"
#include "test_support.hpp"

using namespace sdgjudge;
using namespace sdgjudge::llm;
using nlohmann::json;

namespace {

prompting::MessageSequence messages() {
  return {{prompting::Role::kSystem, "system text"}, {prompting::Role::kUser, "TITLE: t\nABSTRACT: a"}};
}

json reply(const std::string& text) {
  return {{"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}})}};
}

ModelConfig config_for(const testing::MockServer& mock) {
  ModelConfig cfg;
  cfg.model_id = "phi";
  cfg.base_url = mock.url();
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

ErrorCode failing_code(Backend& b, int* attempts = nullptr) {
  const auto msgs = messages();
  try {
    b.complete({&msgs, {}, "d1"});
  } catch (const BackendError& e) {
    if (attempts) *attempts = e.attempts();
    return e.code();
  }
  return ErrorCode::kInternal;
}

const auto kNoSleep = [](std::chrono::milliseconds) {};

}  // namespace

TEST_CASE("chat completion request and reply") {
  testing::MockServer mock;
  json seen;
  std::string path;
  mock.server().Post(R"(/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    path = req.path;
    seen = json::parse(req.body);
    res.set_content(reply("CLASSIFICATION: Relevant\nREASONING: ...").dump(), "application/json");
  });
  mock.start();
  auto cfg = config_for(mock);
  cfg.base_url += "/";
  HttpChatBackend backend(cfg, kNoSleep);
  const auto msgs = messages();
  const auto out = backend.complete({&msgs, {0.0, 128}, "d1"});
  CHECK(out.text == "CLASSIFICATION: Relevant\nREASONING: ...");
  CHECK(out.attempts == 1);
  CHECK(path == "/v1/chat/completions");
  CHECK(seen["model"] == "phi");
  CHECK(seen["max_tokens"] == 128);
  CHECK(seen["temperature"] == 0.0);
  REQUIRE(seen["messages"].size() == 2);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(seen["messages"][1]["content"] == "TITLE: t\nABSTRACT: a");
  CHECK(backend.calls() == 1);
}

TEST_CASE("base url path prefix is kept") {
  testing::MockServer mock;
  std::string path;
  mock.server().Post(R"(/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    path = req.path;
    res.set_content(reply("ok").dump(), "application/json");
  });
  mock.start();
  auto cfg = config_for(mock);
  cfg.base_url += "/proxy/";
  HttpChatBackend backend(cfg, kNoSleep);
  const auto msgs = messages();
  backend.complete({&msgs, {}, "d"});
  CHECK(path == "/proxy/v1/chat/completions");
}

TEST_CASE("503 twice then success takes three attempts with growing backoff") {
  testing::MockServer mock;
  std::atomic<int> hits{0};
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 503;
      return;
    }
    res.set_content(reply("done").dump(), "application/json");
  });
  mock.start();
  std::vector<std::chrono::milliseconds> sleeps;
  HttpChatBackend backend(config_for(mock), [&](auto d) { sleeps.push_back(d); });
  const auto msgs = messages();
  const auto out = backend.complete({&msgs, {}, "d"});
  CHECK(out.text == "done");
  CHECK(out.attempts == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0] >= std::chrono::milliseconds(400));
  CHECK(sleeps[0] <= std::chrono::milliseconds(600));
  CHECK(sleeps[1] >= sleeps[0]);
}

TEST_CASE("429 is retried and exhaustion is backend unavailable") {
  testing::MockServer mock;
  std::atomic<int> hits{0};
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });
  mock.start();
  auto cfg = config_for(mock);
  cfg.max_retries = 2;
  HttpChatBackend backend(cfg, kNoSleep);
  int attempts = 0;
  CHECK(failing_code(backend, &attempts) == ErrorCode::kBackendUnavailable);
  CHECK(attempts == 3);
  CHECK(hits == 3);
}

TEST_CASE("non-retryable statuses") {
  testing::MockServer mock;
  std::atomic<int> hits{0};
  int status = 401;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = status;
    if (status == 200) res.set_content(R"({"choices":[]})", "application/json");
  });
  mock.start();
  HttpChatBackend backend(config_for(mock), kNoSleep);
  int attempts = 0;

  SUBCASE("401 is a credential error after one attempt") {
    CHECK(failing_code(backend, &attempts) == ErrorCode::kCredential);
    CHECK(attempts == 1);
    CHECK(hits == 1);
  }
  SUBCASE("403 is a credential error") {
    status = 403;
    CHECK(failing_code(backend) == ErrorCode::kCredential);
  }
  SUBCASE("404 is not retried") {
    status = 404;
    CHECK(failing_code(backend, &attempts) == ErrorCode::kHttp);
    CHECK(hits == 1);
  }
  SUBCASE("empty choices is malformed") {
    status = 200;
    CHECK(failing_code(backend) == ErrorCode::kMalformedResponse);
  }
}

TEST_CASE("unreachable server exhausts retries") {
  ModelConfig cfg;
  cfg.model_id = "m";
  cfg.base_url = "http://127.0.0.1:1";
  cfg.max_retries = 1;
  cfg.timeout = std::chrono::milliseconds(500);
  HttpChatBackend backend(cfg, kNoSleep);
  int attempts = 0;
  CHECK(failing_code(backend, &attempts) == ErrorCode::kBackendUnavailable);
  CHECK(attempts == 2);
}

TEST_CASE("bearer token comes from the named environment variable") {
  testing::MockServer mock;
  std::string auth;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content(reply("x").dump(), "application/json");
  });
  mock.start();
  auto cfg = config_for(mock);
  cfg.credential_env = "SDGJ_TEST_LLM_TOKEN";
  setenv("SDGJ_TEST_LLM_TOKEN", "tok123", 1);
  HttpChatBackend backend(cfg, kNoSleep);
  const auto msgs = messages();
  backend.complete({&msgs, {}, "d"});
  CHECK(auth == "Bearer tok123");
  unsetenv("SDGJ_TEST_LLM_TOKEN");
  int attempts = -1;
  CHECK(failing_code(backend, &attempts) == ErrorCode::kCredential);
  CHECK(attempts == 0);
}

TEST_CASE("max_concurrent bounds in-flight requests") {
  testing::MockServer mock;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  mock.server().new_task_queue = [] { return new httplib::ThreadPool(16); };
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    res.set_content(reply("x").dump(), "application/json");
  });
  mock.start();
  auto cfg = config_for(mock);
  cfg.max_concurrent = 3;
  HttpChatBackend backend(cfg, kNoSleep);
  const auto msgs = messages();
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 10; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 3; ++i) backend.complete({&msgs, {}, "d"});
      });
    }
  }
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 2);
  CHECK(backend.calls() == 30);
}

TEST_CASE("backoff delays are non-decreasing and jittered within 20 percent") {
  BackoffPolicy policy;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::chrono::milliseconds prev{0};
    for (int k = 0; k < 6; ++k) {
      const auto d = policy.delay(k, rng);
      const double nominal = 500.0 * std::pow(2.0, k);
      CHECK(d.count() >= static_cast<long long>(std::floor(nominal * 0.8)));
      CHECK(d.count() <= static_cast<long long>(std::ceil(nominal * 1.2)));
      CHECK(d >= prev);
      prev = d;
    }
  }
}

TEST_CASE("model config validation") {
  ModelConfig cfg;
  cfg.model_id = "m";
  cfg.base_url = "http://localhost:1";
  CHECK_NOTHROW(validate(cfg));
  cfg.context_window_tokens = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.context_window_tokens = 10;
  cfg.max_concurrent = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.max_concurrent = 1;
  cfg.base_url = "localhost:1";
  CHECK_THROWS_AS(HttpChatBackend{cfg}, Error);
}

TEST_CASE("replay script lookups") {
  testing::TempDir dir;
  testing::write_text(dir / "s.jsonl",
                      R"({"doc_key":"D1","model_id":"phi","text":"CLASSIFICATION: Relevant..."})"
                      "\n\n"
                      R"({"doc_key":"D1","model_id":"llama","text":"other"})"
                      "\n");
  const auto script = ReplayScript::load(dir / "s.jsonl");
  CHECK(script.size() == 2);
  CHECK(script.model_ids() == std::vector<std::string>{"llama", "phi"});
  CHECK(replay_complete(script, "D1", "phi").text == "CLASSIFICATION: Relevant...");
  CHECK(replay_complete(script, "D1", "phi").text == replay_complete(script, "D1", "phi").text);
  try {
    replay_complete(script, "D2", "phi");
    FAIL("expected a script miss");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::kScriptMiss);
  }

  ReplayBackend backend(std::make_shared<ReplayScript>(script), "llama");
  const auto msgs = messages();
  CHECK(backend.complete({&msgs, {}, "D1"}).text == "other");
  CHECK(backend.calls() == 1);

  testing::write_text(dir / "bad.jsonl", "{\"doc_key\":1}\n");
  CHECK_THROWS_AS(ReplayScript::load(dir / "bad.jsonl"), Error);
}
