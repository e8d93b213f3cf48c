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
#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>

#include "doctest.h"
#include "sdgjudge/error.hpp"
#include "sdgjudge/evaluation.hpp"
#include "sdgjudge/log.hpp"
#include "test_support.hpp"

using namespace sdgjudge;
using namespace sdgjudge::evaluation;
using nlohmann::json;

namespace {

// Answers from a function of (doc_key, per-document call index).
class ScriptedBackend final : public llm::Backend {
 public:
  using Script = std::function<std::string(const std::string&, int)>;

  ScriptedBackend(std::string id, Script script, int max_concurrent = 16)
      : id_(std::move(id)), script_(std::move(script)), max_concurrent_(max_concurrent) {}

  const std::string& model_id() const override { return id_; }
  int max_concurrent() const override { return max_concurrent_; }
  llm::CompletionOutcome complete(const llm::CompletionRequest& req) override {
    int index = 0;
    {
      std::lock_guard lock(mutex_);
      index = per_doc_[req.doc_key]++;
      temperatures_.push_back(req.decoding.temperature);
    }
    ++calls_;
    return {script_(req.doc_key, index), {}, 1};
  }
  std::size_t calls() const override { return calls_; }
  std::vector<double> temperatures() const {
    std::lock_guard lock(mutex_);
    return temperatures_;
  }

 private:
  std::string id_;
  Script script_;
  int max_concurrent_;
  mutable std::mutex mutex_;
  std::map<std::string, int> per_doc_;
  std::vector<double> temperatures_;
  std::atomic<std::size_t> calls_{0};
};

class FailingBackend final : public llm::Backend {
 public:
  const std::string& model_id() const override { return id_; }
  int max_concurrent() const override { return 4; }
  llm::CompletionOutcome complete(const llm::CompletionRequest&) override {
    ++calls_;
    throw llm::BackendError(ErrorCode::kBackendUnavailable, "gave up", 4);
  }
  std::size_t calls() const override { return calls_; }

 private:
  std::string id_ = "down";
  std::atomic<std::size_t> calls_{0};
};

const registry::Registry& reg() {
  static const auto r = registry::Registry::load(testing::data_dir() / "sdg_registry.json");
  return r;
}

const prompting::PromptSpec& spec() {
  static const auto s = prompting::load_prompt_spec(testing::data_dir() / "prompt_sdg1.json");
  return s;
}

std::optional<Label> label_of(const ParseResult& r) {
  if (const auto* v = std::get_if<Verdict>(&r)) return v->label;
  return std::nullopt;
}

std::string expected_name(const ParseResult& r) {
  const auto l = label_of(r);
  return l ? std::string(label_name(*l)) : "ParseFailure";
}

}  // namespace

TEST_CASE("conforming verdicts") {
  const auto r = parse_verdict("CLASSIFICATION: Relevant\nREASONING: Reports a drop in poverty.");
  REQUIRE(std::holds_alternative<Verdict>(r));
  CHECK(std::get<Verdict>(r).label == Label::kRelevant);
  CHECK(std::get<Verdict>(r).reasoning == "Reports a drop in poverty.");

  CHECK(label_of(parse_verdict("CLASSIFICATION: Non-Relevant\nREASONING: x")) ==
        Label::kNonRelevant);
  CHECK(label_of(parse_verdict("classification: NOT RELEVANT\nreasoning: x")) ==
        Label::kNonRelevant);
  CHECK(label_of(parse_verdict("**CLASSIFICATION:** Relevant\n**REASONING:** y")) ==
        Label::kRelevant);
  CHECK(std::get<Verdict>(parse_verdict("CLASSIFICATION: Relevant\nREASONING: a\nb")).raw_text ==
        "CLASSIFICATION: Relevant\nREASONING: a\nb");
}

TEST_CASE("fallback and failures") {
  CHECK(label_of(parse_verdict("Relevant. The study measures income.")) == Label::kRelevant);
  const auto r = parse_verdict("Relevant. The study measures income.");
  CHECK(std::get<Verdict>(r).reasoning == "The study measures income.");
  CHECK(std::holds_alternative<ParseFailure>(parse_verdict("")));
  CHECK(std::holds_alternative<ParseFailure>(parse_verdict("I cannot decide.")));
  CHECK(std::holds_alternative<ParseFailure>(
      parse_verdict("It could be relevant or non-relevant depending on framing.")));
  CHECK(std::holds_alternative<ParseFailure>(parse_verdict("CLASSIFICATION: Relevant")));
  const auto late = std::string(250, 'x') + " Relevant";
  CHECK(std::holds_alternative<ParseFailure>(parse_verdict(late)));
}

TEST_CASE("parser corpus fixture") {
  std::ifstream in(testing::fixture_dir() / "parser_corpus.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    const auto text = j.at("text").get<std::string>();
    const auto r = parse_verdict(text);
    INFO(j.at("kind").get<std::string>(), ": ", text);
    CHECK(expected_name(r) == j.at("expected").get<std::string>());
    if (j.contains("reasoning") && std::holds_alternative<Verdict>(r)) {
      CHECK(std::get<Verdict>(r).reasoning == j.at("reasoning").get<std::string>());
    }
    ++n;
  }
  CHECK(n == 25);
}

TEST_CASE("parser is total and re-parsing raw text is stable") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces = {"CLASSIFICATION", ":", "REASONING", "Relevant",
                                           "Non-Relevant", "not relevant", " ", "\n", "**",
                                           "\xC3\xA9", "\xE2\x80\x94", "abc", "\x80", "\0"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) {
      if (rng() % 3 == 0) {
        text += static_cast<char>(rng() % 256);
      } else {
        text += pieces[rng() % pieces.size()];
      }
    }
    ParseResult r;
    CHECK_NOTHROW(r = parse_verdict(text));
    if (const auto* v = std::get_if<Verdict>(&r)) {
      CHECK(v->raw_text == text);
      CHECK(parse_verdict(v->raw_text) == r);
    } else {
      CHECK(std::get<ParseFailure>(r).raw_text == text);
    }
  }
}

TEST_CASE("judge uses the cache on the second call") {
  testing::TempDir dir;
  store::ResultCache cache(dir / "c.journal");
  ScriptedBackend backend("phi", [](const std::string&, int) {
    return testing::verdict_text(Label::kRelevant);
  });
  EvaluationAgent agent(reg(), spec(), backend, 8192, &cache);
  const auto doc = testing::make_doc(1);
  const auto first = agent.judge(doc);
  CHECK(first.label() == Label::kRelevant);
  CHECK_FALSE(first.from_cache);
  CHECK(first.attempts == 1);
  CHECK(first.prompt_digest == agent.prompt_digest());
  const auto second = agent.judge(doc);
  CHECK(second.from_cache);
  CHECK(second.outcome == first.outcome);
  CHECK(backend.calls() == 1);
}

TEST_CASE("unparseable output is re-asked at temperature zero") {
  ScriptedBackend gibberish("m", [](const std::string&, int) { return std::string("zzz"); });
  auto hot = spec();
  hot.decoding.temperature = 0.7;
  const auto r = judge_document(testing::make_doc(1), 1, hot, gibberish, 8192, nullptr, reg());
  CHECK(std::holds_alternative<ParseFailure>(r.outcome));
  CHECK(gibberish.calls() == 2);
  CHECK(gibberish.temperatures() == std::vector<double>{0.7, 0.0});

  ScriptedBackend second_try("m", [](const std::string&, int i) {
    return i == 0 ? std::string("zzz") : testing::verdict_text(Label::kNonRelevant);
  });
  const auto ok = judge_document(testing::make_doc(1), 1, spec(), second_try, 8192, nullptr, reg());
  CHECK(ok.label() == Label::kNonRelevant);
  CHECK(ok.attempts == 2);

  ScriptedBackend none("m", [](const std::string&, int) { return std::string("zzz"); });
  judge_document(testing::make_doc(1), 1, spec(), none, 8192, nullptr, reg(), {0, 3.0});
  CHECK(none.calls() == 1);
}

TEST_CASE("backend failures become records and are not cached") {
  testing::TempDir dir;
  store::ResultCache cache(dir / "c.journal");
  FailingBackend down;
  const auto r = judge_document(testing::make_doc(1), 1, spec(), down, 8192, &cache, reg());
  REQUIRE(std::holds_alternative<BackendFailure>(r.outcome));
  CHECK(r.attempts == 4);
  CHECK(cache.stats().entries == 0);
  CHECK(down.calls() == 1);
}

TEST_CASE("judging a document without the goal label warns") {
  std::vector<std::string> warnings;
  std::mutex m;
  log::set_sink([&](log::Level level, std::string_view msg) {
    std::lock_guard lock(m);
    if (level == log::Level::kWarning) warnings.emplace_back(msg);
  });
  ScriptedBackend backend("m", [](const std::string&, int) {
    return testing::verdict_text(Label::kRelevant);
  });
  const auto r =
      judge_document(testing::make_doc(1, {13}), 1, spec(), backend, 8192, nullptr, reg());
  log::set_sink(nullptr);
  CHECK(r.label() == Label::kRelevant);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("not labeled with goal 1") != std::string::npos);
}

TEST_CASE("judge_corpus counts, skips and keeps input order") {
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 13; ++i) docs.push_back(testing::make_doc(i, i < 10 ? std::set<int>{1, 5}
                                                                          : std::set<int>{13}));
  std::set<std::string> relevant;
  for (int i = 0; i < 6; ++i) relevant.insert(docs[i].doc_key);
  auto script = [&](const std::string& key, int) {
    return testing::verdict_text(relevant.count(key) ? Label::kRelevant : Label::kNonRelevant);
  };

  std::optional<RunResult> reference;
  for (int workers : {1, 3, 8}) {
    ScriptedBackend backend("phi", script);
    const auto run = judge_corpus(docs, 1, spec(), backend, 8192, nullptr, reg(), workers);
    const auto c = run.counts();
    CHECK(c.relevant == 6);
    CHECK(c.nonrelevant == 4);
    CHECK(run.skipped == 3);
    REQUIRE(run.records.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(run.records[i].doc_key == docs[i].doc_key);
    CHECK(run.run_id.size() == 16);
    if (reference) {
      CHECK(same_content(run, *reference));
      CHECK(run.run_id == reference->run_id);
    } else {
      reference = run;
    }
  }

  docs.push_back(docs.front());
  ScriptedBackend backend("phi", script);
  try {
    judge_corpus(docs, 1, spec(), backend, 8192, nullptr, reg(), 2);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
  }
  CHECK_THROWS_AS(judge_corpus(docs, 2, spec(), backend, 8192, nullptr, reg(), 2), Error);
}

TEST_CASE("judge_corpus can persist the run") {
  testing::TempDir dir;
  ScriptedBackend backend("phi", [](const std::string&, int) {
    return testing::verdict_text(Label::kRelevant);
  });
  const std::vector<corpus::Document> docs = {testing::make_doc(1), testing::make_doc(2)};
  const auto run =
      judge_corpus(docs, 1, spec(), backend, 8192, nullptr, reg(), 2, {}, dir.path() / "run");
  const auto back = store::read_run(dir.path() / "run");
  CHECK(same_content(run, back));
  CHECK(back.run_id == run.run_id);
}

TEST_CASE("run ids depend on every input") {
  std::vector<JudgedRecord> rs = {testing::labeled_record("a", "m", Label::kRelevant),
                                  testing::labeled_record("b", "m", Label::kRelevant)};
  const auto id = make_run_id(1, "m", "d", rs);
  CHECK(id == make_run_id(1, "m", "d", rs));
  CHECK(id != make_run_id(2, "m", "d", rs));
  CHECK(id != make_run_id(1, "n", "d", rs));
  CHECK(id != make_run_id(1, "m", "e", rs));
  std::swap(rs[0], rs[1]);
  CHECK(id != make_run_id(1, "m", "d", rs));
}
