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
#include "cli_support.hpp"
#include "doctest.h"
#include "sdgjudge/store.hpp"
#include "test_support.hpp"

using namespace sdgjudge;
using nlohmann::json;
using testing::run_cli;

namespace {

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// Ingests `n` synthetic documents and writes a replay script for three
// models; returns the corpus path.
std::filesystem::path prepare(const testing::TempDir& dir, int n) {
  testing::write_synthetic_csv(dir / "hits.csv", n);
  const auto corpus = dir / "corpus.jsonl";
  const auto r = run_cli({"ingest", "--in", (dir / "hits.csv").string(), "--out", corpus.string()});
  REQUIRE(r.code == 0);
  const auto keys = testing::corpus_doc_keys(corpus);
  testing::write_replay(dir / "replay.jsonl", keys, {"phi", "mistral", "llama"},
                        testing::rate_script({{"phi", 50}, {"mistral", 80}, {"llama", 20}},
                                             keys.size()));
  return corpus;
}

}  // namespace

TEST_CASE("ingest happy path") {
  testing::TempDir dir;
  const auto out = dir / "corpus.jsonl";
  const auto r = run_cli({"ingest", "--in", (testing::fixture_dir() / "mixed_ingest.csv").string(),
                          "--format", "csv", "--out", out.string()});
  INFO(r.output);
  CHECK(r.code == 0);
  CHECK(contains(r.output, "ingested: 11"));
  CHECK(contains(r.output, "documents: 3"));
  CHECK(std::filesystem::exists(out));
  CHECK(testing::corpus_doc_keys(out).size() == 3);
}

TEST_CASE("duplicate DOIs across goals are merged with labels unioned") {
  testing::TempDir dir;
  testing::write_text(dir / "dups.csv",
                      "source_id,doi,title,abstract,year,venue,sdg_query_label\n"
                      "A1,10.1/Dup,Cash transfers,Cash transfers cut poverty.,2022,,1\n"
                      "B7,10.1/dup,Cash transfers,Cash transfers cut poverty.,2022,,5\n");
  const auto r = run_cli({"--json", "ingest", "--in", (dir / "dups.csv").string(), "--out",
                          (dir / "c.jsonl").string()});
  INFO(r.output);
  REQUIRE(r.code == 0);
  const auto summary = json::parse(r.output.substr(r.output.find('{')));
  CHECK(summary["merged"] == 1);
  CHECK(summary["documents"] == 1);
  const auto doc = json::parse(testing::read_text(dir / "c.jsonl"));
  CHECK(doc["sdg_labels"] == json({1, 5}));
}

TEST_CASE("usage and config errors exit with 2") {
  testing::TempDir dir;
  auto r = run_cli({"ingest", "--in", (dir / "missing.csv").string()});
  CHECK(r.code == 2);
  CHECK(contains(r.output, (dir / "missing.csv").string()));

  r = run_cli({"--out-dir", dir.path().string(), "classify", "--goal", "99"});
  CHECK(r.code == 2);
  CHECK(contains(r.output, "99"));

  r = run_cli({"classify"});
  CHECK(r.code == 2);
  r = run_cli({"frobnicate"});
  CHECK(r.code == 2);
  r = run_cli({"--config", (dir / "nope.toml").string(), "cache", "stats"});
  CHECK(r.code == 2);
}

TEST_CASE("classify twice hits the cache, then ensemble and report") {
  testing::TempDir dir;
  const auto corpus = prepare(dir, 40);
  const auto out = dir / "out";
  const std::vector<std::string> global = {"--out-dir", out.string(), "--replay",
                                           (dir / "replay.jsonl").string()};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.begin(), global.begin(), global.end());
    return run_cli(args);
  };

  auto r = with({"classify", "--goal", "1", "--corpus", corpus.string(), "--models", "all"});
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(contains(r.output, "cache hits: 0%"));
  for (const char* m : {"phi", "mistral", "llama"}) {
    CHECK(std::filesystem::exists(out / "goal1" / m / "verdicts.jsonl"));
  }
  const auto first = testing::read_text(out / "goal1" / "phi" / "verdicts.jsonl");

  r = with({"classify", "--goal", "1", "--corpus", corpus.string()});
  REQUIRE(r.code == 0);
  CHECK(contains(r.output, "cache hits: 100%"));
  CHECK(contains(r.output, "backend calls: 0"));
  CHECK(testing::read_text(out / "goal1" / "phi" / "verdicts.jsonl") == first);

  const auto run = [&](const char* m) { return (out / "goal1" / m).string(); };
  r = with({"ensemble", "--goal", "1", "--rule", "cascade", "--runs", run("mistral"), run("phi"),
            run("llama")});
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(contains(r.output, "stage mistral: 40 invocations"));
  CHECK(contains(r.output, "stage phi: 32 invocations"));
  CHECK(contains(r.output, "stage llama: 20 invocations"));
  CHECK(contains(r.output, "combined relevant rate: 20%"));
  CHECK(std::filesystem::exists(out / "goal1" / "panel_cascade.jsonl"));

  r = with({"ensemble", "--goal", "1", "--rule", "majority", "--runs", run("mistral"), run("phi"),
            run("llama")});
  REQUIRE(r.code == 0);
  CHECK(contains(r.output, "combined relevant rate: 50%"));

  r = with({"report", "--goal", "1", "--runs", run("phi"), run("mistral"), run("llama")});
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(contains(r.output, "50.0"));
  CHECK(contains(r.output, "80.0"));
  CHECK(contains(r.output, "20.0"));
  CHECK(std::filesystem::exists(out / "goal1" / "report" / "report.json"));

  r = with({"report", "--goal", "1", "--runs", run("phi"), run("mistral")});
  CHECK(r.code == 2);
  CHECK(contains(r.output, "arity"));

  testing::write_text(dir / "blocker", "x");
  r = with({"report", "--goal", "1", "--runs", run("phi"), run("mistral"), run("llama"), "--out",
            (dir / "blocker" / "report").string()});
  CHECK(r.code != 0);

  r = with({"cache", "stats"});
  REQUIRE(r.code == 0);
  CHECK(contains(r.output, "entries: 120"));
}

TEST_CASE("ensemble over disjoint runs is an undefined comparison") {
  testing::TempDir dir;
  auto a = testing::make_run("a", {Label::kRelevant});
  auto b = testing::make_run("b", {Label::kRelevant});
  b.records[0].doc_key = "elsewhere";
  store::write_run(a, dir / "a");
  store::write_run(b, dir / "b");
  const auto r = run_cli({"ensemble", "--goal", "1", "--rule", "unanimous", "--runs",
                          (dir / "a").string(), (dir / "b").string(), "--out",
                          (dir / "panel.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(contains(r.output, "undefined comparison"));

  const auto missing = run_cli({"ensemble", "--goal", "1", "--runs", (dir / "a").string(),
                                (dir / "zzz").string()});
  CHECK(missing.code != 0);
}
