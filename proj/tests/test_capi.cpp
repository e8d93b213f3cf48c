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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sdgjudge/sdgjudge.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path path;
  Scratch() {
    std::string tmpl = (fs::temp_directory_path() / "sdgjudge-capi-XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  sdgj_string_free(s);
  return out;
}

json take_json(char* s) { return json::parse(take(s)); }

struct Pipeline {
  sdgj_pipeline* p = nullptr;
  Pipeline() { REQUIRE(sdgj_pipeline_create(nullptr, SDGJ_TEST_DATA_DIR, &p) == SDGJ_OK); }
  ~Pipeline() { sdgj_pipeline_destroy(p); }
};

std::vector<std::string> log_lines;

void capture(sdgj_log_level level, const char* message, void*) {
  if (level >= SDGJ_LOG_WARNING) log_lines.emplace_back(message);
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::string(sdgj_version()).size() > 0);
  CHECK(std::string(sdgj_status_string(SDGJ_OK)) != "");
  CHECK(std::string(sdgj_status_string(SDGJ_E_ARITY)) !=
        std::string(sdgj_status_string(SDGJ_E_PARSE)));
}

TEST_CASE("pure helpers") {
  char* out = nullptr;
  REQUIRE(sdgj_strip_copyright("Savings rose. \xC2\xA9 2023 Elsevier B.V. All rights reserved.",
                               &out) == SDGJ_OK);
  CHECK(take(out) == "Savings rose.");

  sdgj_label label = SDGJ_NON_RELEVANT;
  char* reasoning = nullptr;
  REQUIRE(sdgj_parse_verdict("CLASSIFICATION: Relevant\nREASONING: cash transfers.", &label,
                             &reasoning) == SDGJ_OK);
  CHECK(label == SDGJ_RELEVANT);
  CHECK(take(reasoning) == "cash transfers.");
  CHECK(sdgj_parse_verdict("no idea", &label, nullptr) == SDGJ_E_PARSE);
  CHECK(std::string(sdgj_last_error_message()).find("no label") != std::string::npos);

  const sdgj_label votes[] = {SDGJ_RELEVANT, SDGJ_NON_RELEVANT};
  int tie = 0;
  REQUIRE(sdgj_majority_vote(votes, 2, &label, &tie) == SDGJ_OK);
  CHECK(label == SDGJ_NON_RELEVANT);
  CHECK(tie == 1);
  CHECK(sdgj_majority_vote(votes, 0, &label, &tie) == SDGJ_E_INVALID_ARGUMENT);

  const sdgj_label R = SDGJ_RELEVANT;
  const sdgj_label N = SDGJ_NON_RELEVANT;
  const sdgj_label a[] = {R, R, R, N, N, N, R, N, R, N};
  const sdgj_label b[] = {R, R, N, N, N, N, R, R, R, N};
  double kappa = 0;
  int degenerate = 1;
  REQUIRE(sdgj_cohen_kappa(a, b, 10, &kappa, &degenerate) == SDGJ_OK);
  CHECK(kappa == doctest::Approx(0.6));
  CHECK(degenerate == 0);
  REQUIRE(sdgj_cohen_kappa(a, a, 3, &kappa, &degenerate) == SDGJ_OK);
  CHECK(degenerate == 1);

  CHECK(sdgj_strip_copyright(nullptr, &out) == SDGJ_E_INVALID_ARGUMENT);
  CHECK(std::string(sdgj_last_error_message()).size() > 0);
}

TEST_CASE("pipeline end to end through the C API") {
  Scratch dir;
  Pipeline pl;
  log_lines.clear();
  sdgj_set_log_callback(capture, nullptr);
  const auto out = (dir.path / "out").string();
  const auto corpus = (dir.path / "corpus.jsonl").string();
  REQUIRE(sdgj_pipeline_set(pl.p, "out_dir", out.c_str()) == SDGJ_OK);
  CHECK(sdgj_pipeline_set(pl.p, "colour", "blue") == SDGJ_E_INVALID_ARGUMENT);
  CHECK(sdgj_pipeline_set(pl.p, "workers", "zero") == SDGJ_E_CONFIG);

  const std::string input = std::string(SDGJ_TEST_FIXTURE_DIR) + "/mixed_ingest.csv";
  const char* inputs[] = {input.c_str()};
  char* summary = nullptr;
  REQUIRE(sdgj_ingest(pl.p, inputs, 1, nullptr, corpus.c_str(), &summary) == SDGJ_OK);
  const auto ingest = take_json(summary);
  CHECK(ingest["documents"] == 3);
  CHECK(ingest["merged"] == 1);
  CHECK_FALSE(log_lines.empty());

  std::vector<std::string> goal1;
  {
    std::ifstream in(corpus);
    std::string line;
    while (std::getline(in, line)) {
      const auto doc = json::parse(line);
      for (const auto& l : doc["sdg_labels"]) {
        if (l == 1) goal1.push_back(doc["doc_key"]);
      }
    }
  }
  REQUIRE(goal1.size() == 2);
  {
    std::ofstream script(dir.path / "replay.jsonl");
    const std::vector<std::pair<std::string, std::vector<const char*>>> answers = {
        {"phi", {"Relevant", "Relevant"}},
        {"llama", {"Relevant", "Non-Relevant"}},
        {"mistral", {"Non-Relevant", "Non-Relevant"}}};
    for (const auto& [model, labels] : answers) {
      for (std::size_t i = 0; i < goal1.size(); ++i) {
        script << json{{"doc_key", goal1[i]},
                       {"model_id", model},
                       {"text", std::string("CLASSIFICATION: ") + labels[i] + "\nREASONING: r"}}
                      .dump()
               << "\n";
      }
    }
  }
  const auto replay = (dir.path / "replay.jsonl").string();
  REQUIRE(sdgj_pipeline_set(pl.p, "replay", replay.c_str()) == SDGJ_OK);

  REQUIRE(sdgj_classify(pl.p, 1, corpus.c_str(), nullptr, &summary) == SDGJ_OK);
  const auto first = take_json(summary);
  REQUIRE(first["runs"].size() == 3);
  CHECK(first["records"] == 6);
  CHECK(first["cache_hits"] == 0);

  REQUIRE(sdgj_classify(pl.p, 1, corpus.c_str(), "phi,llama,mistral", &summary) == SDGJ_OK);
  const auto second = take_json(summary);
  CHECK(second["cache_hits"] == 6);
  CHECK(second["cache_hit_pct"] == 100.0);

  REQUIRE(sdgj_ensemble(pl.p, 1, "majority", nullptr, 0, nullptr, &summary) == SDGJ_OK);
  const auto panel = take_json(summary);
  CHECK(panel["documents"] == 2);
  CHECK(panel["relevant"] == 1);
  CHECK(panel["nonrelevant"] == 1);

  const std::string runs[] = {out + "/goal1/phi", out + "/goal1/llama", out + "/goal1/mistral"};
  const char* run_ptrs[] = {runs[0].c_str(), runs[1].c_str(), runs[2].c_str()};
  REQUIRE(sdgj_report(pl.p, 1, run_ptrs, 3, nullptr, &summary) == SDGJ_OK);
  const auto report = take_json(summary);
  CHECK(report["runs"][0]["pct_relevant"] == 100.0);
  CHECK(fs::exists(fs::path(out) / "goal1" / "report" / "proportions.svg"));

  CHECK(sdgj_report(pl.p, 1, run_ptrs, 2, nullptr, &summary) == SDGJ_E_ARITY);
  CHECK(sdgj_classify(pl.p, 99, corpus.c_str(), nullptr, &summary) == SDGJ_E_CONFIG);
  CHECK(std::string(sdgj_last_error_message()).find("99") != std::string::npos);

  REQUIRE(sdgj_cache_stats(pl.p, nullptr, &summary) == SDGJ_OK);
  CHECK(take_json(summary)["entries"] == 6);
  sdgj_set_log_callback(nullptr, nullptr);
}

TEST_CASE("missing inputs and configs") {
  sdgj_pipeline* p = nullptr;
  CHECK(sdgj_pipeline_create("/nonexistent/config.toml", SDGJ_TEST_DATA_DIR, &p) != SDGJ_OK);
  CHECK(p == nullptr);
  Pipeline pl;
  const char* inputs[] = {"/nonexistent/input.csv"};
  CHECK(sdgj_ingest(pl.p, inputs, 1, nullptr, nullptr, nullptr) == SDGJ_E_NOT_FOUND);
  CHECK(std::string(sdgj_last_error_message()).find("/nonexistent/input.csv") !=
        std::string::npos);
  CHECK(sdgj_ingest(nullptr, inputs, 1, nullptr, nullptr, nullptr) == SDGJ_E_INVALID_ARGUMENT);
}
