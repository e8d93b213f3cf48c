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

#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "sdgjudge/corpus.hpp"
#include "sdgjudge/prompting.hpp"
#include "sdgjudge/records.hpp"

namespace testing {

#ifndef SDGJ_TEST_DATA_DIR
#define SDGJ_TEST_DATA_DIR "data"
#endif
#ifndef SDGJ_TEST_FIXTURE_DIR
#define SDGJ_TEST_FIXTURE_DIR "tests/fixtures"
#endif

inline std::filesystem::path data_dir() { return SDGJ_TEST_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return SDGJ_TEST_FIXTURE_DIR; }

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "sdgjudge-test-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// httplib server on an ephemeral loopback port, served from a thread.
class MockServer {
 public:
  MockServer() = default;
  ~MockServer() { stop(); }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline sdgjudge::corpus::Document make_doc(int i, std::set<int> labels = {1}) {
  sdgjudge::corpus::Document d;
  d.doi = "10.1000/doc" + std::to_string(i);
  d.doc_key = *d.doi;
  d.title = "Document number " + std::to_string(i);
  d.abstract = "We study household income in region " + std::to_string(i) + ". Results follow.";
  d.year = 2020;
  d.sdg_labels = std::move(labels);
  return d;
}

inline std::string verdict_text(sdgjudge::Label label) {
  return std::string("CLASSIFICATION: ") + std::string(sdgjudge::label_name(label)) +
         "\nREASONING: scripted reasoning for the fixture.";
}

/// A record with a parsed verdict; doc_key "d<i>".
inline sdgjudge::JudgedRecord labeled_record(const std::string& doc_key, const std::string& model,
                                             std::optional<sdgjudge::Label> label, int goal = 1) {
  sdgjudge::JudgedRecord r;
  r.doc_key = doc_key;
  r.goal_number = goal;
  r.model_id = model;
  r.prompt_digest = "digest";
  r.attempts = 1;
  if (label) {
    r.outcome = sdgjudge::Verdict{*label, "because", verdict_text(*label)};
  } else {
    r.outcome = sdgjudge::ParseFailure{"gibberish", "no label"};
  }
  return r;
}

inline sdgjudge::RunResult make_run(const std::string& model,
                                    const std::vector<std::optional<sdgjudge::Label>>& labels,
                                    int goal = 1) {
  sdgjudge::RunResult run;
  run.run_id = "run-" + model;
  run.goal_number = goal;
  run.model_id = model;
  run.prompt_digest = "digest";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    run.records.push_back(labeled_record("d" + std::to_string(i), model, labels[i], goal));
  }
  return run;
}

}  // namespace testing
