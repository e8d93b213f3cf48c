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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdgjudge/prompting.hpp"

namespace testing {

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::string cmd = shell_quote(SDGJ_CLI_PATH) + " --data-dir " + shell_quote(SDGJ_TEST_DATA_DIR);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>&1";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Abstract CSV with `n` documents labeled with `goal`, DOIs 10.7000/s<i>.
inline void write_synthetic_csv(const std::filesystem::path& path, int n, int goal = 1) {
  std::ofstream out(path, std::ios::binary);
  out << "source_id,doi,title,abstract,year,venue,sdg_query_label\n";
  for (int i = 0; i < n; ++i) {
    out << "S" << i << ",10.7000/s" << i << ",Synthetic study " << i
        << ",\"We measure household outcomes in setting " << i
        << ". Effects are reported with confidence intervals.\",2021,,"
        << goal << "\n";
  }
}

inline std::vector<std::string> corpus_doc_keys(const std::filesystem::path& corpus) {
  std::vector<std::string> keys;
  std::ifstream in(corpus);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) keys.push_back(nlohmann::json::parse(line).at("doc_key"));
  }
  return keys;
}

/// One scripted completion per (doc_key, model); `label_for(model, index)`
/// picks the label of the index-th document.
inline void write_replay(const std::filesystem::path& path, const std::vector<std::string>& keys,
                         const std::vector<std::string>& models,
                         const std::function<sdgjudge::Label(const std::string&, std::size_t)>&
                             label_for) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& model : models) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto label = label_for(model, i);
      out << nlohmann::json{{"doc_key", keys[i]},
                            {"model_id", model},
                            {"text", std::string("CLASSIFICATION: ") +
                                         std::string(sdgjudge::label_name(label)) +
                                         "\nREASONING: scripted."}}
                 .dump()
          << "\n";
    }
  }
}

/// Relevant for the first pct% of documents, exactly, when n is a multiple of 100.
inline std::function<sdgjudge::Label(const std::string&, std::size_t)> rate_script(
    std::map<std::string, int> pct, std::size_t n) {
  return [pct = std::move(pct), n](const std::string& model, std::size_t i) {
    return i * 100 < pct.at(model) * n ? sdgjudge::Label::kRelevant
                                       : sdgjudge::Label::kNonRelevant;
  };
}

}  // namespace testing
