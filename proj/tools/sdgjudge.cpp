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
// sdgjudge: ingest bibliographic records, classify them against an SDG with
// one or more chat models, combine the verdicts and report agreement.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdgjudge/sdgjudge.h"

#ifndef SDGJ_DEFAULT_DATA_DIR
#define SDGJ_DEFAULT_DATA_DIR "data"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::string out_dir;
  std::string replay;
  std::string data_dir = SDGJ_DEFAULT_DATA_DIR;
  bool json = false;
  int verbosity = 0;
  bool quiet = false;

  std::vector<std::string> inputs;
  std::string format;
  std::string out;

  int goal = 0;
  std::string corpus;
  std::string models = "all";
  int workers = 0;
  std::string cache;
  bool no_cache = false;

  std::string rule;
  std::vector<std::string> runs;
};

int exit_code(sdgj_status s) {
  switch (s) {
    case SDGJ_OK: return kExitOk;
    case SDGJ_E_INVALID_ARGUMENT:
    case SDGJ_E_CONFIG:
    case SDGJ_E_NOT_FOUND:
    case SDGJ_E_ARITY: return kExitUsage;
    default: return kExitRuntime;
  }
}

int report_failure(sdgj_status s) {
  std::cerr << "sdgjudge: " << sdgj_status_string(s) << ": " << sdgj_last_error_message() << "\n";
  return exit_code(s);
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s + "%";
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

class Handle {
 public:
  ~Handle() { sdgj_pipeline_destroy(p_); }
  sdgj_pipeline* get() const { return p_; }
  sdgj_pipeline** out() { return &p_; }

 private:
  sdgj_pipeline* p_ = nullptr;
};

void print_ingest(const nlohmann::json& s) {
  std::cout << "ingested: " << s["ingested"] << "\n"
            << "row errors: " << s["row_errors"] << "\n"
            << "rejected: " << s["rejected"] << "\n";
  for (const auto& [reason, n] : s["rejected_by_reason"].items()) {
    std::cout << "  " << reason << ": " << n << "\n";
  }
  std::cout << "merged: " << s["merged"] << "\n"
            << "documents: " << s["documents"] << "\n"
            << "written: " << s["output"].get<std::string>() << "\n";
}

void print_classify(const nlohmann::json& s) {
  for (const auto& r : s["runs"]) {
    std::cout << r["model_id"].get<std::string>() << ": " << r["records"] << " records, "
              << r["relevant"] << " relevant, " << r["nonrelevant"] << " non-relevant, "
              << r["parse_failures"] << " parse failures, " << r["backend_failures"]
              << " backend failures, " << r["skipped"] << " skipped, backend calls: "
              << r["backend_calls"] << ", cache hits: " << pct(r["cache_hit_pct"].get<double>())
              << "\n  -> " << r["dir"].get<std::string>() << "\n";
  }
  std::cout << "cache hits: " << pct(s["cache_hit_pct"].get<double>()) << "\n";
}

void print_ensemble(const nlohmann::json& s) {
  std::cout << "rule: " << s["rule"].get<std::string>() << "\n"
            << "documents: " << s["documents"] << "\n"
            << "relevant: " << s["relevant"] << "\n"
            << "non-relevant: " << s["nonrelevant"] << "\n"
            << "undecided: " << s["undecided"] << "\n"
            << "ties: " << s["ties"] << "\n"
            << "combined relevant rate: " << pct(s["combined_relevant_pct"].get<double>()) << "\n";
  for (const auto& st : s["stage_invocations"]) {
    std::cout << "stage " << st["model_id"].get<std::string>() << ": " << st["invocations"]
              << " invocations\n";
  }
  std::cout << "written: " << s["output"].get<std::string>() << "\n";
}

void print_report(const nlohmann::json& s) {
  std::cout << s["table"].get<std::string>();
  for (const auto& p : s["pairwise"]) {
    const auto a = p["model_a"].get<std::string>();
    const auto b = p["model_b"].get<std::string>();
    if (a >= b) continue;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", p["agreement_rate"].get<double>());
    std::cout << a << " vs " << b << ": agreement " << buf << ", kappa ";
    if (p["kappa"].is_number()) {
      std::snprintf(buf, sizeof buf, "%.4f", p["kappa"].get<double>());
      std::cout << buf << "\n";
    } else {
      std::cout << "degenerate\n";
    }
  }
  for (const auto& f : s["files"]) std::cout << "written: " << f.get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Classify research abstracts against UN Sustainable Development Goals with chat models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sdgj_version()));
  app.add_option("--config", o.config, "Pipeline config file (.toml or .json)");
  app.add_option("--out-dir", o.out_dir, "Output directory (overrides the config)");
  app.add_option("--replay", o.replay, "Replay script: scripted completions instead of live models");
  app.add_option("--data-dir", o.data_dir, "Directory with the shipped registry and prompt spec");
  app.add_flag("--json", o.json, "Print the JSON summary instead of text");
  app.add_flag("-v,--verbose", o.verbosity, "More logging (repeatable)");
  app.add_flag("-q,--quiet", o.quiet, "Only log errors");

  auto* ingest = app.add_subcommand("ingest", "Build a deduplicated corpus from CSV/JSONL exports");
  ingest->add_option("--in", o.inputs, "Input file(s)");
  ingest->add_option("--format", o.format, "csv or jsonl (default: from the extension)");
  ingest->add_option("--out", o.out, "Corpus JSONL to write");

  auto* classify = app.add_subcommand("classify", "Judge every corpus document for one goal");
  classify->add_option("--goal", o.goal, "SDG number (1-17)")->required();
  classify->add_option("--corpus", o.corpus, "Corpus JSONL");
  classify->add_option("--models", o.models, "Comma-separated model ids, or 'all'");
  classify->add_option("--workers", o.workers, "Parallel workers");
  classify->add_option("--cache", o.cache, "Result cache journal");
  classify->add_flag("--no-cache", o.no_cache, "Do not read or write the result cache");

  auto* ens = app.add_subcommand("ensemble", "Combine finished runs into panel verdicts");
  ens->add_option("--goal", o.goal, "SDG number (1-17)")->required();
  ens->add_option("--rule", o.rule, "majority, unanimous or cascade");
  ens->add_option("--runs", o.runs, "Run directories (cascade: broad to strict)");
  ens->add_option("--out", o.out, "panel JSONL to write");

  auto* rep = app.add_subcommand("report", "Proportions, agreement and Venn counts for three runs");
  rep->add_option("--goal", o.goal, "SDG number (1-17)")->required();
  rep->add_option("--runs", o.runs, "Exactly three run directories");
  rep->add_option("--out", o.out, "Report directory");

  auto* cache = app.add_subcommand("cache", "Inspect the result cache");
  cache->require_subcommand(1);
  auto* stats = cache->add_subcommand("stats", "Entry and journal line counts");
  stats->add_option("--cache", o.cache, "Result cache journal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  sdgj_set_log_level(o.quiet ? SDGJ_LOG_ERROR
                             : (o.verbosity > 0 ? SDGJ_LOG_DEBUG : SDGJ_LOG_INFO));

  Handle p;
  sdgj_status s = sdgj_pipeline_create(or_null(o.config), o.data_dir.c_str(), p.out());
  if (s != SDGJ_OK) return report_failure(s);
  auto set = [&](const char* key, const std::string& value) {
    if (s == SDGJ_OK && !value.empty()) s = sdgj_pipeline_set(p.get(), key, value.c_str());
  };
  set("out_dir", o.out_dir);
  set("replay", o.replay);
  set("cache", o.cache);
  if (o.no_cache) set("no_cache", "1");
  if (o.workers != 0) set("workers", std::to_string(o.workers));
  if (s != SDGJ_OK) return report_failure(s);

  char* raw = nullptr;
  void (*print)(const nlohmann::json&) = nullptr;
  if (*ingest) {
    const auto in = c_strings(o.inputs);
    s = sdgj_ingest(p.get(), in.data(), in.size(), or_null(o.format), or_null(o.out), &raw);
    print = print_ingest;
  } else if (*classify) {
    s = sdgj_classify(p.get(), o.goal, or_null(o.corpus), o.models.c_str(), &raw);
    print = print_classify;
  } else if (*ens) {
    const auto runs = c_strings(o.runs);
    s = sdgj_ensemble(p.get(), o.goal, or_null(o.rule), runs.data(), runs.size(), or_null(o.out),
                      &raw);
    print = print_ensemble;
  } else if (*rep) {
    const auto runs = c_strings(o.runs);
    s = sdgj_report(p.get(), o.goal, runs.data(), runs.size(), or_null(o.out), &raw);
    print = print_report;
  } else {
    s = sdgj_cache_stats(p.get(), or_null(o.cache), &raw);
    print = [](const nlohmann::json& j) {
      std::cout << "cache: " << j["path"].get<std::string>() << "\n"
                << "entries: " << j["entries"] << "\n"
                << "journal lines: " << j["journal_lines"] << "\n"
                << "corrupted lines: " << j["corrupted_lines"] << "\n";
    };
  }
  if (s != SDGJ_OK) return report_failure(s);

  const std::string text = raw != nullptr ? raw : "{}";
  sdgj_string_free(raw);
  const auto summary = nlohmann::json::parse(text);
  if (o.json) {
    std::cout << summary.dump(2) << "\n";
  } else {
    print(summary);
  }
  return kExitOk;
}
