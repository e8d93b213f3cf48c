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
#include "sdgjudge/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "sdgjudge/analytics.hpp"
#include "sdgjudge/digest.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/evaluation.hpp"
#include "sdgjudge/log.hpp"
#include "sdgjudge/store.hpp"
#include "text_util.hpp"

namespace sdgjudge::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_goal(int goal) {
  if (!corpus::is_valid_goal(goal)) {
    throw Error(ErrorCode::kConfig, "goal " + std::to_string(goal) + " is outside 1..17");
  }
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

corpus::InputFormat guess_format(const fs::path& p, corpus::InputFormat fallback) {
  const auto ext = detail::to_lower_ascii(p.extension().string());
  if (ext == ".csv") return corpus::InputFormat::kCsv;
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return corpus::InputFormat::kJsonl;
  return fallback;
}

double percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

fs::path run_dir(const fs::path& out_dir, int goal, const std::string& model_id) {
  std::string safe;
  for (char c : model_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    safe += ok ? c : '_';
  }
  if (safe.empty() || safe == "." || safe == "..") safe = "_" + safe;
  return out_dir / ("goal" + std::to_string(goal)) / safe;
}

Pipeline::Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)) {}

fs::path Pipeline::cache_path() const {
  return cfg_.cache_path ? *cfg_.cache_path : cfg_.out_dir / "cache" / "verdicts.journal";
}

json Pipeline::ingest(const std::vector<fs::path>& inputs_arg,
                      std::optional<corpus::InputFormat> format,
                      const std::optional<fs::path>& out) {
  const auto& inputs = inputs_arg.empty() ? cfg_.corpus_inputs : inputs_arg;
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "no input files given");
  for (const auto& p : inputs) {
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::kNotFound, "input not found: " + p.string());
  }
  const auto stripper = cfg_.copyright_patterns
                            ? corpus::CopyrightStripper::from_file(*cfg_.copyright_patterns)
                            : corpus::CopyrightStripper();

  corpus::IngestResult all;
  for (const auto& p : inputs) {
    auto part = corpus::ingest_file(p, format.value_or(guess_format(p, cfg_.input_format)));
    for (auto& e : part.errors) {
      e.message = p.filename().string() + ": " + e.message;
      log::warn("row " + std::to_string(e.row) + " of " + e.message);
    }
    std::move(part.records.begin(), part.records.end(), std::back_inserter(all.records));
    std::move(part.errors.begin(), part.errors.end(), std::back_inserter(all.errors));
  }
  const auto summary = corpus::build_corpus(all, stripper);
  for (const auto& w : summary.warnings) log::warn(w);

  const fs::path target = out.value_or(cfg_.corpus_path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  corpus::write_corpus(summary.documents, target);

  std::map<std::string, std::size_t> by_reason;
  for (const auto& r : summary.rejections) ++by_reason[std::string(corpus::rejection_reason_name(r.reason))];
  return {{"ingested", summary.ingested},
          {"row_errors", summary.row_errors},
          {"rejected", summary.rejected},
          {"rejected_by_reason", by_reason},
          {"valid", summary.valid},
          {"merged", summary.merged},
          {"documents", summary.documents.size()},
          {"output", target.string()}};
}

json Pipeline::classify(int goal, const std::optional<fs::path>& corpus_arg,
                        const std::vector<std::string>& models_arg) {
  check_goal(goal);
  const auto reg = registry::Registry::load(cfg_.registry_path);
  if (!reg.has_goal(goal)) {
    throw Error(ErrorCode::kConfig, "goal " + std::to_string(goal) + " is not in the registry");
  }
  std::optional<prompting::PromptSpec> spec;
  fs::path spec_path;
  for (const auto& p : cfg_.prompt_specs) {
    auto candidate = prompting::load_prompt_spec(p);
    if (candidate.goal_number == goal) {
      spec = std::move(candidate);
      spec_path = p;
      break;
    }
  }
  if (!spec) {
    throw Error(ErrorCode::kConfig, "no prompt spec configured for goal " + std::to_string(goal));
  }
  prompting::validate(*spec, reg);

  std::shared_ptr<const llm::ReplayScript> script;
  if (replay_) {
    if (!fs::is_regular_file(*replay_)) {
      throw Error(ErrorCode::kNotFound, "replay script not found: " + replay_->string());
    }
    script = std::make_shared<const llm::ReplayScript>(llm::ReplayScript::load(*replay_));
  }

  std::map<std::string, llm::ModelConfig> configured;
  std::vector<std::string> available;
  for (const auto& m : cfg_.models) {
    configured[m.model_id] = m;
    available.push_back(m.model_id);
  }
  if (available.empty() && script) available = script->model_ids();

  std::vector<std::string> selected;
  const bool all = models_arg.empty() ||
                   std::find(models_arg.begin(), models_arg.end(), "all") != models_arg.end();
  if (all) {
    selected = available;
  } else {
    for (const auto& m : models_arg) {
      if (std::find(available.begin(), available.end(), m) == available.end()) {
        throw Error(ErrorCode::kConfig, "model '" + m + "' is not configured");
      }
      if (std::find(selected.begin(), selected.end(), m) == selected.end()) selected.push_back(m);
    }
  }
  if (selected.empty()) throw Error(ErrorCode::kConfig, "no models configured for classify");

  const fs::path corpus_path = corpus_arg.value_or(cfg_.corpus_path);
  if (!fs::is_regular_file(corpus_path)) {
    throw Error(ErrorCode::kNotFound, "corpus not found: " + corpus_path.string());
  }
  const auto docs = corpus::read_corpus(corpus_path);

  std::unique_ptr<store::ResultCache> cache;
  if (cache_enabled_) {
    const auto cp = cache_path();
    if (cp.has_parent_path()) fs::create_directories(cp.parent_path());
    cache = std::make_unique<store::ResultCache>(cp);
  }

  evaluation::JudgeOptions options;
  options.reasks = cfg_.reasks;
  options.chars_per_token = cfg_.chars_per_token;

  json runs = json::array();
  std::size_t total = 0;
  std::size_t total_hits = 0;
  std::vector<std::string> dead;
  for (const auto& model_id : selected) {
    const auto it = configured.find(model_id);
    llm::ModelConfig mc;
    if (it != configured.end()) mc = it->second;
    mc.model_id = model_id;

    std::unique_ptr<llm::Backend> backend;
    if (script) {
      backend = std::make_unique<llm::ReplayBackend>(
          script, model_id, it != configured.end() ? mc.max_concurrent : 16);
    } else {
      backend = std::make_unique<llm::HttpChatBackend>(mc);
    }
    log::info("classifying " + std::to_string(docs.size()) + " documents for goal " +
              std::to_string(goal) + " with " + model_id);
    evaluation::EvaluationAgent agent(reg, *spec, *backend, mc.context_window_tokens, cache.get(),
                                      options);
    const auto run = agent.judge_corpus(docs, cfg_.workers);
    const auto counts = run.counts();
    const auto dir = run_dir(cfg_.out_dir, goal, model_id);
    store::write_run(run, dir,
                     {{"corpus", corpus_path.string()},
                      {"corpus_sha256", file_digest(corpus_path)},
                      {"registry_sha256", file_digest(cfg_.registry_path)},
                      {"prompt_spec", spec_path.string()},
                      {"prompt_spec_sha256", file_digest(spec_path)},
                      {"backend_calls", backend->calls()},
                      {"replay", script != nullptr}});

    const std::size_t n = run.records.size();
    total += n;
    total_hits += counts.from_cache;
    const double hit_pct = percent(counts.from_cache, n);
    log::info(model_id + ": " + std::to_string(counts.relevant) + " relevant, " +
              std::to_string(counts.nonrelevant) + " non-relevant, " +
              std::to_string(counts.parse_failures) + " parse failures, " +
              std::to_string(counts.backend_failures) + " backend failures");
    if (n > 0 && counts.backend_failures == n) dead.push_back(model_id);
    runs.push_back({{"model_id", model_id},
                    {"run_id", run.run_id},
                    {"dir", dir.string()},
                    {"records", n},
                    {"relevant", counts.relevant},
                    {"nonrelevant", counts.nonrelevant},
                    {"parse_failures", counts.parse_failures},
                    {"backend_failures", counts.backend_failures},
                    {"skipped", run.skipped},
                    {"cache_hits", counts.from_cache},
                    {"cache_hit_pct", hit_pct},
                    {"backend_calls", backend->calls()}});
  }
  if (!dead.empty()) {
    std::string names;
    for (const auto& d : dead) names += (names.empty() ? "" : ", ") + d;
    throw Error(ErrorCode::kBackendUnavailable,
                "no successful completion from: " + names + " (partial results written)");
  }
  return {{"goal_number", goal},
          {"corpus", corpus_path.string()},
          {"prompt_digest", prompting::prompt_digest(*spec, reg)},
          {"cache", cache ? json(cache->path().string()) : json(nullptr)},
          {"records", total},
          {"cache_hits", total_hits},
          {"cache_hit_pct", percent(total_hits, total)},
          {"runs", std::move(runs)}};
}

std::vector<fs::path> Pipeline::default_runs(int goal) const {
  std::vector<std::string> ids = cfg_.ensemble.members;
  if (ids.empty()) {
    for (const auto& m : cfg_.models) ids.push_back(m.model_id);
  }
  std::vector<fs::path> out;
  for (const auto& id : ids) out.push_back(run_dir(cfg_.out_dir, goal, id));
  if (!out.empty()) return out;
  const auto goal_dir = cfg_.out_dir / ("goal" + std::to_string(goal));
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(goal_dir, ec)) {
    if (fs::is_regular_file(entry.path() / "verdicts.jsonl")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<RunResult> load_runs(const std::vector<fs::path>& dirs, int goal) {
  std::vector<RunResult> runs;
  for (const auto& d : dirs) {
    auto run = store::read_run(d);
    if (run.goal_number != goal) {
      throw Error(ErrorCode::kValidation, d.string() + " holds goal " +
                                              std::to_string(run.goal_number) + ", not " +
                                              std::to_string(goal));
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace

json Pipeline::ensemble(int goal, std::optional<ensemble::Rule> rule_arg,
                        const std::vector<fs::path>& runs_arg, const std::optional<fs::path>& out) {
  check_goal(goal);
  const auto rule = rule_arg.value_or(cfg_.ensemble.rule);
  const auto dirs = runs_arg.empty() ? default_runs(goal) : runs_arg;
  if (dirs.empty()) throw Error(ErrorCode::kArity, "no member runs given");
  const auto runs = load_runs(dirs, goal);

  const auto panel = ensemble::combine_runs(runs, rule);
  const fs::path target = out.value_or(cfg_.out_dir / ("goal" + std::to_string(goal)) /
                                       ("panel_" + std::string(ensemble::rule_name(rule)) + ".jsonl"));
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  {
    std::ofstream f(target, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + target.string());
    for (const auto& p : panel) f << ensemble::panel_result_to_json(p).dump() << '\n';
    if (!f.flush()) throw Error(ErrorCode::kIo, "write failed for " + target.string());
  }

  const auto s = ensemble::summarize(panel);
  json stages = json::array();
  for (const auto& [model, count] : s.stage_invocations) {
    stages.push_back({{"model_id", model}, {"invocations", count}});
  }
  json members = json::array();
  for (const auto& r : runs) members.push_back(r.model_id);
  return {{"goal_number", goal},
          {"rule", ensemble::rule_name(rule)},
          {"members", std::move(members)},
          {"documents", s.documents},
          {"relevant", s.relevant},
          {"nonrelevant", s.nonrelevant},
          {"undecided", s.undecided},
          {"ties", s.ties},
          {"combined_relevant_pct", percent(s.relevant, s.relevant + s.nonrelevant)},
          {"stage_invocations", std::move(stages)},
          {"output", target.string()}};
}

json Pipeline::report(int goal, const std::vector<fs::path>& runs_arg,
                      const std::optional<fs::path>& out_dir) {
  check_goal(goal);
  const auto dirs = runs_arg.empty() ? default_runs(goal) : runs_arg;
  if (dirs.size() != 3) {
    throw Error(ErrorCode::kArity, "report needs exactly 3 runs, got " + std::to_string(dirs.size()));
  }
  const auto runs = load_runs(dirs, goal);
  const auto rep = analytics::build_report(runs, goal);
  const fs::path target = out_dir.value_or(cfg_.out_dir / ("goal" + std::to_string(goal)) / "report");
  const auto files = analytics::emit_report(rep, target);
  json written = json::array();
  for (const auto& f : files) written.push_back(f.string());
  json summary = analytics::report_to_json(rep);
  summary["files"] = std::move(written);
  summary["table"] = analytics::proportions_table(rep);
  return summary;
}

json Pipeline::cache_stats(const std::optional<fs::path>& cache_arg) const {
  const fs::path p = cache_arg.value_or(cache_path());
  const auto s = store::inspect_cache(p);
  return {{"path", p.string()},
          {"entries", s.entries},
          {"journal_lines", s.journal_lines},
          {"corrupted_lines", s.corrupted_lines}};
}

}  // namespace sdgjudge::pipeline
