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
#include "sdgjudge/sdgjudge.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "sdgjudge/analytics.hpp"
#include "sdgjudge/corpus.hpp"
#include "sdgjudge/ensemble.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/evaluation.hpp"
#include "sdgjudge/log.hpp"
#include "sdgjudge/pipeline.hpp"

struct sdgj_pipeline {
  sdgjudge::pipeline::Pipeline impl;
};

namespace {

using sdgjudge::Error;
using sdgjudge::ErrorCode;

thread_local std::string g_last_error;

sdgj_status fail(sdgj_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
sdgj_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return SDGJ_OK;
  } catch (const Error& e) {
    return fail(static_cast<sdgj_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SDGJ_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SDGJ_E_INTERNAL, e.what());
  } catch (...) {
    return fail(SDGJ_E_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

void emit(char** out, const nlohmann::json& j) {
  if (out != nullptr) *out = dup(j.dump());
}

std::vector<std::filesystem::path> paths(const char* const* items, std::size_t n) {
  if (n > 0) require(items, "path list");
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < n; ++i) {
    require(items[i], "path");
    out.emplace_back(items[i]);
  }
  return out;
}

std::optional<std::filesystem::path> opt_path(const char* s) {
  if (s == nullptr || *s == '\0') return std::nullopt;
  return std::filesystem::path(s);
}

sdgjudge::Label to_label(sdgj_label l) {
  if (l != SDGJ_RELEVANT && l != SDGJ_NON_RELEVANT) {
    throw Error(ErrorCode::kInvalidArgument, "label must be 0 or 1");
  }
  return l == SDGJ_RELEVANT ? sdgjudge::Label::kRelevant : sdgjudge::Label::kNonRelevant;
}

std::vector<sdgjudge::Label> to_labels(const sdgj_label* labels, std::size_t n) {
  if (n > 0) require(labels, "labels");
  std::vector<sdgjudge::Label> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(to_label(labels[i]));
  return out;
}

}  // namespace

extern "C" {

const char* sdgj_version(void) { return "0.1.0"; }

const char* sdgj_status_string(sdgj_status status) {
  if (status == SDGJ_OK) return "ok";
  static thread_local std::string name;
  name = std::string(sdgjudge::error_code_name(static_cast<ErrorCode>(status)));
  return name.c_str();
}

const char* sdgj_last_error_message(void) { return g_last_error.c_str(); }

void sdgj_string_free(char* s) { std::free(s); }

void sdgj_set_log_callback(sdgj_log_fn fn, void* user) {
  if (fn == nullptr) {
    sdgjudge::log::set_sink({});
    return;
  }
  sdgjudge::log::set_sink([fn, user](sdgjudge::log::Level level, std::string_view msg) {
    const std::string copy(msg);
    fn(static_cast<sdgj_log_level>(level), copy.c_str(), user);
  });
}

void sdgj_set_log_level(sdgj_log_level level) {
  sdgjudge::log::set_min_level(static_cast<sdgjudge::log::Level>(level));
}

sdgj_status sdgj_strip_copyright(const char* text, char** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = dup(sdgjudge::corpus::strip_copyright(text));
  });
}

sdgj_status sdgj_parse_verdict(const char* text, sdgj_label* label, char** reasoning) {
  sdgj_status status = SDGJ_OK;
  const auto rc = guarded([&] {
    require(text, "text");
    require(label, "label");
    const auto parsed = sdgjudge::evaluation::parse_verdict(text);
    if (const auto* v = std::get_if<sdgjudge::Verdict>(&parsed)) {
      *label = v->label == sdgjudge::Label::kRelevant ? SDGJ_RELEVANT : SDGJ_NON_RELEVANT;
      if (reasoning != nullptr) *reasoning = dup(v->reasoning);
    } else {
      status = SDGJ_E_PARSE;
      g_last_error = std::get<sdgjudge::ParseFailure>(parsed).reason;
    }
  });
  return rc != SDGJ_OK ? rc : status;
}

sdgj_status sdgj_majority_vote(const sdgj_label* labels, size_t n, sdgj_label* out, int* tie) {
  return guarded([&] {
    require(out, "out");
    const auto v = sdgjudge::ensemble::majority_vote(to_labels(labels, n));
    *out = v.label == sdgjudge::Label::kRelevant ? SDGJ_RELEVANT : SDGJ_NON_RELEVANT;
    if (tie != nullptr) *tie = v.tie ? 1 : 0;
  });
}

sdgj_status sdgj_cohen_kappa(const sdgj_label* a, const sdgj_label* b, size_t n, double* kappa,
                             int* degenerate) {
  return guarded([&] {
    require(kappa, "kappa");
    const auto la = to_labels(a, n);
    const auto lb = to_labels(b, n);
    const auto k = sdgjudge::analytics::cohen_kappa(std::span<const sdgjudge::Label>(la),
                                                    std::span<const sdgjudge::Label>(lb));
    *kappa = k.value_or(0.0);
    if (degenerate != nullptr) *degenerate = k ? 0 : 1;
  });
}

sdgj_status sdgj_pipeline_create(const char* config_path, const char* data_dir,
                                 sdgj_pipeline** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const std::filesystem::path data = data_dir != nullptr ? data_dir : "data";
    auto cfg = config_path != nullptr ? sdgjudge::config::load_config(config_path, data)
                                      : sdgjudge::config::default_config(data);
    *out = new sdgj_pipeline{sdgjudge::pipeline::Pipeline(std::move(cfg))};
  });
}

void sdgj_pipeline_destroy(sdgj_pipeline* p) { delete p; }

sdgj_status sdgj_pipeline_set(sdgj_pipeline* p, const char* key, const char* value) {
  return guarded([&] {
    require(p, "pipeline");
    require(key, "key");
    require(value, "value");
    auto& cfg = p->impl.config();
    const std::string k = key;
    const std::filesystem::path v = value;
    if (k == "out_dir") {
      cfg.out_dir = v;
    } else if (k == "replay") {
      p->impl.set_replay(opt_path(value));
    } else if (k == "cache") {
      cfg.cache_path = opt_path(value);
    } else if (k == "no_cache") {
      p->impl.set_cache_enabled(std::strcmp(value, "1") != 0);
    } else if (k == "registry") {
      cfg.registry_path = v;
    } else if (k == "prompt") {
      cfg.prompt_specs = {v};
    } else if (k == "corpus") {
      cfg.corpus_path = v;
    } else if (k == "workers") {
      char* end = nullptr;
      const long n = std::strtol(value, &end, 10);
      if (end == value || *end != '\0' || n < 1 || n > 1024) {
        throw Error(ErrorCode::kConfig, "workers must be an integer in 1..1024");
      }
      cfg.workers = static_cast<int>(n);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown pipeline setting '" + k + "'");
    }
  });
}

sdgj_status sdgj_ingest(sdgj_pipeline* p, const char* const* inputs, size_t n_inputs,
                        const char* format, const char* out, char** summary_json) {
  return guarded([&] {
    require(p, "pipeline");
    std::optional<sdgjudge::corpus::InputFormat> fmt;
    if (format != nullptr && *format != '\0') {
      try {
        fmt = sdgjudge::corpus::parse_input_format(format);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidArgument, e.what());
      }
    }
    emit(summary_json, p->impl.ingest(paths(inputs, n_inputs), fmt, opt_path(out)));
  });
}

sdgj_status sdgj_classify(sdgj_pipeline* p, int goal, const char* corpus, const char* models,
                          char** summary_json) {
  return guarded([&] {
    require(p, "pipeline");
    std::vector<std::string> ids;
    if (models != nullptr) {
      std::string item;
      for (const char* c = models;; ++c) {
        if (*c == ',' || *c == '\0') {
          if (!item.empty()) ids.push_back(item);
          item.clear();
          if (*c == '\0') break;
        } else if (*c != ' ') {
          item += *c;
        }
      }
    }
    emit(summary_json, p->impl.classify(goal, opt_path(corpus), ids));
  });
}

sdgj_status sdgj_ensemble(sdgj_pipeline* p, int goal, const char* rule, const char* const* runs,
                          size_t n_runs, const char* out, char** summary_json) {
  return guarded([&] {
    require(p, "pipeline");
    std::optional<sdgjudge::ensemble::Rule> r;
    if (rule != nullptr && *rule != '\0') r = sdgjudge::ensemble::parse_rule(rule);
    emit(summary_json, p->impl.ensemble(goal, r, paths(runs, n_runs), opt_path(out)));
  });
}

sdgj_status sdgj_report(sdgj_pipeline* p, int goal, const char* const* runs, size_t n_runs,
                        const char* out_dir, char** summary_json) {
  return guarded([&] {
    require(p, "pipeline");
    emit(summary_json, p->impl.report(goal, paths(runs, n_runs), opt_path(out_dir)));
  });
}

sdgj_status sdgj_cache_stats(sdgj_pipeline* p, const char* cache_path, char** summary_json) {
  return guarded([&] {
    require(p, "pipeline");
    emit(summary_json, p->impl.cache_stats(opt_path(cache_path)));
  });
}

}  // extern "C"
