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
#ifndef SDGJUDGE_SDGJUDGE_H_
#define SDGJUDGE_SDGJUDGE_H_

#include <stddef.h>

#if defined(_WIN32)
#if defined(SDGJ_BUILDING_LIBRARY)
#define SDGJ_API __declspec(dllexport)
#else
#define SDGJ_API __declspec(dllimport)
#endif
#else
#define SDGJ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning sdgj_status sets a thread-local
 * message readable with sdgj_last_error_message() on failure. */
typedef enum sdgj_status {
  SDGJ_OK = 0,
  SDGJ_E_INVALID_ARGUMENT = 1,
  SDGJ_E_IO = 2,
  SDGJ_E_PARSE = 3,
  SDGJ_E_CONFIG = 4,
  SDGJ_E_NOT_FOUND = 5,
  SDGJ_E_CREDENTIAL = 6,
  SDGJ_E_BACKEND_UNAVAILABLE = 7,
  SDGJ_E_MALFORMED_RESPONSE = 8,
  SDGJ_E_SCRIPT_MISS = 9,
  SDGJ_E_UNDEFINED_COMPARISON = 10,
  SDGJ_E_EMPTY_RUN = 11,
  SDGJ_E_ARITY = 12,
  SDGJ_E_VALIDATION = 13,
  SDGJ_E_HTTP = 14,
  SDGJ_E_INTERNAL = 99
} sdgj_status;

typedef enum sdgj_label { SDGJ_NON_RELEVANT = 0, SDGJ_RELEVANT = 1 } sdgj_label;

typedef enum sdgj_log_level {
  SDGJ_LOG_DEBUG = 0,
  SDGJ_LOG_INFO = 1,
  SDGJ_LOG_WARNING = 2,
  SDGJ_LOG_ERROR = 3
} sdgj_log_level;

typedef struct sdgj_pipeline sdgj_pipeline;

typedef void (*sdgj_log_fn)(sdgj_log_level level, const char* message, void* user);

SDGJ_API const char* sdgj_version(void);
SDGJ_API const char* sdgj_status_string(sdgj_status status);
/* Message of the last failure on this thread; "" if none. */
SDGJ_API const char* sdgj_last_error_message(void);

/* Strings returned through char** are owned by the caller. */
SDGJ_API void sdgj_string_free(char* s);

/* NULL restores the default sink (standard error). */
SDGJ_API void sdgj_set_log_callback(sdgj_log_fn fn, void* user);
SDGJ_API void sdgj_set_log_level(sdgj_log_level level);

/* --- Pure helpers ------------------------------------------------------ */

SDGJ_API sdgj_status sdgj_strip_copyright(const char* text, char** out);

/* SDGJ_OK with label and reasoning, or SDGJ_E_PARSE with the failure reason
 * in sdgj_last_error_message(). reasoning may be NULL. */
SDGJ_API sdgj_status sdgj_parse_verdict(const char* text, sdgj_label* label, char** reasoning);

SDGJ_API sdgj_status sdgj_majority_vote(const sdgj_label* labels, size_t n, sdgj_label* out,
                                        int* tie);

/* *degenerate is set to 1 (and *kappa to 0) when chance agreement is 1. */
SDGJ_API sdgj_status sdgj_cohen_kappa(const sdgj_label* a, const sdgj_label* b, size_t n,
                                      double* kappa, int* degenerate);

/* --- Pipeline ---------------------------------------------------------- */

/* config_path may be NULL for built-in defaults; data_dir (may be NULL)
 * locates the shipped registry and prompt spec. */
SDGJ_API sdgj_status sdgj_pipeline_create(const char* config_path, const char* data_dir,
                                          sdgj_pipeline** out);
SDGJ_API void sdgj_pipeline_destroy(sdgj_pipeline* p);

/* Keys: "out_dir", "replay", "cache", "no_cache" ("1"/"0"), "registry",
 * "prompt", "workers", "corpus". */
SDGJ_API sdgj_status sdgj_pipeline_set(sdgj_pipeline* p, const char* key, const char* value);

/* Each command writes a JSON summary to *summary_json (may be NULL).
 * format and out may be NULL for the configured defaults. */
SDGJ_API sdgj_status sdgj_ingest(sdgj_pipeline* p, const char* const* inputs, size_t n_inputs,
                                 const char* format, const char* out, char** summary_json);

/* models: comma-separated ids or "all"; NULL means all. */
SDGJ_API sdgj_status sdgj_classify(sdgj_pipeline* p, int goal, const char* corpus,
                                   const char* models, char** summary_json);

/* rule may be NULL (configured rule); runs may be empty (configured
 * members). */
SDGJ_API sdgj_status sdgj_ensemble(sdgj_pipeline* p, int goal, const char* rule,
                                   const char* const* runs, size_t n_runs, const char* out,
                                   char** summary_json);

SDGJ_API sdgj_status sdgj_report(sdgj_pipeline* p, int goal, const char* const* runs,
                                 size_t n_runs, const char* out_dir, char** summary_json);

SDGJ_API sdgj_status sdgj_cache_stats(sdgj_pipeline* p, const char* cache_path,
                                      char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* SDGJUDGE_SDGJUDGE_H_ */
