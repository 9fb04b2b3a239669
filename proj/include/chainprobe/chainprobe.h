/* Copyright 2026 The chainprobe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to chainprobe.
 *
 * Every function returns a cp_status. On failure a message is available
 * from cp_last_error() on the calling thread until the next call. Strings
 * returned through char** are heap-allocated and released with
 * cp_string_free(). Handles are not thread-safe; use one per thread. */

#ifndef CHAINPROBE_CHAINPROBE_H_
#define CHAINPROBE_CHAINPROBE_H_

#include <stdint.h>

#if defined(_WIN32)
#if defined(CHAINPROBE_BUILDING)
#define CP_API __declspec(dllexport)
#else
#define CP_API __declspec(dllimport)
#endif
#else
#define CP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cp_status {
  CP_OK = 0,
  CP_ERR_INVALID_ARGUMENT = 1,
  CP_ERR_PARSE = 2,
  CP_ERR_IO = 3,
  CP_ERR_BACKEND = 4,
  CP_ERR_UNDEFINED = 5, /* e.g. accuracy with no successful responses */
  CP_ERR_NOT_FOUND = 6,
  CP_ERR_INTERNAL = 7
} cp_status;

CP_API const char* cp_version(void);
CP_API const char* cp_status_name(cp_status status);
/* Message for the last failed call on this thread; "" if none. */
CP_API const char* cp_last_error(void);
CP_API void cp_string_free(char* s);

/* ---- Transformation pipelines ---- */

typedef struct cp_pipeline cp_pipeline;

/* dsl: comma-separated steps, e.g. "remove_alphabet,line_shuffle". */
CP_API cp_status cp_pipeline_create(const char* dsl, uint64_t seed,
                                    cp_pipeline** out);
/* gold may be NULL when no step needs the answer. */
CP_API cp_status cp_pipeline_apply(const cp_pipeline* p, const char* record_id,
                                   const char* chain, const char* gold,
                                   char** out);
/* Canonical DSL. */
CP_API cp_status cp_pipeline_describe(const cp_pipeline* p, char** out);
CP_API void cp_pipeline_destroy(cp_pipeline* p);

/* ---- Runs ---- */

typedef struct cp_runner cp_runner;
typedef void (*cp_log_fn)(const char* line, void* user);

/* config_json: run configuration; relative paths resolve against base_dir
 * (may be NULL for the working directory). */
CP_API cp_status cp_runner_create(const char* config_json, const char* base_dir,
                                  cp_runner** out);
CP_API cp_status cp_runner_create_from_file(const char* path, cp_runner** out);
/* Overrides one setting. Keys: dataset, pipeline, mode, backend, seed,
 * parallel, out, resume, include_question, include_chain, layout,
 * record_to. Booleans are "true"/"false". */
CP_API cp_status cp_runner_set(cp_runner* r, const char* key, const char* value);
CP_API cp_status cp_runner_set_log(cp_runner* r, cp_log_fn fn, void* user);
/* Test hook: terminate the process without cleanup once n verdicts have
 * been written. 0 disables. */
CP_API cp_status cp_runner_set_abort_after(cp_runner* r, uint64_t n);

/* report_json receives the report (conditions, csv, markdown); may be NULL. */
CP_API cp_status cp_runner_run(cp_runner* r, char** report_json);
CP_API cp_status cp_runner_sweep(cp_runner* r, char** report_json);
CP_API cp_status cp_runner_collect(cp_runner* r, uint64_t* n_records);
/* JSONL of {condition_id, record_id, chain}. */
CP_API cp_status cp_runner_transform(cp_runner* r, int sweep, char** jsonl);
/* JSON array of warnings from the last operation. */
CP_API cp_status cp_runner_warnings(const cp_runner* r, char** json);
/* Effective configuration as JSON. */
CP_API cp_status cp_runner_config(const cp_runner* r, char** json);
CP_API void cp_runner_destroy(cp_runner* r);

/* Regenerates the reports in out_dir; report_json as for cp_runner_run. */
CP_API cp_status cp_report_from_dir(const char* out_dir, char** report_json);

/* ---- Single-item helpers ---- */

/* record_json: one dataset record. chain may be NULL to omit the chain.
 * mode: "gen" or "ret". */
CP_API cp_status cp_build_prompt(const char* record_json, const char* chain,
                                 const char* mode, int include_question,
                                 char** out);
/* benchmark: "math_integer", "multiple_choice" or "code". follows_prefix is
 * nonzero for Ret-mode continuations. verdict_json receives
 * {correct, extracted, method, note}. */
CP_API cp_status cp_judge(const char* benchmark, const char* response,
                          const char* gold, int follows_prefix,
                          char** verdict_json);
/* strategy: surrogate strategy id. *found is 0 when nothing was extracted. */
CP_API cp_status cp_extract(const char* strategy, const char* chain,
                            int64_t* value, int* found);

#ifdef __cplusplus
}
#endif

#endif /* CHAINPROBE_CHAINPROBE_H_ */
