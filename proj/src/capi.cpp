// Copyright 2026 The chainprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "chainprobe/chainprobe.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainprobe/error.hpp"
#include "chainprobe/judging.hpp"
#include "chainprobe/orchestrator.hpp"
#include "chainprobe/pipeline.hpp"
#include "chainprobe/prompting.hpp"
#include "chainprobe/surrogate.hpp"

using nlohmann::json;

struct cp_pipeline {
  chainprobe::TransformPipeline pipeline;
};

struct cp_runner {
  chainprobe::RunConfig config;
  std::vector<std::string> warnings;
  cp_log_fn log = nullptr;
  void* log_user = nullptr;
  std::uint64_t abort_after = 0;
};

namespace {

thread_local std::string g_last_error;

cp_status status_for(chainprobe::ErrorCode code) {
  using chainprobe::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return CP_ERR_INVALID_ARGUMENT;
    case ErrorCode::kParse: return CP_ERR_PARSE;
    case ErrorCode::kIo: return CP_ERR_IO;
    case ErrorCode::kBackend: return CP_ERR_BACKEND;
    case ErrorCode::kUndefined: return CP_ERR_UNDEFINED;
    case ErrorCode::kNotFound: return CP_ERR_NOT_FOUND;
  }
  return CP_ERR_INTERNAL;
}

template <typename F>
cp_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return CP_OK;
  } catch (const chainprobe::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return CP_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CP_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw chainprobe::invalid_argument(std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw chainprobe::parse_error("expected true or false, got '" + v + "'");
}

std::string report_json(const chainprobe::RunReport& rep) {
  json j = rep.to_json();
  j["csv"] = rep.csv;
  j["markdown"] = rep.markdown;
  return j.dump();
}

chainprobe::RunHooks hooks_for(cp_runner* r) {
  chainprobe::RunHooks h;
  if (r->log != nullptr) {
    cp_log_fn fn = r->log;
    void* user = r->log_user;
    h.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
  }
  if (r->abort_after > 0) {
    const std::uint64_t limit = r->abort_after;
    h.after_write = [limit](std::size_t n) {
      if (n >= limit) std::_Exit(75);
    };
  }
  return h;
}

template <typename F>
cp_status with_runner(cp_runner* r, F&& f) {
  return guarded([&] {
    require(r, "runner");
    chainprobe::Runner runner(r->config, hooks_for(r));
    r->warnings.clear();
    try {
      f(runner);
    } catch (...) {
      r->warnings = runner.warnings();
      throw;
    }
    r->warnings = runner.warnings();
  });
}

}  // namespace

extern "C" {

const char* cp_version(void) { return "0.1.0"; }

const char* cp_status_name(cp_status status) {
  switch (status) {
    case CP_OK: return "ok";
    case CP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case CP_ERR_PARSE: return "parse";
    case CP_ERR_IO: return "io";
    case CP_ERR_BACKEND: return "backend";
    case CP_ERR_UNDEFINED: return "undefined";
    case CP_ERR_NOT_FOUND: return "not_found";
    case CP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cp_last_error(void) { return g_last_error.c_str(); }

void cp_string_free(char* s) { std::free(s); }

cp_status cp_pipeline_create(const char* dsl, uint64_t seed, cp_pipeline** out) {
  return guarded([&] {
    require(dsl, "dsl");
    require(out, "out");
    *out = new cp_pipeline{chainprobe::TransformPipeline::parse(dsl, seed)};
  });
}

cp_status cp_pipeline_apply(const cp_pipeline* p, const char* record_id, const char* chain,
                            const char* gold, char** out) {
  return guarded([&] {
    require(p, "pipeline");
    require(record_id, "record_id");
    require(chain, "chain");
    require(out, "out");
    *out = dup_string(p->pipeline.apply(record_id, chain, gold ? gold : ""));
  });
}

cp_status cp_pipeline_describe(const cp_pipeline* p, char** out) {
  return guarded([&] {
    require(p, "pipeline");
    require(out, "out");
    const std::string dsl = p->pipeline.to_dsl();
    *out = dup_string(dsl.empty() ? "none" : dsl);
  });
}

void cp_pipeline_destroy(cp_pipeline* p) { delete p; }

cp_status cp_runner_create(const char* config_json, const char* base_dir, cp_runner** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    json j;
    try {
      j = json::parse(config_json);
    } catch (const json::parse_error& e) {
      throw chainprobe::parse_error(std::string("config: ") + e.what());
    }
    auto r = std::make_unique<cp_runner>();
    r->config = chainprobe::RunConfig::from_json(j, base_dir ? base_dir : "");
    *out = r.release();
  });
}

cp_status cp_runner_create_from_file(const char* path, cp_runner** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto r = std::make_unique<cp_runner>();
    r->config = chainprobe::RunConfig::load(path);
    *out = r.release();
  });
}

cp_status cp_runner_set(cp_runner* r, const char* key, const char* value) {
  return guarded([&] {
    require(r, "runner");
    require(key, "key");
    require(value, "value");
    const std::string k = key;
    const std::string v = value;
    chainprobe::RunConfig& c = r->config;
    if (k == "dataset") {
      c.dataset = v;
    } else if (k == "pipeline") {
      chainprobe::parse_pipeline_steps(v);
      c.pipeline = v;
      // An explicit pipeline replaces any grid pipelines of the config.
      c.grid.pipelines = {v};
      c.grid.factors.clear();
    } else if (k == "mode") {
      c.mode = chainprobe::parse_eval_mode(v);
    } else if (k == "backend") {
      chainprobe::BackendSpec::parse(v);
      c.backend = v;
    } else if (k == "seed") {
      std::size_t used = 0;
      const unsigned long long s = std::stoull(v, &used, 0);
      if (used != v.size()) throw chainprobe::parse_error("bad seed '" + v + "'");
      c.seed = s;
    } else if (k == "parallel") {
      std::size_t used = 0;
      const unsigned long n = std::stoul(v, &used);
      if (used != v.size() || n == 0) throw chainprobe::parse_error("bad parallel '" + v + "'");
      c.parallel = n;
    } else if (k == "out") {
      c.out = v;
    } else if (k == "resume") {
      c.resume = parse_bool(v);
    } else if (k == "include_question") {
      c.include_question = parse_bool(v);
    } else if (k == "include_chain") {
      c.include_chain = parse_bool(v);
    } else if (k == "layout") {
      c.layout = chainprobe::parse_report_layout(v);
    } else if (k == "record_to") {
      c.record_to = v;
    } else {
      throw chainprobe::invalid_argument("unknown setting '" + k + "'");
    }
  });
}

cp_status cp_runner_set_log(cp_runner* r, cp_log_fn fn, void* user) {
  return guarded([&] {
    require(r, "runner");
    r->log = fn;
    r->log_user = user;
  });
}

cp_status cp_runner_set_abort_after(cp_runner* r, uint64_t n) {
  return guarded([&] {
    require(r, "runner");
    r->abort_after = n;
  });
}

cp_status cp_runner_run(cp_runner* r, char** report) {
  return with_runner(r, [&](chainprobe::Runner& runner) { put(report, report_json(runner.run())); });
}

cp_status cp_runner_sweep(cp_runner* r, char** report) {
  return with_runner(r, [&](chainprobe::Runner& runner) { put(report, report_json(runner.sweep())); });
}

cp_status cp_runner_collect(cp_runner* r, uint64_t* n_records) {
  return with_runner(r, [&](chainprobe::Runner& runner) {
    const auto records = runner.collect();
    if (n_records != nullptr) *n_records = records.size();
  });
}

cp_status cp_runner_transform(cp_runner* r, int sweep, char** jsonl) {
  return with_runner(r, [&](chainprobe::Runner& runner) {
    require(jsonl, "jsonl");
    std::string out;
    for (const auto& t : runner.transform(sweep != 0)) {
      out += json{{"condition_id", t.condition_id}, {"record_id", t.record_id}, {"chain", t.chain}}
                 .dump() +
             "\n";
    }
    *jsonl = dup_string(out);
  });
}

cp_status cp_runner_warnings(const cp_runner* r, char** out) {
  return guarded([&] {
    require(r, "runner");
    require(out, "out");
    *out = dup_string(json(r->warnings).dump());
  });
}

cp_status cp_runner_config(const cp_runner* r, char** out) {
  return guarded([&] {
    require(r, "runner");
    require(out, "out");
    *out = dup_string(r->config.to_json().dump(2));
  });
}

void cp_runner_destroy(cp_runner* r) { delete r; }

cp_status cp_report_from_dir(const char* out_dir, char** report) {
  return guarded([&] {
    require(out_dir, "out_dir");
    put(report, report_json(chainprobe::report_from_dir(out_dir)));
  });
}

cp_status cp_build_prompt(const char* record_json, const char* chain, const char* mode,
                          int include_question, char** out) {
  return guarded([&] {
    require(record_json, "record_json");
    require(mode, "mode");
    require(out, "out");
    const auto record = chainprobe::record_from_json(json::parse(record_json));
    std::optional<std::string> c;
    if (chain != nullptr) c = chain;
    const auto prompt = chainprobe::build_prompt(record, c, chainprobe::parse_eval_mode(mode),
                                                 include_question != 0, chain != nullptr);
    *out = dup_string(prompt.render());
  });
}

cp_status cp_judge(const char* benchmark, const char* response, const char* gold,
                   int follows_prefix, char** verdict_json) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(response, "response");
    require(gold, "gold");
    require(verdict_json, "verdict_json");
    chainprobe::ReasoningRecord rec;
    rec.id = "item";
    rec.benchmark = chainprobe::parse_benchmark(benchmark);
    rec.gold_answer = gold;
    chainprobe::JudgeContext ctx;
    ctx.follows_prefix = follows_prefix != 0;
    *verdict_json = dup_string(chainprobe::to_json(chainprobe::judge_local(rec, response, ctx)).dump());
  });
}

cp_status cp_extract(const char* strategy, const char* chain, int64_t* value, int* found) {
  return guarded([&] {
    require(strategy, "strategy");
    require(chain, "chain");
    require(value, "value");
    require(found, "found");
    const auto v = chainprobe::extract(chain, chainprobe::ExtractorStrategy::parse(strategy));
    *found = v.has_value() ? 1 : 0;
    *value = v.value_or(0);
  });
}

}  // extern "C"
