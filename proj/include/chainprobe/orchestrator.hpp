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

// Run engine: reads a dataset, transforms chains per grid cell, queries a
// backend, judges, journals verdicts and aggregates them into reports.
//
// Output directory layout:
//   cells.json      the planned cells, written before any work
//   verdicts.jsonl  one line per (cell, record); a journal while running,
//                   rewritten sorted by (cell, record id) at the end
//   responses.jsonl archive of live responses
//   report.csv, report.md, report.json

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainprobe/judging.hpp"
#include "chainprobe/modelio.hpp"
#include "chainprobe/prompting.hpp"
#include "chainprobe/records.hpp"
#include "chainprobe/stats.hpp"

namespace chainprobe {

// "surrogate:<strategy>", "replay:<archive.jsonl>" or "live:<url>".
struct BackendSpec {
  enum class Kind { kSurrogate, kReplay, kLive };
  Kind kind = Kind::kSurrogate;
  std::string arg;

  static BackendSpec parse(std::string_view spec);
  std::string str() const;
};

struct JudgeConfig {
  bool external = false;
  ExtractionRule rule = ExtractionRule::kFirstAfterPrefix;
  std::optional<std::string> backend;  // BackendSpec for the external judge
  std::optional<std::string> prompt_template;  // file path
  InferenceParams params;
};

struct GridConfig {
  enum class NoisePosition { kFirst, kLast };

  // Cartesian product; within a cell the factors apply in listed order.
  std::vector<std::vector<std::string>> factors;
  // Used when `factors` is empty.
  std::vector<std::string> pipelines;
  std::vector<std::uint32_t> noise{0};
  NoisePosition noise_position = NoisePosition::kLast;
  std::optional<std::string> baseline;  // condition id; first cell otherwise
};

struct CollectConfig {
  std::string questions;  // JSONL: id, benchmark, question, gold_answer
  std::uint32_t samples = 10;
  std::string output;  // defaults to <out>/records.jsonl
};

struct RunConfig {
  std::string dataset;
  std::string pipeline = "none";
  EvalMode mode = EvalMode::kRet;
  bool include_question = true;
  bool include_chain = true;
  std::string backend = "surrogate:after_anchor";
  // Also archive every response of the evaluated backend here.
  std::optional<std::string> record_to;
  InferenceParams inference;
  JudgeConfig judge;
  RefusalPolicy refusals = RefusalPolicy::kCountAsIncorrect;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  std::string out = "out";
  std::optional<std::string> prompt_template;
  std::optional<ReportLayout> layout;
  GridConfig grid;
  CollectConfig collect;
  bool resume = false;

  // Relative paths resolve against `base_dir`. Unknown keys are errors.
  static RunConfig from_json(const nlohmann::json& j,
                             const std::string& base_dir = {});
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

struct Cell {
  std::size_t index = 0;
  std::string condition_id;
  std::string pipeline;  // canonical DSL, "" for none
  std::string row;
  std::string col;
  std::uint64_t seed = 0;
  bool baseline = false;

  bool operator==(const Cell&) const = default;
};

// "<pipeline or none> [<mode> <q+c|q|c|->]", e.g. "line_shuffle [ret q+c]".
std::string condition_id(std::string_view canonical_pipeline, EvalMode mode,
                         bool include_question, bool include_chain);

// Cells for a sweep (grid) or a single run. Duplicate condition ids are
// dropped with a warning; indices are dense after deduplication.
std::vector<Cell> plan_cells(const RunConfig& config, bool sweep,
                             std::vector<std::string>* warnings = nullptr);

// Backends by spec. Live backends record to `archive_path` and are bounded
// to `parallel` in-flight requests.
std::shared_ptr<Backend> make_backend(const std::string& spec,
                                      const std::string& archive_path,
                                      std::size_t parallel,
                                      HttpChatBackend::Logger logger = {});

struct VerdictLine {
  std::size_t cell = 0;
  std::string condition_id;
  std::string record_id;
  ResponseStatus status = ResponseStatus::kOk;
  std::optional<std::string> response;
  std::optional<Verdict> verdict;
  std::string error;

  nlohmann::json to_json() const;
  static VerdictLine from_json(const nlohmann::json& j);
};

struct TransformedChain {
  std::string condition_id;
  std::string record_id;
  std::string chain;
};

struct RunHooks {
  // Called after each verdict line is flushed, with the count written by
  // this process.
  std::function<void(std::size_t)> after_write;
  std::function<void(const std::string&)> log;
};

class Runner {
 public:
  explicit Runner(RunConfig config, RunHooks hooks = {});

  RunReport run();
  RunReport sweep();
  // Collects `samples` chains per question into collect.output. Refused or
  // failed samples are left out with a warning.
  std::vector<ReasoningRecord> collect();
  // Dry run over the planned cells; no backend calls.
  std::vector<TransformedChain> transform(bool sweep);

  const RunConfig& config() const { return config_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  RunReport execute(std::vector<Cell> cells, ReportLayout default_layout);
  void warn(const std::string& message);

  RunConfig config_;
  RunHooks hooks_;
  std::vector<std::string> warnings_;
};

// Rebuilds report.{csv,md,json} from cells.json and verdicts.jsonl in
// `out_dir`, rewriting verdicts.jsonl in sorted order.
RunReport report_from_dir(const std::string& out_dir);

}  // namespace chainprobe
