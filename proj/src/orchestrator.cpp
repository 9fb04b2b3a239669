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

#include "chainprobe/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "chainprobe/answers.hpp"
#include "chainprobe/pipeline.hpp"
#include "chainprobe/rng.hpp"
#include "chainprobe/surrogate.hpp"

namespace chainprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCellsFile = "cells.json";
constexpr const char* kVerdictsFile = "verdicts.jsonl";
constexpr const char* kResponsesFile = "responses.jsonl";

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw io_error("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp + ": " + ec.message());
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!j.is_object()) throw parse_error(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw parse_error(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

InferenceParams params_from_json(const json& j, std::string_view where) {
  check_keys(j, {"model", "temperature", "max_output_tokens", "timeout_ms", "max_retries",
                 "backoff_ms"},
             where);
  InferenceParams p;
  p.model_id = j.value("model", p.model_id);
  p.temperature = j.value("temperature", p.temperature);
  p.max_output_tokens = j.value("max_output_tokens", p.max_output_tokens);
  p.timeout = std::chrono::milliseconds(j.value("timeout_ms", p.timeout.count()));
  p.max_retries = j.value("max_retries", p.max_retries);
  p.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", p.backoff_base.count()));
  if (p.max_output_tokens == 0) throw parse_error(std::string(where) + ": max_output_tokens must be positive");
  if (p.max_retries == 0) throw parse_error(std::string(where) + ": max_retries must be positive");
  return p;
}

json params_json(const InferenceParams& p) {
  return json{{"model", p.model_id},
              {"temperature", p.temperature},
              {"max_output_tokens", p.max_output_tokens},
              {"timeout_ms", p.timeout.count()},
              {"max_retries", p.max_retries},
              {"backoff_ms", p.backoff_base.count()}};
}

std::string resolve_backend(const std::string& base_dir, const std::string& spec) {
  BackendSpec b = BackendSpec::parse(spec);
  if (b.kind == BackendSpec::Kind::kReplay) b.arg = resolve(base_dir, b.arg);
  return b.str();
}

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

// ---- BackendSpec ----------------------------------------------------------

BackendSpec BackendSpec::parse(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw parse_error("backend spec '" + std::string(spec) +
                      "' must be surrogate:<strategy>, replay:<path> or live:<url>");
  }
  const std::string_view kind = spec.substr(0, colon);
  BackendSpec b;
  b.arg = std::string(spec.substr(colon + 1));
  if (kind == "surrogate") {
    b.kind = Kind::kSurrogate;
    ExtractorStrategy::parse(b.arg);
  } else if (kind == "replay") {
    b.kind = Kind::kReplay;
  } else if (kind == "live") {
    b.kind = Kind::kLive;
  } else {
    throw parse_error("unknown backend kind '" + std::string(kind) + "'");
  }
  if (b.arg.empty()) throw parse_error("backend spec '" + std::string(spec) + "' has no argument");
  return b;
}

std::string BackendSpec::str() const {
  switch (kind) {
    case Kind::kSurrogate: return "surrogate:" + arg;
    case Kind::kReplay: return "replay:" + arg;
    case Kind::kLive: return "live:" + arg;
  }
  return {};
}

std::shared_ptr<Backend> make_backend(const std::string& spec,
                                      const std::string& archive_path,
                                      std::size_t parallel,
                                      HttpChatBackend::Logger logger) {
  const BackendSpec b = BackendSpec::parse(spec);
  switch (b.kind) {
    case BackendSpec::Kind::kSurrogate:
      return std::make_shared<SurrogateBackend>(ExtractorStrategy::parse(b.arg));
    case BackendSpec::Kind::kReplay:
      return std::make_shared<ReplayBackend>(std::make_shared<const ResponseArchive>(
          b.arg, ResponseArchive::Mode::kReadOnly));
    case BackendSpec::Kind::kLive: {
      auto http = std::make_shared<HttpChatBackend>(HttpEndpoint{b.arg}, std::move(logger));
      auto bounded = std::make_shared<BoundedBackend>(http, parallel);
      return std::make_shared<RecordingBackend>(bounded,
                                                std::make_shared<ResponseArchive>(archive_path));
    }
  }
  throw invalid_argument("unreachable backend kind");
}

// ---- RunConfig ------------------------------------------------------------

RunConfig RunConfig::from_json(const json& j, const std::string& base_dir) {
  check_keys(j, {"dataset", "pipeline", "mode", "include_question", "include_chain", "backend",
                 "record_to", "inference", "judge", "refusals", "seed", "parallel", "out",
                 "prompt_template", "layout", "grid", "collect"},
             "config");
  RunConfig c;
  try {
    c.dataset = resolve(base_dir, j.value("dataset", std::string()));
    c.pipeline = j.value("pipeline", c.pipeline);
    if (j.contains("mode")) c.mode = parse_eval_mode(j["mode"].get<std::string>());
    c.include_question = j.value("include_question", c.include_question);
    c.include_chain = j.value("include_chain", c.include_chain);
    c.backend = resolve_backend(base_dir, j.value("backend", c.backend));
    if (auto r = opt<std::string>(j, "record_to")) c.record_to = resolve(base_dir, *r);
    if (j.contains("inference")) c.inference = params_from_json(j["inference"], "inference");
    if (j.contains("judge")) {
      const json& jj = j["judge"];
      check_keys(jj, {"kind", "rule", "backend", "template", "inference"}, "judge");
      const std::string kind = jj.value("kind", std::string("local"));
      if (kind != "local" && kind != "external") {
        throw parse_error("judge.kind must be local or external");
      }
      c.judge.external = kind == "external";
      if (jj.contains("rule")) c.judge.rule = parse_extraction_rule(jj["rule"].get<std::string>());
      if (auto b = opt<std::string>(jj, "backend")) c.judge.backend = resolve_backend(base_dir, *b);
      if (auto t = opt<std::string>(jj, "template")) c.judge.prompt_template = resolve(base_dir, *t);
      if (jj.contains("inference")) c.judge.params = params_from_json(jj["inference"], "judge.inference");
      if (c.judge.external && !c.judge.backend) {
        throw parse_error("judge.kind external needs judge.backend");
      }
    }
    if (j.contains("refusals")) c.refusals = parse_refusal_policy(j["refusals"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.parallel = j.value("parallel", c.parallel);
    c.out = resolve(base_dir, j.value("out", c.out));
    if (auto t = opt<std::string>(j, "prompt_template")) c.prompt_template = resolve(base_dir, *t);
    if (auto l = opt<std::string>(j, "layout")) c.layout = parse_report_layout(*l);
    if (j.contains("grid")) {
      const json& g = j["grid"];
      check_keys(g, {"factors", "pipelines", "noise", "noise_position", "baseline"}, "grid");
      c.grid.factors = g.value("factors", c.grid.factors);
      c.grid.pipelines = g.value("pipelines", c.grid.pipelines);
      c.grid.noise = g.value("noise", c.grid.noise);
      const std::string pos = g.value("noise_position", std::string("last"));
      if (pos == "first") {
        c.grid.noise_position = GridConfig::NoisePosition::kFirst;
      } else if (pos == "last") {
        c.grid.noise_position = GridConfig::NoisePosition::kLast;
      } else {
        throw parse_error("grid.noise_position must be first or last");
      }
      c.grid.baseline = opt<std::string>(g, "baseline");
    }
    if (j.contains("collect")) {
      const json& cc = j["collect"];
      check_keys(cc, {"questions", "samples", "output"}, "collect");
      c.collect.questions = resolve(base_dir, cc.value("questions", std::string()));
      c.collect.samples = cc.value("samples", c.collect.samples);
      c.collect.output = resolve(base_dir, cc.value("output", std::string()));
    }
  } catch (const json::exception& e) {
    throw parse_error(std::string("config: ") + e.what());
  }
  if (c.parallel == 0) throw parse_error("config: parallel must be at least 1");
  parse_pipeline_steps(c.pipeline);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string());
}

json RunConfig::to_json() const {
  json j{{"dataset", dataset},
         {"pipeline", pipeline},
         {"mode", chainprobe::to_string(mode)},
         {"include_question", include_question},
         {"include_chain", include_chain},
         {"backend", backend},
         {"record_to", record_to ? json(*record_to) : json(nullptr)},
         {"inference", params_json(inference)},
         {"refusals", chainprobe::to_string(refusals)},
         {"seed", seed},
         {"parallel", parallel},
         {"out", out},
         {"prompt_template", prompt_template ? json(*prompt_template) : json(nullptr)},
         {"layout", layout ? json(chainprobe::to_string(*layout)) : json(nullptr)}};
  j["judge"] = {{"kind", judge.external ? "external" : "local"},
                {"rule", chainprobe::to_string(judge.rule)},
                {"backend", judge.backend ? json(*judge.backend) : json(nullptr)},
                {"template", judge.prompt_template ? json(*judge.prompt_template) : json(nullptr)},
                {"inference", params_json(judge.params)}};
  j["grid"] = {{"factors", grid.factors},
               {"pipelines", grid.pipelines},
               {"noise", grid.noise},
               {"noise_position",
                grid.noise_position == GridConfig::NoisePosition::kFirst ? "first" : "last"},
               {"baseline", grid.baseline ? json(*grid.baseline) : json(nullptr)}};
  j["collect"] = {{"questions", collect.questions},
                  {"samples", collect.samples},
                  {"output", collect.output}};
  return j;
}

// ---- Cell planning --------------------------------------------------------

std::string condition_id(std::string_view canonical_pipeline, EvalMode mode,
                         bool include_question, bool include_chain) {
  std::string flags;
  if (include_question) flags = "q";
  if (include_chain) flags += flags.empty() ? "c" : "+c";
  if (flags.empty()) flags = "-";
  return std::string(canonical_pipeline.empty() ? "none" : canonical_pipeline) + " [" +
         to_string(mode) + " " + flags + "]";
}

namespace {

std::string canonical(std::string_view dsl) {
  return TransformPipeline::parse(dsl, 0).to_dsl();
}

std::string join_dsl(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += ',';
    out += p;
  }
  return out;
}

}  // namespace

std::vector<Cell> plan_cells(const RunConfig& config, bool sweep,
                             std::vector<std::string>* warnings) {
  // (row label, canonical pipeline without noise)
  std::vector<std::string> bases;
  if (!sweep) {
    bases.push_back(canonical(config.pipeline));
  } else if (!config.grid.factors.empty()) {
    std::vector<std::string> acc{""};
    for (const auto& factor : config.grid.factors) {
      if (factor.empty()) throw invalid_argument("grid factor with no levels");
      std::vector<std::string> next;
      for (const std::string& prefix : acc) {
        for (const std::string& level : factor) {
          next.push_back(join_dsl({prefix, canonical(level)}));
        }
      }
      acc = std::move(next);
    }
    bases = std::move(acc);
  } else if (!config.grid.pipelines.empty()) {
    for (const std::string& p : config.grid.pipelines) bases.push_back(canonical(p));
  } else {
    bases.push_back(canonical(config.pipeline));
  }

  std::vector<std::uint32_t> noise = sweep ? config.grid.noise : std::vector<std::uint32_t>{0};
  if (noise.empty()) throw invalid_argument("grid has no noise levels");

  std::vector<Cell> cells;
  std::set<std::string> seen;
  for (const std::string& base : bases) {
    for (std::uint32_t k : noise) {
      std::string dsl = base;
      if (k > 0) {
        const std::string step = "inject_noise(k=" + std::to_string(k) + ")";
        dsl = config.grid.noise_position == GridConfig::NoisePosition::kFirst
                  ? join_dsl({step, base})
                  : join_dsl({base, step});
      }
      Cell c;
      c.pipeline = canonical(dsl);
      c.condition_id = condition_id(c.pipeline, config.mode, config.include_question,
                                    config.include_chain);
      if (!seen.insert(c.condition_id).second) {
        if (warnings) warnings->push_back("duplicate grid cell dropped: " + c.condition_id);
        continue;
      }
      if (sweep) {
        c.row = base.empty() ? "none" : base;
        c.col = "k=" + std::to_string(k);
      } else {
        c.row = c.condition_id;
      }
      c.index = cells.size();
      c.seed = mix_seed({config.seed, static_cast<std::uint64_t>(c.index)});
      cells.push_back(std::move(c));
    }
  }
  if (cells.empty()) throw invalid_argument("no cells to run");

  std::size_t base_index = 0;
  if (sweep && config.grid.baseline) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) {
      return c.condition_id == *config.grid.baseline || c.pipeline == canonical(*config.grid.baseline);
    });
    if (it == cells.end()) {
      throw Error(ErrorCode::kNotFound, "grid baseline '" + *config.grid.baseline + "' is not a cell");
    }
    base_index = it->index;
  }
  cells[base_index].baseline = true;
  return cells;
}

// ---- Verdict journal ------------------------------------------------------

json VerdictLine::to_json() const {
  json j{{"cell", cell},
         {"condition_id", condition_id},
         {"record_id", record_id},
         {"status", chainprobe::to_string(status)},
         {"response", response ? json(*response) : json(nullptr)},
         {"verdict", verdict ? chainprobe::to_json(*verdict) : json(nullptr)}};
  if (!error.empty()) j["error"] = error;
  return j;
}

VerdictLine VerdictLine::from_json(const json& j) {
  VerdictLine v;
  v.cell = j.at("cell").get<std::size_t>();
  v.condition_id = j.at("condition_id").get<std::string>();
  v.record_id = j.at("record_id").get<std::string>();
  v.status = parse_response_status(j.at("status").get<std::string>());
  if (j.contains("response") && j["response"].is_string()) v.response = j["response"].get<std::string>();
  if (j.contains("verdict") && j["verdict"].is_object()) v.verdict = verdict_from_json(j["verdict"]);
  v.error = j.value("error", "");
  return v;
}

namespace {

// Valid lines of a journal; a damaged final line (interrupted write) is
// dropped, damage anywhere else is an error.
std::vector<VerdictLine> load_journal(const std::string& path) {
  std::vector<VerdictLine> lines;
  if (!fs::exists(path)) return lines;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    const bool last = nl == std::string::npos || nl + 1 >= text.size();
    const std::string_view line(text.data() + pos,
                                (nl == std::string::npos ? text.size() : nl) - pos);
    ++line_no;
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (trim(line).empty()) continue;
    try {
      lines.push_back(VerdictLine::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      if (last) break;
      throw parse_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

struct CellsFile {
  std::vector<Cell> cells;
  std::vector<std::string> record_ids;
  ReportLayout layout = ReportLayout::kAblation;
  RefusalPolicy refusals = RefusalPolicy::kCountAsIncorrect;

  json to_json() const {
    json jc = json::array();
    for (const Cell& c : cells) {
      jc.push_back({{"index", c.index},
                    {"condition_id", c.condition_id},
                    {"pipeline", c.pipeline},
                    {"row", c.row},
                    {"col", c.col},
                    {"seed", c.seed},
                    {"baseline", c.baseline}});
    }
    return json{{"layout", chainprobe::to_string(layout)},
                {"refusals", chainprobe::to_string(refusals)},
                {"cells", jc},
                {"records", record_ids}};
  }

  static CellsFile from_json(const json& j) {
    CellsFile f;
    f.layout = parse_report_layout(j.at("layout").get<std::string>());
    f.refusals = parse_refusal_policy(j.at("refusals").get<std::string>());
    for (const json& c : j.at("cells")) {
      Cell cell;
      cell.index = c.at("index").get<std::size_t>();
      cell.condition_id = c.at("condition_id").get<std::string>();
      cell.pipeline = c.at("pipeline").get<std::string>();
      cell.row = c.at("row").get<std::string>();
      cell.col = c.at("col").get<std::string>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      cell.baseline = c.at("baseline").get<bool>();
      f.cells.push_back(std::move(cell));
    }
    f.record_ids = j.at("records").get<std::vector<std::string>>();
    return f;
  }
};

CellsFile load_cells(const std::string& out_dir) {
  const std::string path = (fs::path(out_dir) / kCellsFile).string();
  try {
    return CellsFile::from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

bool retryable(ResponseStatus s) {
  return s == ResponseStatus::kTransportError || s == ResponseStatus::kTimeout;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
// exception stops the remaining work and is rethrown.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, n));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

RunReport report_from_dir(const std::string& out_dir) {
  const CellsFile cf = load_cells(out_dir);
  const std::string vpath = (fs::path(out_dir) / kVerdictsFile).string();
  std::vector<VerdictLine> lines = load_journal(vpath);

  std::map<std::pair<std::size_t, std::string>, VerdictLine> by_key;
  for (VerdictLine& v : lines) {
    if (v.cell >= cf.cells.size() || cf.cells[v.cell].condition_id != v.condition_id) {
      throw parse_error(vpath + ": verdict for unknown cell '" + v.condition_id + "'");
    }
    auto key = std::make_pair(v.cell, v.record_id);
    by_key.try_emplace(std::move(key), std::move(v));
  }

  const std::set<std::string> ids(cf.record_ids.begin(), cf.record_ids.end());
  std::vector<ConditionResult> results;
  std::string sorted;
  std::string baseline_id;
  for (const Cell& cell : cf.cells) {
    std::vector<Verdict> verdicts;
    std::vector<ResponseStatus> statuses;
    std::size_t present = 0;
    for (auto it = by_key.lower_bound({cell.index, std::string()});
         it != by_key.end() && it->first.first == cell.index; ++it) {
      if (!ids.count(it->first.second)) {
        throw parse_error(vpath + ": verdict for unknown record '" + it->first.second + "'");
      }
      ++present;
      verdicts.push_back(it->second.verdict.value_or(Verdict{}));
      statuses.push_back(it->second.status);
      sorted += it->second.to_json().dump() + "\n";
    }
    if (present != ids.size()) {
      throw Error(ErrorCode::kUndefined,
                  "incomplete run: cell '" + cell.condition_id + "' has " + std::to_string(present) +
                      " of " + std::to_string(ids.size()) + " records (rerun with --resume)");
    }
    ConditionResult r = accuracy(cell.condition_id, verdicts, statuses, cf.refusals);
    r.row = cell.row;
    r.col = cell.col;
    results.push_back(std::move(r));
    if (cell.baseline) baseline_id = cell.condition_id;
  }
  if (baseline_id.empty() && !cf.cells.empty()) baseline_id = cf.cells.front().condition_id;

  RunReport report = build_report(std::move(results), baseline_id, cf.layout);
  write_file_atomic(vpath, sorted);
  write_file_atomic((fs::path(out_dir) / "report.csv").string(), report.csv);
  write_file_atomic((fs::path(out_dir) / "report.md").string(), report.markdown);
  write_file_atomic((fs::path(out_dir) / "report.json").string(), report.to_json().dump(2) + "\n");
  return report;
}

// ---- Runner ---------------------------------------------------------------

Runner::Runner(RunConfig config, RunHooks hooks)
    : config_(std::move(config)), hooks_(std::move(hooks)) {}

void Runner::warn(const std::string& message) {
  warnings_.push_back(message);
  if (hooks_.log) hooks_.log("warning: " + message);
}

RunReport Runner::run() {
  return execute(plan_cells(config_, false, &warnings_), ReportLayout::kAblation);
}

RunReport Runner::sweep() {
  std::vector<std::string> w;
  std::vector<Cell> cells = plan_cells(config_, true, &w);
  for (const std::string& m : w) warn(m);
  return execute(std::move(cells), ReportLayout::kGrid);
}

std::vector<TransformedChain> Runner::transform(bool sweep) {
  if (config_.dataset.empty()) throw invalid_argument("config has no dataset");
  IngestResult data = ingest(config_.dataset);
  for (const std::string& m : data.warnings) warn(m);
  std::vector<std::string> w;
  const std::vector<Cell> cells = plan_cells(config_, sweep, &w);
  for (const std::string& m : w) warn(m);
  std::vector<TransformedChain> out;
  for (const Cell& cell : cells) {
    const TransformPipeline pipeline = TransformPipeline::parse(cell.pipeline, cell.seed);
    for (const ReasoningRecord& r : data.records) {
      try {
        out.push_back({cell.condition_id, r.id, pipeline.apply(r)});
      } catch (const Error& e) {
        throw Error(e.code(), "record '" + r.id + "': " + e.what());
      }
    }
  }
  return out;
}

RunReport Runner::execute(std::vector<Cell> cells, ReportLayout default_layout) {
  if (config_.dataset.empty()) throw invalid_argument("config has no dataset");
  IngestResult data = ingest(config_.dataset);
  for (const std::string& m : data.warnings) warn(m);
  if (data.records.empty()) throw invalid_argument("dataset " + config_.dataset + " has no records");
  const std::vector<ReasoningRecord>& records = data.records;

  std::optional<PromptTemplate> tmpl;
  if (config_.prompt_template) tmpl = PromptTemplate::from_file(*config_.prompt_template);

  fs::create_directories(config_.out);
  const fs::path out(config_.out);
  CellsFile cf;
  cf.cells = cells;
  cf.layout = config_.layout.value_or(default_layout);
  cf.refusals = config_.refusals;
  for (const ReasoningRecord& r : records) cf.record_ids.push_back(r.id);
  const std::string cells_path = (out / kCellsFile).string();
  const std::string vpath = (out / kVerdictsFile).string();

  std::set<std::pair<std::size_t, std::string>> done;
  std::vector<VerdictLine> kept;
  if (config_.resume && fs::exists(cells_path)) {
    const CellsFile prev = load_cells(config_.out);
    if (prev.cells != cf.cells || prev.record_ids != cf.record_ids) {
      throw invalid_argument("cannot resume in " + config_.out +
                             ": cells or records differ from the interrupted run");
    }
    for (VerdictLine& v : load_journal(vpath)) {
      if (retryable(v.status)) continue;
      if (done.insert({v.cell, v.record_id}).second) kept.push_back(std::move(v));
    }
  }
  write_file_atomic(cells_path, cf.to_json().dump(2) + "\n");
  {
    std::string prefix;
    for (const VerdictLine& v : kept) prefix += v.to_json().dump() + "\n";
    write_file_atomic(vpath, prefix);
  }
  if (!kept.empty() && hooks_.log) {
    hooks_.log("resuming: " + std::to_string(kept.size()) + " verdicts already recorded");
  }

  HttpChatBackend::Logger http_log = hooks_.log;
  std::shared_ptr<Backend> backend =
      make_backend(config_.backend, (out / kResponsesFile).string(), config_.parallel, http_log);
  if (config_.record_to) {
    backend = std::make_shared<RecordingBackend>(
        backend, std::make_shared<ResponseArchive>(*config_.record_to));
  }
  std::shared_ptr<Backend> judge_backend;
  ExternalJudge external;
  if (config_.judge.external) {
    judge_backend = make_backend(*config_.judge.backend, (out / "judge_responses.jsonl").string(),
                                 config_.parallel, http_log);
    external.backend = judge_backend.get();
    external.params = config_.judge.params;
    if (config_.judge.prompt_template) external.prompt_template = read_file(*config_.judge.prompt_template);
  }
  const JudgeContext ctx{config_.judge.rule, config_.mode == EvalMode::kRet};

  std::vector<std::pair<std::size_t, std::size_t>> jobs;  // (cell, record)
  for (const Cell& cell : cells) {
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (!done.count({cell.index, records[r].id})) jobs.emplace_back(cell.index, r);
    }
  }
  std::vector<TransformPipeline> pipelines;
  for (const Cell& cell : cells) pipelines.push_back(TransformPipeline::parse(cell.pipeline, cell.seed));

  std::ofstream journal(vpath, std::ios::binary | std::ios::app);
  if (!journal) throw io_error("cannot append to " + vpath);
  std::mutex journal_mu;
  std::size_t written = 0;

  parallel_for(jobs.size(), config_.parallel, [&](std::size_t j) {
    const Cell& cell = cells[jobs[j].first];
    const ReasoningRecord& rec = records[jobs[j].second];
    std::string chain;
    try {
      chain = pipelines[cell.index].apply(rec);
    } catch (const Error& e) {
      throw Error(e.code(), "record '" + rec.id + "', cell '" + cell.condition_id + "': " + e.what());
    }
    CompletionRequest req;
    req.prompt = build_prompt(rec, chain, config_.mode, config_.include_question, config_.include_chain);
    req.rendered = tmpl ? req.prompt->render(*tmpl) : req.prompt->render();
    const ModelResponse resp = backend->complete(req, config_.inference);

    VerdictLine line;
    line.cell = cell.index;
    line.condition_id = cell.condition_id;
    line.record_id = rec.id;
    line.status = resp.status;
    line.response = resp.text;
    line.error = resp.error;
    if (resp.ok()) {
      try {
        line.verdict = config_.judge.external ? judge_external(rec, *resp.text, external, ctx)
                                              : judge_local(rec, *resp.text, ctx);
      } catch (const JudgmentUnavailable& e) {
        line.status = ResponseStatus::kTransportError;
        line.error = e.what();
      }
    } else if (resp.status == ResponseStatus::kRefused) {
      Verdict v;
      v.note = "refused";
      line.verdict = v;
    }

    std::lock_guard lock(journal_mu);
    journal << line.to_json().dump() << '\n';
    journal.flush();
    if (!journal) throw io_error("write failed: " + vpath);
    ++written;
    if (hooks_.after_write) hooks_.after_write(written);
  });
  journal.close();

  return report_from_dir(config_.out);
}

std::vector<ReasoningRecord> Runner::collect() {
  if (config_.collect.questions.empty()) throw invalid_argument("config has no collect.questions");
  if (config_.collect.samples == 0) throw invalid_argument("collect.samples must be positive");
  if (BackendSpec::parse(config_.backend).kind == BackendSpec::Kind::kSurrogate) {
    throw invalid_argument("a surrogate backend cannot generate chains");
  }

  // Questions reuse the record format with an empty chain.
  std::vector<ReasoningRecord> questions;
  {
    std::istringstream in(read_file(config_.collect.questions));
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        json j = json::parse(line);
        if (!j.contains("chain")) j["chain"] = "";
        ReasoningRecord q = record_from_json(j);
        if (!ids.insert(q.id).second) throw parse_error("duplicate id '" + q.id + "'");
        questions.push_back(std::move(q));
      } catch (const std::exception& e) {
        throw parse_error(config_.collect.questions + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  if (questions.empty()) warn("no questions in " + config_.collect.questions);

  fs::create_directories(config_.out);
  const std::string archive = (fs::path(config_.out) / kResponsesFile).string();
  std::shared_ptr<Backend> backend = make_backend(config_.backend, archive, config_.parallel, hooks_.log);

  const std::uint32_t samples = config_.collect.samples;
  std::vector<std::optional<ReasoningRecord>> slots(questions.size() * samples);
  std::mutex warn_mu;
  parallel_for(slots.size(), config_.parallel, [&](std::size_t i) {
    const ReasoningRecord& q = questions[i / samples];
    const auto s = static_cast<std::uint32_t>(i % samples);
    const ModelResponse r = collect_chain(*backend, q.question, config_.inference, s);
    if (!r.ok()) {
      std::lock_guard lock(warn_mu);
      warn("question '" + q.id + "' sample " + std::to_string(s) + ": " + to_string(r.status) +
           (r.error.empty() ? "" : " (" + r.error + ")") + "; excluded");
      return;
    }
    ReasoningRecord rec = q;
    rec.id = q.id + "#" + std::to_string(s);
    rec.chain = *r.text;
    rec.generator = config_.inference.model_id;
    rec.sample_index = s;
    slots[i] = std::move(rec);
  });

  std::vector<ReasoningRecord> records;
  for (auto& s : slots) {
    if (s) records.push_back(std::move(*s));
  }
  const std::string output = config_.collect.output.empty()
                                 ? (fs::path(config_.out) / "records.jsonl").string()
                                 : config_.collect.output;
  write_records(output, records);
  return records;
}

}  // namespace chainprobe
