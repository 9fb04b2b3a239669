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

// Command-line front end over the C API.
//
//   chainprobe run    --config cfg.json [--pipeline DSL] [--mode gen|ret] ...
//   chainprobe sweep  --config cfg.json ...
//   chainprobe collect --config cfg.json
//   chainprobe transform --config cfg.json [--sweep]
//   chainprobe report --out DIR

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chainprobe/chainprobe.h"

namespace {

struct Overrides {
  std::string config;
  std::string dataset;
  std::string pipeline;
  std::string mode;
  std::string backend;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> parallel;
  std::string out;
  bool resume = false;
  bool no_question = false;
  bool no_chain = false;
  std::string layout;
  std::string record_to;
  std::uint64_t abort_after = 0;
  bool quiet = false;
};

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(cp_status st) {
  if (st != CP_OK) {
    throw CliError(std::string(cp_status_name(st)) + ": " + cp_last_error());
  }
}

// Owns a string returned by the C API.
struct Owned {
  char* p = nullptr;
  ~Owned() { cp_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)");
  cmd->add_option("--dataset", o.dataset, "Records file (JSONL)");
  cmd->add_option("--pipeline", o.pipeline, "Transformation pipeline, e.g. remove_alphabet,line_shuffle");
  cmd->add_option("--mode", o.mode, "Evaluation mode")->check(CLI::IsMember({"gen", "ret"}));
  cmd->add_option("--backend", o.backend,
                  "surrogate:<strategy> | replay:<archive.jsonl> | live:<url>");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--parallel", o.parallel, "Worker and in-flight request limit")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--resume", o.resume, "Skip records already judged in --out");
  cmd->add_flag("--no-question", o.no_question, "Leave the question out of prompts");
  cmd->add_flag("--no-chain", o.no_chain, "Leave the chain out of prompts");
  cmd->add_option("--layout", o.layout, "Report layout")->check(CLI::IsMember({"grid", "ablation"}));
  cmd->add_option("--record-to", o.record_to, "Also archive every response to this JSONL file");
  cmd->add_option("--abort-after", o.abort_after)->group("");  // test hook
  cmd->add_flag("-q,--quiet", o.quiet, "Only print errors");
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

cp_runner* make_runner(const Overrides& o) {
  cp_runner* r = nullptr;
  if (!o.config.empty()) {
    check(cp_runner_create_from_file(o.config.c_str(), &r));
  } else {
    check(cp_runner_create("{}", nullptr, &r));
  }
  auto set = [&](const char* key, const std::string& value) {
    const cp_status st = cp_runner_set(r, key, value.c_str());
    if (st != CP_OK) {
      const std::string msg = std::string(cp_status_name(st)) + ": " + cp_last_error();
      cp_runner_destroy(r);
      throw CliError(msg);
    }
  };
  if (!o.dataset.empty()) set("dataset", o.dataset);
  if (!o.pipeline.empty()) set("pipeline", o.pipeline);
  if (!o.mode.empty()) set("mode", o.mode);
  if (!o.backend.empty()) set("backend", o.backend);
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.parallel) set("parallel", std::to_string(*o.parallel));
  if (!o.out.empty()) set("out", o.out);
  if (o.resume) set("resume", "true");
  if (o.no_question) set("include_question", "false");
  if (o.no_chain) set("include_chain", "false");
  if (!o.layout.empty()) set("layout", o.layout);
  if (!o.record_to.empty()) set("record_to", o.record_to);
  if (o.abort_after > 0) cp_runner_set_abort_after(r, o.abort_after);
  if (!o.quiet) cp_runner_set_log(r, log_line, nullptr);
  return r;
}

void print_warnings(cp_runner* r) {
  Owned w;
  if (cp_runner_warnings(r, &w.p) != CP_OK) return;
  for (const auto& m : nlohmann::json::parse(w.str())) {
    std::fprintf(stderr, "warning: %s\n", m.get<std::string>().c_str());
  }
}

// Runs `op` on a fresh runner, printing warnings either way.
template <typename Op>
void with_runner(const Overrides& o, Op&& op) {
  cp_runner* r = make_runner(o);
  const cp_status st = op(r);
  const std::string err = cp_last_error();
  if (!o.quiet) print_warnings(r);
  cp_runner_destroy(r);
  if (st != CP_OK) throw CliError(std::string(cp_status_name(st)) + ": " + err);
}

void print_report(const std::string& report_json) {
  const auto j = nlohmann::json::parse(report_json);
  std::cout << j.at("markdown").get<std::string>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainprobe: perturb reasoning chains and measure answer extraction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cp_version()));

  Overrides run_o, sweep_o, collect_o, transform_o;
  std::string report_dir;
  bool transform_sweep = false;

  CLI::App* run = app.add_subcommand("run", "Evaluate one pipeline over a dataset");
  add_run_options(run, run_o);
  CLI::App* sweep = app.add_subcommand("sweep", "Evaluate every cell of the configured grid");
  add_run_options(sweep, sweep_o);
  CLI::App* collect = app.add_subcommand("collect", "Collect reasoning chains for questions");
  add_run_options(collect, collect_o);
  CLI::App* transform = app.add_subcommand("transform", "Print transformed chains without inference");
  add_run_options(transform, transform_o);
  transform->add_flag("--sweep", transform_sweep, "Use the grid cells instead of --pipeline");
  CLI::App* report = app.add_subcommand("report", "Rebuild reports from an output directory");
  report->add_option("--out", report_dir, "Output directory of a run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      with_runner(run_o, [](cp_runner* r) {
        Owned rep;
        const cp_status st = cp_runner_run(r, &rep.p);
        if (st == CP_OK) print_report(rep.str());
        return st;
      });
    } else if (sweep->parsed()) {
      with_runner(sweep_o, [](cp_runner* r) {
        Owned rep;
        const cp_status st = cp_runner_sweep(r, &rep.p);
        if (st == CP_OK) print_report(rep.str());
        return st;
      });
    } else if (collect->parsed()) {
      with_runner(collect_o, [](cp_runner* r) {
        std::uint64_t n = 0;
        const cp_status st = cp_runner_collect(r, &n);
        if (st == CP_OK) std::cout << "collected " << n << " records\n";
        return st;
      });
    } else if (transform->parsed()) {
      with_runner(transform_o, [&](cp_runner* r) {
        Owned out;
        const cp_status st = cp_runner_transform(r, transform_sweep ? 1 : 0, &out.p);
        if (st == CP_OK) std::cout << out.str();
        return st;
      });
    } else if (report->parsed()) {
      Owned rep;
      check(cp_report_from_dir(report_dir.c_str(), &rep.p));
      print_report(rep.str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
