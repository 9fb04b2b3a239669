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

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "chainprobe/error.hpp"
#include "chainprobe/orchestrator.hpp"
#include "testutil.hpp"

namespace cp = chainprobe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("chainprobe_orch_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str(const std::string& sub = {}) const { return (path_ / sub).string(); }

 private:
  fs::path path_;
};

cp::RunConfig fixture_config(const TempDir& dir, const std::string& out = "out") {
  cp::RunConfig c;
  c.dataset = testutil::data_path("fixture10.jsonl");
  c.out = dir.str(out);
  c.seed = 17;
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::vector<std::string> lines_of(const std::string& path) {
  auto lines = testutil::split_on(testutil::read_text(path), '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

TEST(Ingest, Fixture) {
  const auto r = cp::ingest(testutil::data_path("fixture10.jsonl"));
  ASSERT_EQ(r.records.size(), 10u);
  for (const auto& rec : r.records) {
    EXPECT_EQ(testutil::split_on(rec.chain, '\n').back(), "Thus the answer is " + rec.gold_answer);
  }
}

TEST(Ingest, ThirtyQuestionsTimesTenSamples) {
  std::string text;
  for (int q = 0; q < 30; ++q) {
    for (int s = 0; s < 10; ++s) {
      json j{{"id", "q" + std::to_string(q) + "#" + std::to_string(s)},
             {"benchmark", "math_integer"},
             {"question", "Q"},
             {"chain", "c"},
             {"gold_answer", "1"},
             {"sample_index", s}};
      text += j.dump() + "\n";
    }
  }
  EXPECT_EQ(cp::ingest_text(text, "mem").records.size(), 300u);
}

TEST(Ingest, Errors) {
  const std::string good = R"({"id":"a","benchmark":"math_integer","question":"q","chain":"c","gold_answer":"1"})";
  const std::string missing = R"({"id":"b","benchmark":"math_integer","question":"q","chain":"c"})";
  try {
    cp::ingest_text(good + "\n" + missing + "\n", "mem");
    FAIL();
  } catch (const cp::Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("gold_answer"), std::string::npos) << e.what();
  }
  EXPECT_THROW(cp::ingest_text(good + "\n" + good + "\n", "mem"), cp::Error);
  EXPECT_THROW(cp::ingest_text("{not json\n", "mem"), cp::Error);
  const auto empty = cp::ingest_text("", "mem");
  EXPECT_TRUE(empty.records.empty());
  EXPECT_FALSE(empty.warnings.empty());
}

TEST(Config, StrictAndResolvesPaths) {
  const json j = {{"dataset", "data/x.jsonl"},
                  {"pipeline", "remove_alphabet,line_shuffle"},
                  {"mode", "gen"},
                  {"backend", "replay:arch.jsonl"},
                  {"seed", 9},
                  {"inference", {{"model", "m"}, {"temperature", 0.2}}},
                  {"grid", {{"noise", {0, 1}}}}};
  const auto c = cp::RunConfig::from_json(j, "/base");
  EXPECT_EQ(c.dataset, "/base/data/x.jsonl");
  EXPECT_EQ(c.backend, "replay:/base/arch.jsonl");
  EXPECT_EQ(c.mode, cp::EvalMode::kGen);
  EXPECT_EQ(c.inference.model_id, "m");
  EXPECT_DOUBLE_EQ(c.inference.temperature, 0.2);
  EXPECT_EQ(c.grid.noise, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(cp::RunConfig::from_json(c.to_json()).to_json(), c.to_json());

  EXPECT_THROW(cp::RunConfig::from_json({{"datset", "x"}}), cp::Error);
  EXPECT_THROW(cp::RunConfig::from_json({{"grid", {{"noize", {1}}}}}), cp::Error);
  EXPECT_THROW(cp::RunConfig::from_json({{"parallel", 0}}), cp::Error);
}

TEST(ConditionId, Format) {
  EXPECT_EQ(cp::condition_id("", cp::EvalMode::kRet, true, true), "none [ret q+c]");
  EXPECT_EQ(cp::condition_id("line_shuffle", cp::EvalMode::kGen, false, true), "line_shuffle [gen c]");
  EXPECT_EQ(cp::condition_id("x", cp::EvalMode::kRet, true, false), "x [ret q]");
  EXPECT_EQ(cp::condition_id("x", cp::EvalMode::kRet, false, false), "x [ret -]");
}

TEST(Plan, GridShapeAndDuplicates) {
  cp::RunConfig c;
  c.grid.factors = {{"none", "remove_alphabet"}, {"none", "line_shuffle", "word_shuffle"}};
  c.grid.noise = {0, 1, 2, 3};
  std::vector<std::string> warnings;
  const auto cells = cp::plan_cells(c, true, &warnings);
  EXPECT_EQ(cells.size(), 24u);
  EXPECT_TRUE(warnings.empty());
  EXPECT_TRUE(cells.front().baseline);
  EXPECT_EQ(cells.front().condition_id, "none [ret q+c]");
  EXPECT_EQ(cells[5].pipeline, "line_shuffle,inject_noise(k=1)");
  std::map<std::string, int> rows;
  for (const auto& cell : cells) ++rows[cell.row];
  EXPECT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < cells.size(); ++i) EXPECT_EQ(cells[i].index, i);

  cp::RunConfig d;
  d.grid.pipelines = {"line_shuffle", "none", "line_shuffle", ""};
  warnings.clear();
  const auto dedup = cp::plan_cells(d, true, &warnings);
  EXPECT_EQ(dedup.size(), 2u);
  EXPECT_EQ(warnings.size(), 2u);
  EXPECT_NE(warnings.front().find("duplicate"), std::string::npos);
}

TEST(Run, SurrogateOnFixtureIsPerfect) {
  TempDir dir("perfect");
  cp::Runner runner(fixture_config(dir));
  const auto rep = runner.run();
  ASSERT_EQ(rep.results.size(), 1u);
  EXPECT_EQ(rep.results[0].n_success, 10u);
  EXPECT_EQ(cp::format_percent(rep.results[0].accuracy), "100.00");
  for (const char* f : {"cells.json", "verdicts.jsonl", "report.csv", "report.md", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir.str("out/") + f)) << f;
  }
}

TEST(Run, MaskDigitsCollapses) {
  TempDir dir("collapse");
  for (const char* backend : {"surrogate:after_anchor", "surrogate:last_number", "surrogate:most_frequent_number"}) {
    auto c = fixture_config(dir, std::string("out_") + backend);
    c.pipeline = "mask_digits";
    c.backend = backend;
    const auto rep = cp::Runner(c).run();
    EXPECT_EQ(rep.results[0].n_correct, 0u) << backend;
    EXPECT_EQ(rep.results[0].n_success, 10u) << backend;
  }
}

TEST(Run, DeterministicAcrossParallelism) {
  TempDir dir("parallel");
  auto a = fixture_config(dir, "a");
  a.pipeline = "word_shuffle,inject_noise(k=1)";
  a.backend = "surrogate:most_frequent_number";
  auto b = a;
  b.out = dir.str("b");
  b.parallel = 8;
  cp::Runner(a).run();
  cp::Runner(b).run();
  for (const char* f : {"verdicts.jsonl", "report.csv", "report.md"}) {
    EXPECT_EQ(testutil::read_text(dir.str("a/") + f), testutil::read_text(dir.str("b/") + f)) << f;
  }
}

TEST(Sweep, SingleCellEqualsRun) {
  TempDir dir("single");
  auto c = fixture_config(dir, "run");
  c.pipeline = "line_shuffle";
  c.backend = "surrogate:last_number";
  auto s = c;
  s.out = dir.str("sweep");
  const auto run = cp::Runner(c).run();
  const auto sweep = cp::Runner(s).sweep();
  ASSERT_EQ(sweep.results.size(), 1u);
  EXPECT_EQ(sweep.results[0].condition_id, run.results[0].condition_id);
  EXPECT_EQ(sweep.results[0].n_correct, run.results[0].n_correct);
  EXPECT_EQ(testutil::read_text(dir.str("run/verdicts.jsonl")), testutil::read_text(dir.str("sweep/verdicts.jsonl")));
}

TEST(Sweep, CoverageAndDuplicateWarning) {
  TempDir dir("coverage");
  auto c = fixture_config(dir);
  c.grid.pipelines = {"none", "line_shuffle", "none"};
  c.grid.noise = {0, 2};
  c.backend = "surrogate:most_frequent_number";
  cp::Runner runner(c);
  const auto rep = runner.sweep();
  EXPECT_EQ(rep.results.size(), 4u);
  ASSERT_EQ(runner.warnings().size(), 2u);
  std::map<std::pair<std::size_t, std::string>, int> seen;
  for (const auto& line : lines_of(dir.str("out/verdicts.jsonl"))) {
    const auto v = cp::VerdictLine::from_json(json::parse(line));
    ++seen[{v.cell, v.record_id}];
  }
  EXPECT_EQ(seen.size(), 40u);
  for (const auto& [k, n] : seen) EXPECT_EQ(n, 1);
  EXPECT_EQ(rep.total_success(), 40u);
  // With k=2 the false value outnumbers every gold; only the item whose
  // gold is 123 itself can still be counted correct.
  for (const auto& r : rep.results) {
    if (r.col == "k=2") {
      EXPECT_EQ(r.n_correct, 1u) << r.condition_id;
    }
  }
}

TEST(Resume, TruncatedJournalGivesIdenticalReport) {
  TempDir dir("resume");
  auto c = fixture_config(dir, "full");
  c.grid.pipelines = {"none", "word_shuffle"};
  c.grid.noise = {0, 1};
  c.backend = "surrogate:last_number";
  cp::Runner(c).sweep();
  const std::string full_csv = testutil::read_text(dir.str("full/report.csv"));

  auto r = c;
  r.out = dir.str("partial");
  cp::Runner(r).sweep();
  const auto lines = lines_of(dir.str("partial/verdicts.jsonl"));
  std::string kept;
  for (std::size_t i = 0; i < lines.size() / 2; ++i) kept += lines[i] + "\n";
  kept += lines[lines.size() / 2].substr(0, 20);  // torn tail
  write_text(dir.str("partial/verdicts.jsonl"), kept);
  for (const char* f : {"report.csv", "report.md", "report.json"}) fs::remove(dir.str("partial/") + f);

  EXPECT_THROW(cp::report_from_dir(dir.str("partial")), cp::Error);
  r.resume = true;
  std::vector<std::string> log;
  cp::Runner resumed(r, {{}, [&](const std::string& l) { log.push_back(l); }});
  resumed.sweep();
  EXPECT_EQ(testutil::read_text(dir.str("partial/report.csv")), full_csv);
  EXPECT_EQ(testutil::read_text(dir.str("partial/verdicts.jsonl")), testutil::read_text(dir.str("full/verdicts.jsonl")));
  bool mentioned = false;
  for (const auto& l : log) mentioned |= l.find("resuming") != std::string::npos;
  EXPECT_TRUE(mentioned);
}

TEST(Resume, MismatchedPlanIsRejected) {
  TempDir dir("mismatch");
  auto c = fixture_config(dir);
  cp::Runner(c).run();
  c.pipeline = "line_shuffle";
  c.resume = true;
  EXPECT_THROW(cp::Runner(c).run(), cp::Error);
}

TEST(Replay, RecordedSweepReplaysByteIdentically) {
  TempDir dir("replay");
  auto c = fixture_config(dir, "live");
  c.grid.pipelines = {"none", "remove_alphabet"};
  c.grid.noise = {0, 1};
  c.backend = "surrogate:last_number";
  c.record_to = dir.str("archive.jsonl");
  cp::Runner(c).sweep();
  const auto archive_before = testutil::read_text(dir.str("archive.jsonl"));

  auto r = c;
  r.record_to.reset();
  r.out = dir.str("replayed");
  r.backend = "replay:" + dir.str("archive.jsonl");
  cp::Runner(r).sweep();
  EXPECT_EQ(testutil::read_text(dir.str("live/report.csv")), testutil::read_text(dir.str("replayed/report.csv")));
  EXPECT_EQ(testutil::read_text(dir.str("archive.jsonl")), archive_before);
}

TEST(Replay, MissingFixtureIsTransportFailure) {
  TempDir dir("nofixture");
  write_text(dir.str("empty.jsonl"), "");
  auto c = fixture_config(dir);
  c.backend = "replay:" + dir.str("empty.jsonl");
  // Every record fails, so accuracy is undefined.
  EXPECT_THROW(cp::Runner(c).run(), cp::Error);
  for (const auto& line : lines_of(dir.str("out/verdicts.jsonl"))) {
    EXPECT_EQ(json::parse(line)["status"], "transport_error");
  }
}

TEST(Transform, DryRunPrintsChains) {
  TempDir dir("transform");
  auto c = fixture_config(dir);
  c.pipeline = "remove_alphabet";
  const auto out = cp::Runner(c).transform(false);
  ASSERT_EQ(out.size(), 10u);
  for (const auto& t : out) EXPECT_EQ(testutil::oracle_letter_count(t.chain), 0u);
}

TEST(Collect, SamplesPerQuestionWithReplay) {
  TempDir dir("collect");
  const std::vector<std::string> questions{"What is 2+2?", "What is 7*10?", "Name a prime."};
  std::string qfile;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    qfile += json{{"id", "q" + std::to_string(i)}, {"benchmark", "math_integer"}, {"question", questions[i]},
                  {"gold_answer", "1"}}
                 .dump() +
             "\n";
  }
  write_text(dir.str("questions.jsonl"), qfile);

  cp::RunConfig c;
  c.inference.model_id = "gen-model";
  {
    // Archive all samples except q2 sample 3, as a live collection would.
    class Echo final : public cp::Backend {
     public:
      cp::ModelResponse complete(const cp::CompletionRequest& r, const cp::InferenceParams&) override {
        return cp::ModelResponse::success("chain for " + r.rendered + " #" + std::to_string(r.sample));
      }
      std::string describe() const override { return "echo"; }
    };
    auto archive = std::make_shared<cp::ResponseArchive>(dir.str("archive.jsonl"));
    cp::RecordingBackend rec(std::make_shared<Echo>(), archive);
    for (std::size_t q = 0; q < questions.size(); ++q) {
      for (std::uint32_t s = 0; s < 10; ++s) {
        if (q == 2 && s == 3) continue;
        cp::collect_chain(rec, questions[q], c.inference, s);
      }
    }
  }
  c.backend = "replay:" + dir.str("archive.jsonl");
  c.out = dir.str("out");
  c.collect.questions = dir.str("questions.jsonl");
  c.collect.samples = 10;
  cp::Runner runner(c);
  const auto records = runner.collect();
  EXPECT_EQ(records.size(), 29u);
  ASSERT_EQ(runner.warnings().size(), 1u);
  EXPECT_NE(runner.warnings()[0].find("q2"), std::string::npos);
  std::map<std::string, std::set<std::uint32_t>> samples;
  for (const auto& r : records) {
    samples[r.id.substr(0, r.id.find('#'))].insert(r.sample_index);
    EXPECT_EQ(r.generator, "gen-model");
    EXPECT_EQ(r.chain, "chain for " + r.question + " #" + std::to_string(r.sample_index));
  }
  EXPECT_EQ(samples["q0"].size(), 10u);
  EXPECT_EQ(cp::ingest(dir.str("out/records.jsonl")).records, records);

  c.backend = "surrogate:last_number";
  EXPECT_THROW(cp::Runner(c).collect(), cp::Error);
}
