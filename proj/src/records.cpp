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

#include "chainprobe/records.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "chainprobe/error.hpp"

namespace chainprobe {

using nlohmann::json;

const char* to_string(Benchmark b) {
  switch (b) {
    case Benchmark::kMathInteger: return "math_integer";
    case Benchmark::kCode: return "code";
    case Benchmark::kMultipleChoice: return "multiple_choice";
  }
  return "math_integer";
}

Benchmark parse_benchmark(std::string_view s) {
  if (s == "math_integer") return Benchmark::kMathInteger;
  if (s == "code") return Benchmark::kCode;
  if (s == "multiple_choice") return Benchmark::kMultipleChoice;
  throw parse_error("unknown benchmark '" + std::string(s) + "'");
}

json to_json(const ReasoningRecord& r) {
  return json{{"id", r.id},
              {"benchmark", to_string(r.benchmark)},
              {"question", r.question},
              {"chain", r.chain},
              {"gold_answer", r.gold_answer},
              {"generator", r.generator},
              {"sample_index", r.sample_index}};
}

namespace {

const std::string& required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw parse_error(std::string("missing field '") + key + "'");
  if (!it->is_string()) {
    throw parse_error(std::string("field '") + key + "' must be a string");
  }
  return it->get_ref<const std::string&>();
}

}  // namespace

ReasoningRecord record_from_json(const json& j) {
  if (!j.is_object()) throw parse_error("record is not a JSON object");
  ReasoningRecord r;
  r.id = required_string(j, "id");
  if (r.id.empty()) throw parse_error("field 'id' is empty");
  r.benchmark = parse_benchmark(required_string(j, "benchmark"));
  r.question = required_string(j, "question");
  r.chain = required_string(j, "chain");
  // Gold answers are sometimes stored as JSON numbers.
  auto gold = j.find("gold_answer");
  if (gold == j.end()) throw parse_error("missing field 'gold_answer'");
  if (gold->is_string()) {
    r.gold_answer = gold->get<std::string>();
  } else if (gold->is_number_integer()) {
    r.gold_answer = std::to_string(gold->get<long long>());
  } else {
    throw parse_error("field 'gold_answer' must be a string or integer");
  }
  if (auto g = j.find("generator"); g != j.end() && g->is_string()) {
    r.generator = g->get<std::string>();
  }
  if (auto s = j.find("sample_index"); s != j.end()) {
    if (!s->is_number_unsigned()) {
      throw parse_error("field 'sample_index' must be a nonnegative integer");
    }
    r.sample_index = s->get<std::uint32_t>();
  }
  return r;
}

IngestResult ingest_text(std::string_view jsonl, std::string_view origin) {
  IngestResult result;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where =
        std::string(origin) + ":" + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw parse_error(where + "malformed JSON: " + e.what());
    }
    ReasoningRecord r;
    try {
      r = record_from_json(j);
    } catch (const Error& e) {
      throw parse_error(where + e.what());
    }
    if (!seen.insert(r.id).second) {
      throw parse_error(where + "duplicate id '" + r.id + "'");
    }
    result.records.push_back(std::move(r));
  }
  if (result.records.empty()) {
    result.warnings.push_back(std::string(origin) + ": dataset is empty");
  }
  return result;
}

IngestResult ingest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open dataset " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_text(ss.str(), path);
}

void write_records(const std::string& path,
                   const std::vector<ReasoningRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace chainprobe
