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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace chainprobe {

enum class Benchmark { kMathInteger, kCode, kMultipleChoice };

const char* to_string(Benchmark b);
// Accepts "math_integer", "code", "multiple_choice". Throws kParse.
Benchmark parse_benchmark(std::string_view s);

// One collected reasoning chain together with the item it answers.
struct ReasoningRecord {
  std::string id;
  Benchmark benchmark = Benchmark::kMathInteger;
  std::string question;
  std::string chain;
  std::string gold_answer;
  std::string generator;
  std::uint32_t sample_index = 0;

  bool operator==(const ReasoningRecord&) const = default;
};

nlohmann::json to_json(const ReasoningRecord& r);
// Throws kParse naming the missing or mistyped field.
ReasoningRecord record_from_json(const nlohmann::json& j);

struct IngestResult {
  std::vector<ReasoningRecord> records;
  std::vector<std::string> warnings;
};

// Reads a JSONL dataset. Blank lines are skipped. Errors carry the 1-based
// line number: malformed JSON, missing required field (id, benchmark,
// question, chain, gold_answer), duplicate id.
IngestResult ingest(const std::string& path);
IngestResult ingest_text(std::string_view jsonl, std::string_view origin);

void write_records(const std::string& path,
                   const std::vector<ReasoningRecord>& records);

}  // namespace chainprobe
