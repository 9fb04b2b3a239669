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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainprobe/judging.hpp"
#include "chainprobe/modelio.hpp"

namespace chainprobe {

enum class Shade { kNone, kLight, kDark };

const char* to_string(Shade s);

// Light when -60 <= delta < -25, dark when delta < -60 (percentage points).
Shade shade_for(double delta_pp);

// How refused responses enter the denominator. Transport errors and
// timeouts are always excluded.
enum class RefusalPolicy { kCountAsIncorrect, kExclude };

const char* to_string(RefusalPolicy p);
RefusalPolicy parse_refusal_policy(std::string_view s);

struct ConditionResult {
  std::string condition_id;
  // Facets for grid layouts; empty for plain ablation tables.
  std::string row;
  std::string col;
  std::uint64_t n_total = 0;  // judged responses, failures included
  std::uint64_t n_success = 0;
  std::uint64_t n_correct = 0;
  double accuracy = 0.0;  // fraction
  double se = 0.0;        // fraction
  std::optional<double> delta_pp;
  Shade shade = Shade::kNone;
};

ConditionResult from_counts(std::string condition_id, std::uint64_t n_correct,
                            std::uint64_t n_success);

// A printed accuracy (e.g. 58.7) used as-is, for comparing against published
// tables. n only affects the standard error.
ConditionResult from_percent(std::string condition_id, double percent,
                             std::uint64_t n_success = 300);

// verdicts[i] is read only when statuses[i] is ok (or refused, which counts
// as incorrect under kCountAsIncorrect). Throws kInvalidArgument on length
// mismatch and kUndefined when nothing is left in the denominator.
ConditionResult accuracy(std::string condition_id,
                         std::span<const Verdict> verdicts,
                         std::span<const ResponseStatus> statuses,
                         RefusalPolicy policy = RefusalPolicy::kCountAsIncorrect);

// 100 * (a - b) in percentage points.
double delta_pp(const ConditionResult& a, const ConditionResult& b);

std::string format_percent(double fraction);  // "91.33"
std::string format_delta(double delta_pp);    // "+4.7", "-91.3", "0.0"

enum class ReportLayout { kGrid, kAblation };

const char* to_string(ReportLayout l);
ReportLayout parse_report_layout(std::string_view s);

struct RunReport {
  std::vector<ConditionResult> results;
  std::string baseline_id;
  ReportLayout layout = ReportLayout::kAblation;
  std::string csv;
  std::string markdown;

  nlohmann::json to_json() const;
  std::uint64_t total_success() const;
};

// Fills delta/shade against the baseline and renders CSV and Markdown.
// Throws kNotFound for an unknown baseline.
RunReport build_report(std::vector<ConditionResult> results,
                       const std::string& baseline_id, ReportLayout layout);

}  // namespace chainprobe
