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

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "chainprobe/error.hpp"
#include "chainprobe/modelio.hpp"
#include "chainprobe/records.hpp"

namespace chainprobe {

enum class JudgeMethod { kNumeric, kChoice, kExternal, kCodeStub };

const char* to_string(JudgeMethod m);
JudgeMethod parse_judge_method(std::string_view s);

// correct implies extracted.
struct Verdict {
  bool correct = false;
  std::optional<std::string> extracted;
  JudgeMethod method = JudgeMethod::kNumeric;
  std::string note;

  bool operator==(const Verdict&) const = default;
};

nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

enum class ExtractionRule {
  // First candidate after the last "answer is"/"answer:" anchor; when the
  // response is a Ret-mode continuation the start of the response counts as
  // the anchor. Without an anchor, the last candidate.
  kFirstAfterPrefix,
  // Always the last candidate.
  kLast,
};

const char* to_string(ExtractionRule r);
ExtractionRule parse_extraction_rule(std::string_view s);

struct JudgeContext {
  ExtractionRule rule = ExtractionRule::kFirstAfterPrefix;
  // The response continues a prompt that ended with the extraction prefix.
  bool follows_prefix = false;
};

// Normalized signed integer ("070" -> "70", "-0" -> "0") from the response
// after stripping '$', thousands separators and \boxed{...} wrappers.
std::optional<std::string> extract_integer(std::string_view response,
                                           const JudgeContext& ctx = {});

// Option letter A-D. Standalone uppercase letters count anywhere; lowercase
// ones only in "(b)" or after "option"/"choice".
std::optional<char> extract_choice(std::string_view response,
                                   const JudgeContext& ctx = {});

// gold must be in [0, 999]; throws kInvalidArgument otherwise.
Verdict judge_numeric(std::string_view response, int gold,
                      const JudgeContext& ctx = {});
Verdict judge_numeric(std::string_view response, std::string_view gold,
                      const JudgeContext& ctx = {});

// gold must be one of A-D (either case).
Verdict judge_choice(std::string_view response, char gold,
                     const JudgeContext& ctx = {});
Verdict judge_choice(std::string_view response, std::string_view gold,
                     const JudgeContext& ctx = {});

// Code from the first fenced block, or from the start of a Ret continuation
// up to its closing fence.
std::optional<std::string> extract_code(std::string_view response);

// Executes extracted code against the item's tests; nullopt when it cannot
// decide. No runner is bundled.
using CodeRunner = std::function<std::optional<bool>(
    const std::string& code, const ReasoningRecord& record)>;

// Records the extracted code. Without a runner the verdict is incorrect with
// a "not executed" note.
Verdict judge_code(std::string_view response, const ReasoningRecord& record,
                   const CodeRunner& runner = {});

// Dispatches on the record's benchmark.
Verdict judge_local(const ReasoningRecord& record, std::string_view response,
                    const JudgeContext& ctx = {},
                    const CodeRunner& runner = {});

class JudgmentUnavailable : public Error {
 public:
  explicit JudgmentUnavailable(const std::string& what)
      : Error(ErrorCode::kBackend, "judgment unavailable: " + what) {}
};

inline constexpr std::string_view kDefaultJudgeTemplate =
    "You are grading an answer to a benchmark question.\n"
    "Reference answer: {{gold}}\n"
    "Candidate response: {{response}}\n"
    "Does the candidate response state a final answer equivalent to the "
    "reference answer? Reply with YES or NO only.";

struct ExternalJudge {
  Backend* backend = nullptr;
  InferenceParams params;
  std::string prompt_template{kDefaultJudgeTemplate};
};

std::string render_judge_prompt(std::string_view tmpl, std::string_view gold,
                                std::string_view response);

// YES/NO parse of a judge reply (also CORRECT/INCORRECT, TRUE/FALSE).
std::optional<bool> parse_judge_reply(std::string_view reply);

// Asks the judge backend. An unparseable reply falls back to judge_local and
// says so in the note; a backend failure throws JudgmentUnavailable.
Verdict judge_external(const ReasoningRecord& record,
                       std::string_view response, const ExternalJudge& judge,
                       const JudgeContext& ctx = {});

}  // namespace chainprobe
