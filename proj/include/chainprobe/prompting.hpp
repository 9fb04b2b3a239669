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

#include <optional>
#include <string>
#include <string_view>

#include "chainprobe/records.hpp"

namespace chainprobe {

enum class EvalMode { kGen, kRet };

const char* to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);

inline constexpr std::string_view kAnswerPrefix = "Thus, the answer is";
inline constexpr std::string_view kCodePrefix = "Thus, the code is\n```cpp\n";
inline constexpr std::string_view kSectionSeparator = "\n\n";
inline constexpr std::string_view kDefaultTemplateVersion = "v1";

// Extraction prefix appended in Ret mode for each benchmark family.
std::string_view ret_prefix(Benchmark b);

// Template with named slots, for alternate scaffolding:
//
//   {{question}} {{chain}} {{prefix}}     substituted verbatim
//   {{#question}} ... {{/question}}       kept only when a question is set
//   {{#chain}} ... {{/chain}}             kept only when a chain is set
//   {{#ret}} ... {{/ret}}                 kept only in Ret mode
//
// Sections do not nest. Rendering in Ret mode must end with the prefix.
class PromptTemplate {
 public:
  // Throws kParse on unknown slots or unbalanced sections.
  explicit PromptTemplate(std::string text);
  static PromptTemplate from_file(const std::string& path);

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct EvalPrompt {
  std::optional<std::string> question;
  std::optional<std::string> chain;
  EvalMode mode = EvalMode::kRet;
  std::string prefix;  // empty in Gen mode
  Benchmark benchmark = Benchmark::kMathInteger;

  // Default layout: present parts among [question, chain, prefix] joined by
  // a blank line. With neither question nor chain the Ret prompt is the
  // prefix alone.
  std::string render() const;
  // Throws kInvalidArgument if a Ret rendering does not end with the prefix.
  std::string render(const PromptTemplate& tmpl) const;
};

// include_question=false omits the question; include_chain=false omits the
// chain and ignores `chain`. Throws kInvalidArgument when include_chain is
// set without a chain.
EvalPrompt build_prompt(const ReasoningRecord& record,
                        const std::optional<std::string>& chain, EvalMode mode,
                        bool include_question, bool include_chain);

}  // namespace chainprobe
