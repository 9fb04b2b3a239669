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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainprobe/error.hpp"
#include "chainprobe/processors.hpp"
#include "chainprobe/records.hpp"

namespace chainprobe {

// The chain-level processors. Omitting the question or the whole chain is a
// prompt flag, not a step.
enum class Step {
  kTokenShuffle,
  kWordShuffle,
  kLineShuffle,
  kInlineWordShuffle,
  kMaskAlphabet,
  kMaskDigits,
  kMaskAnswer,
  kRemoveAlphabet,
  kRemoveAnswer,
  kInjectNoise,
  kRandomToken,
  kRandomWord,
};

enum class ProcessorKind { kShuffle, kMask, kRemove, kRandomize, kInjectNoise };

ProcessorKind kind_of(Step step);
std::string_view step_name(Step step);
bool needs_answer(Step step);

struct ProcessorParams {
  std::uint32_t noise_multiplier = 1;
  std::string false_answer{kDefaultFalseSentence};
  char32_t mask_char = kDefaultMaskChar;
  std::optional<std::string> vocab_id;
  std::string scheme{kDefaultScheme};

  bool operator==(const ProcessorParams&) const = default;
};

struct ProcessorSpec {
  Step step = Step::kLineShuffle;
  ProcessorParams params;
  std::uint64_t seed_salt = 0;

  bool operator==(const ProcessorSpec&) const = default;
};

// Raised by TransformPipeline::apply; carries the failing step.
class StepError : public Error {
 public:
  StepError(std::size_t step_index, const Error& cause);
  std::size_t step_index() const { return step_index_; }

 private:
  std::size_t step_index_;
};

// Ordered processors applied left to right: the config list
// [remove_alphabet, line_shuffle] is line_shuffle(remove_alphabet(chain)).
class TransformPipeline {
 public:
  TransformPipeline() = default;
  TransformPipeline(std::vector<ProcessorSpec> steps, std::uint64_t run_seed)
      : steps_(std::move(steps)), run_seed_(run_seed) {}

  // Parses the pipeline DSL; see parse_pipeline_steps.
  static TransformPipeline parse(std::string_view dsl, std::uint64_t run_seed);

  const std::vector<ProcessorSpec>& steps() const { return steps_; }
  std::uint64_t run_seed() const { return run_seed_; }
  bool empty() const { return steps_.empty(); }

  // Canonical DSL; parse(to_dsl()) yields equal steps.
  std::string to_dsl() const;

  // Randomness for step i of a record is mix(run_seed, hash(record_id), i,
  // seed_salt), so every (record, step) pair gets an independent stream.
  std::uint64_t step_seed(std::string_view record_id, std::size_t index) const;

  std::string apply(std::string_view record_id, std::string_view chain,
                    std::string_view gold_answer) const;
  std::string apply(const ReasoningRecord& record) const {
    return apply(record.id, record.chain, record.gold_answer);
  }

 private:
  std::vector<ProcessorSpec> steps_;
  std::uint64_t run_seed_ = 0;
};

// DSL grammar:
//
//   pipeline := "" | "none" | step ("," step)*
//   step     := name [ "(" key "=" value ("," key "=" value)* ")" ]
//   value    := bare-text | '"' escaped-text '"'
//
// Names: token_shuffle, word_shuffle, line_shuffle, inline_word_shuffle,
// mask_alphabet, mask_digits, mask_answer, remove_alphabet, remove_answer,
// inject_noise, random_token, random_word (plus a few aliases).
// Keys: k, sentence, mask_char (a literal character or U+XXXX), vocab,
// scheme, salt. Throws kParse with the offending position.
std::vector<ProcessorSpec> parse_pipeline_steps(std::string_view dsl);

std::string step_to_dsl(const ProcessorSpec& spec);

// Applies one step. `rng` is only consumed by randomized steps.
std::string apply_step(const ProcessorSpec& spec, std::string_view chain,
                       std::string_view gold_answer, Rng& rng);

}  // namespace chainprobe
