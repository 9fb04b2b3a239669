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

// Model-free answer extractors that read the chain directly. They stand in
// for a model so whole runs can execute offline.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainprobe/modelio.hpp"

namespace chainprobe {

enum class ExtractorKind { kLastNumber, kMostFrequentNumber, kAfterAnchor };

const char* to_string(ExtractorKind k);

struct ExtractorStrategy {
  ExtractorKind kind = ExtractorKind::kLastNumber;
  // Case-sensitive; only used by kAfterAnchor, which needs at least one.
  std::vector<std::string> anchors = default_anchors();

  static std::vector<std::string> default_anchors();

  // "last_number", "most_frequent_number", "after_anchor", or
  // "after_anchor=<a1>|<a2>|..." for custom anchors. Throws kParse.
  static ExtractorStrategy parse(std::string_view id);
  // Inverse of parse; anchors are spelled out only when not the default.
  std::string id() const;
};

struct Extraction {
  std::optional<std::int64_t> value;
  // Ties broken, anchors missing, values out of range.
  std::string note;
};

// last_number: the final maximal digit run. most_frequent_number: the modal
// digit-run value, smallest value on ties. after_anchor: the first digit run
// after the last occurrence of any anchor. Runs compare by value, so "070"
// and "70" are the same candidate.
Extraction extract_detailed(std::string_view chain,
                            const ExtractorStrategy& strategy);

std::optional<std::int64_t> extract(std::string_view chain,
                                    const ExtractorStrategy& strategy);

// Answers from the chain section of the structured prompt: the extracted
// value in decimal, or "" when there is none (or no chain). Never fails.
class SurrogateBackend final : public Backend {
 public:
  explicit SurrogateBackend(ExtractorStrategy strategy);
  ModelResponse complete(const CompletionRequest& request,
                         const InferenceParams& params) override;
  std::string describe() const override;

  const ExtractorStrategy& strategy() const { return strategy_; }

 private:
  ExtractorStrategy strategy_;
};

}  // namespace chainprobe
