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
#include <string>
#include <string_view>
#include <vector>

#include "chainprobe/segmentation.hpp"

namespace chainprobe {

// Maximal runs of ASCII digits, in order.
std::vector<Span> digit_runs(std::string_view text);

std::vector<std::string> digit_run_values(std::string_view text);

std::string_view trim(std::string_view s);

// True when the trimmed answer is a nonempty string of ASCII digits.
bool is_integer_answer(std::string_view answer);

// Non-overlapping occurrences of `answer` in `text`, left to right.
//
// Integer answers match whole maximal digit runs only, so "70" never matches
// inside "170" or "700". Any other answer (option letters, free text) must
// match exactly and may not be glued to a letter or digit on a side where
// the answer itself starts or ends with one.
std::vector<Span> answer_occurrences(std::string_view text,
                                     std::string_view answer);

std::size_t count_answer_occurrences(std::string_view text,
                                     std::string_view answer);

// Non-overlapping substring count.
std::size_t count_substring(std::string_view text, std::string_view needle);

}  // namespace chainprobe
