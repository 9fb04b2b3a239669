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

// Chain-level perturbations. Every function is pure given its inputs and
// the state of the Rng it is handed.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "chainprobe/rng.hpp"
#include "chainprobe/segmentation.hpp"

namespace chainprobe {

enum class ShuffleGranularity { kToken, kWord, kLine, kInlineWord };
enum class MaskTarget { kAlphabet, kDigits, kAnswer };
enum class RemoveTarget { kAlphabet, kAnswer };
enum class RandomUnit { kToken, kWord };

inline constexpr char32_t kDefaultMaskChar = U'■';
inline constexpr std::string_view kDefaultFalseSentence = "Thus answer: 123.";

// Fisher-Yates over the segments at `granularity`. Token and word segments
// are rejoined with one space, lines with '\n'. kInlineWord shuffles each
// line's words independently and keeps line order.
std::string shuffle(std::string_view chain, ShuffleGranularity granularity,
                    Rng& rng, std::string_view scheme = kDefaultScheme);

// Per-code-point replacement; kAnswer replaces every code point of every
// answer occurrence (see answer_occurrences). Throws kInvalidArgument for
// kAnswer with an empty answer.
std::string mask(std::string_view chain, MaskTarget target,
                 std::string_view answer = {},
                 char32_t mask_char = kDefaultMaskChar);

// Deletes letters, or answer occurrences. Everything else is kept verbatim.
std::string remove(std::string_view chain, RemoveTarget target,
                   std::string_view answer = {});

// Replaces every unit with an i.i.d. sample and joins with single spaces.
//
// Token mode samples uniformly from `vocab`, or from the chain's distinct
// tokens when no vocabulary is given; an explicitly empty vocabulary throws.
// Word mode samples from the chain's own word-frequency distribution, or
// from `vocab` treated as a weighted bag (duplicates count) when given.
std::string randomize(std::string_view chain, RandomUnit unit, Rng& rng,
                      std::optional<std::span<const std::string>> vocab =
                          std::nullopt,
                      std::string_view scheme = kDefaultScheme);

// Counts c answer occurrences and inserts k*c copies of `false_sentence`,
// each on its own line. The output has L + k*c lines (L = input lines); the
// noise slots are a uniform random subset of those positions and original
// lines fill the rest in order.
std::string inject_noise(std::string_view chain, std::string_view answer,
                         std::uint32_t k, Rng& rng,
                         std::string_view false_sentence =
                             kDefaultFalseSentence);

}  // namespace chainprobe
