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

#include "chainprobe/processors.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include "chainprobe/answers.hpp"
#include "chainprobe/error.hpp"

namespace chainprobe {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size() + sep.size();
  out.reserve(total);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<std::string> shuffled(std::vector<std::string> parts, Rng& rng) {
  fisher_yates(parts, rng);
  return parts;
}

void require_answer(std::string_view answer, const char* op) {
  if (trim(answer).empty()) {
    throw invalid_argument(std::string(op) + " requires a nonempty answer");
  }
}

}  // namespace

std::string shuffle(std::string_view chain, ShuffleGranularity granularity,
                    Rng& rng, std::string_view scheme) {
  switch (granularity) {
    case ShuffleGranularity::kToken:
      return join(shuffled(tokenize_subwords(chain, scheme), rng), " ");
    case ShuffleGranularity::kWord:
      return join(shuffled(split_words(chain), rng), " ");
    case ShuffleGranularity::kLine:
      return join(shuffled(split_lines(chain), rng), "\n");
    case ShuffleGranularity::kInlineWord: {
      std::vector<std::string> lines = split_lines(chain);
      for (auto& line : lines) {
        line = join(shuffled(split_words(line), rng), " ");
      }
      return join(lines, "\n");
    }
  }
  return std::string(chain);
}

std::string mask(std::string_view chain, MaskTarget target,
                 std::string_view answer, char32_t mask_char) {
  std::string masked;
  append_utf8(masked, mask_char);
  std::string out;
  out.reserve(chain.size() * 2);

  if (target == MaskTarget::kAnswer) {
    require_answer(answer, "mask(answer)");
    std::size_t pos = 0;
    for (const Span& occ : answer_occurrences(chain, answer)) {
      out.append(chain.substr(pos, occ.begin - pos));
      const std::size_t n = decode_utf8(occ.view(chain)).size();
      for (std::size_t i = 0; i < n; ++i) out.append(masked);
      pos = occ.end;
    }
    out.append(chain.substr(pos));
    return out;
  }

  const CharClass hit = target == MaskTarget::kAlphabet ? CharClass::kAlphabetic
                                                        : CharClass::kDigit;
  for (const CodePoint& cp : decode_utf8(chain)) {
    if (classify_char(cp.value) == hit) {
      out.append(masked);
    } else {
      out.append(cp.span.view(chain));
    }
  }
  return out;
}

std::string remove(std::string_view chain, RemoveTarget target,
                   std::string_view answer) {
  std::string out;
  out.reserve(chain.size());
  if (target == RemoveTarget::kAnswer) {
    require_answer(answer, "remove(answer)");
    std::size_t pos = 0;
    for (const Span& occ : answer_occurrences(chain, answer)) {
      out.append(chain.substr(pos, occ.begin - pos));
      pos = occ.end;
    }
    out.append(chain.substr(pos));
    return out;
  }
  for (const CodePoint& cp : decode_utf8(chain)) {
    if (classify_char(cp.value) != CharClass::kAlphabetic) {
      out.append(cp.span.view(chain));
    }
  }
  return out;
}

std::string randomize(std::string_view chain, RandomUnit unit, Rng& rng,
                      std::optional<std::span<const std::string>> vocab,
                      std::string_view scheme) {
  if (vocab && vocab->empty()) {
    throw invalid_argument("randomize: vocabulary is empty");
  }
  const std::vector<std::string> units = unit == RandomUnit::kToken
                                             ? tokenize_subwords(chain, scheme)
                                             : split_words(chain);
  if (units.empty()) return {};

  std::vector<std::string> pool;
  if (vocab) {
    pool.assign(vocab->begin(), vocab->end());
  } else if (unit == RandomUnit::kToken) {
    // Uniform over distinct tokens; sorted so the draw is reproducible.
    const std::set<std::string> distinct(units.begin(), units.end());
    pool.assign(distinct.begin(), distinct.end());
  } else {
    // Uniform over occurrences == sampling from the word-frequency
    // distribution of the chain.
    pool = units;
  }

  std::vector<std::string> out;
  out.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    out.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
  }
  return join(out, " ");
}

std::string inject_noise(std::string_view chain, std::string_view answer,
                         std::uint32_t k, Rng& rng,
                         std::string_view false_sentence) {
  require_answer(answer, "inject_noise");
  if (false_sentence.empty()) {
    throw invalid_argument("inject_noise: false sentence is empty");
  }
  if (false_sentence.find('\n') != std::string_view::npos) {
    throw invalid_argument("inject_noise: false sentence contains a newline");
  }
  const std::size_t inserts =
      static_cast<std::size_t>(k) * count_answer_occurrences(chain, answer);
  if (inserts == 0) return std::string(chain);

  const std::vector<std::string> lines = split_lines(chain);
  const std::size_t total = lines.size() + inserts;

  // Partial Fisher-Yates picks `inserts` distinct slots out of `total`.
  std::vector<std::size_t> slots(total);
  for (std::size_t i = 0; i < total; ++i) slots[i] = i;
  for (std::size_t i = 0; i < inserts; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(slots[i], slots[j]);
  }
  std::vector<bool> is_noise(total, false);
  for (std::size_t i = 0; i < inserts; ++i) is_noise[slots[i]] = true;

  std::vector<std::string> out;
  out.reserve(total);
  std::size_t next_line = 0;
  for (std::size_t i = 0; i < total; ++i) {
    if (is_noise[i]) {
      out.emplace_back(false_sentence);
    } else {
      out.push_back(lines[next_line++]);
    }
  }
  return join(out, "\n");
}

}  // namespace chainprobe
