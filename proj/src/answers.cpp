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

#include "chainprobe/answers.hpp"

#include <algorithm>

namespace chainprobe {

namespace {

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool is_alnum(char32_t c) {
  const CharClass cls = classify_char(c);
  return cls == CharClass::kAlphabetic || cls == CharClass::kDigit;
}

}  // namespace

std::vector<Span> digit_runs(std::string_view text) {
  std::vector<Span> runs;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_ascii_digit(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && is_ascii_digit(text[i])) ++i;
    runs.push_back({start, i});
  }
  return runs;
}

std::vector<std::string> digit_run_values(std::string_view text) {
  return materialize(text, digit_runs(text));
}

std::string_view trim(std::string_view s) {
  const auto cps = decode_utf8(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && classify_char(cps[b].value) == CharClass::kWhitespace) ++b;
  while (e > b && classify_char(cps[e - 1].value) == CharClass::kWhitespace) {
    --e;
  }
  if (b == e) return {};
  return s.substr(cps[b].span.begin, cps[e - 1].span.end - cps[b].span.begin);
}

bool is_integer_answer(std::string_view answer) {
  const std::string_view t = trim(answer);
  return !t.empty() && std::all_of(t.begin(), t.end(), is_ascii_digit);
}

std::vector<Span> answer_occurrences(std::string_view text,
                                     std::string_view answer) {
  const std::string_view a = trim(answer);
  std::vector<Span> out;
  if (a.empty()) return out;

  if (is_integer_answer(a)) {
    for (const Span& run : digit_runs(text)) {
      if (run.view(text) == a) out.push_back(run);
    }
    return out;
  }

  const auto answer_cps = decode_utf8(a);
  const bool guard_left = is_alnum(answer_cps.front().value);
  const bool guard_right = is_alnum(answer_cps.back().value);
  const auto cps = decode_utf8(text);
  // Code point index keyed by byte offset, for neighbour lookups.
  std::vector<std::size_t> cp_at(text.size() + 1, 0);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    for (std::size_t b = cps[i].span.begin; b < cps[i].span.end; ++b) {
      cp_at[b] = i;
    }
  }
  cp_at[text.size()] = cps.size();

  std::size_t ci = 0;
  while (ci < cps.size()) {
    const std::size_t pos = cps[ci].span.begin;
    if (text.compare(pos, a.size(), a) != 0) {
      ++ci;
      continue;
    }
    const std::size_t end = pos + a.size();
    bool ok = end == text.size() || cps[cp_at[end]].span.begin == end;
    if (ok && guard_left && ci > 0 && is_alnum(cps[ci - 1].value)) ok = false;
    if (ok && guard_right && end < text.size() &&
        is_alnum(cps[cp_at[end]].value)) {
      ok = false;
    }
    if (!ok) {
      ++ci;
      continue;
    }
    out.push_back({pos, end});
    ci = cp_at[end];
  }
  return out;
}

std::size_t count_answer_occurrences(std::string_view text,
                                     std::string_view answer) {
  return answer_occurrences(text, answer).size();
}

std::size_t count_substring(std::string_view text, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace chainprobe
