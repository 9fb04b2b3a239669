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

#include "chainprobe/judging.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <vector>

#include "chainprobe/answers.hpp"

namespace chainprobe {

using nlohmann::json;

const char* to_string(JudgeMethod m) {
  switch (m) {
    case JudgeMethod::kNumeric: return "numeric";
    case JudgeMethod::kChoice: return "choice";
    case JudgeMethod::kExternal: return "external";
    case JudgeMethod::kCodeStub: return "code_stub";
  }
  return "numeric";
}

JudgeMethod parse_judge_method(std::string_view s) {
  if (s == "numeric") return JudgeMethod::kNumeric;
  if (s == "choice") return JudgeMethod::kChoice;
  if (s == "external") return JudgeMethod::kExternal;
  if (s == "code_stub") return JudgeMethod::kCodeStub;
  throw parse_error("unknown judge method '" + std::string(s) + "'");
}

const char* to_string(ExtractionRule r) {
  return r == ExtractionRule::kLast ? "last" : "first_after_prefix";
}

ExtractionRule parse_extraction_rule(std::string_view s) {
  if (s == "last") return ExtractionRule::kLast;
  if (s == "first_after_prefix") return ExtractionRule::kFirstAfterPrefix;
  throw parse_error("unknown extraction rule '" + std::string(s) + "'");
}

json to_json(const Verdict& v) {
  return json{{"correct", v.correct},
              {"extracted", v.extracted ? json(*v.extracted) : json(nullptr)},
              {"method", to_string(v.method)},
              {"note", v.note}};
}

Verdict verdict_from_json(const json& j) {
  Verdict v;
  v.correct = j.at("correct").get<bool>();
  if (j.contains("extracted") && j["extracted"].is_string()) {
    v.extracted = j["extracted"].get<std::string>();
  }
  v.method = parse_judge_method(j.at("method").get<std::string>());
  v.note = j.value("note", "");
  return v;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum_byte(char c) {
  // Non-ASCII bytes are treated as word characters so that letters in other
  // scripts never look like a boundary.
  return is_digit(c) || is_alpha(c) || static_cast<unsigned char>(c) >= 0x80;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// End offset of the last answer anchor, or npos.
std::size_t anchor_end(std::string_view text) {
  static constexpr std::array<std::string_view, 2> kAnchors = {"answer is",
                                                               "answer:"};
  const std::string low = lower(text);
  std::size_t best = std::string::npos;
  std::size_t best_start = 0;
  for (std::string_view a : kAnchors) {
    const std::size_t p = low.rfind(a);
    if (p == std::string::npos) continue;
    if (best == std::string::npos || p > best_start) {
      best_start = p;
      best = p + a.size();
    }
  }
  return best;
}

template <typename Candidate>
std::optional<Candidate> pick(const std::vector<std::pair<std::size_t, Candidate>>& found,
                              std::string_view text, const JudgeContext& ctx) {
  if (found.empty()) return std::nullopt;
  if (ctx.rule == ExtractionRule::kFirstAfterPrefix) {
    const std::size_t a = anchor_end(text);
    if (a != std::string::npos) {
      for (const auto& [pos, value] : found) {
        if (pos >= a) return value;
      }
    } else if (ctx.follows_prefix) {
      return found.front().second;
    }
  }
  return found.back().second;
}

// Replaces \boxed{X} by X, drops '$', and removes thousands separators.
// Returns the cleaned text; offsets refer to the cleaned text.
std::string strip_formatting(std::string_view in) {
  std::string s;
  s.reserve(in.size());
  static constexpr std::string_view kBoxed = "\\boxed{";
  std::vector<int> depth_is_box;  // per open brace: 1 if from \boxed
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in.compare(i, kBoxed.size(), kBoxed) == 0) {
      depth_is_box.push_back(1);
      i += kBoxed.size() - 1;
      continue;
    }
    const char c = in[i];
    if (c == '{') {
      depth_is_box.push_back(0);
    } else if (c == '}' && !depth_is_box.empty()) {
      const int box = depth_is_box.back();
      depth_is_box.pop_back();
      if (box) continue;
    }
    if (c == '$') continue;
    s.push_back(c);
  }

  // Thousands separators: 1-3 digits, then groups of ",ddd", not part of a
  // longer comma list.
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i]) || (i > 0 && (is_digit(s[i - 1]) || s[i - 1] == ','))) {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    std::size_t end = j;
    std::size_t groups = 0;
    if (j - i <= 3) {
      while (end + 4 <= s.size() && s[end] == ',' && is_digit(s[end + 1]) &&
             is_digit(s[end + 2]) && is_digit(s[end + 3]) &&
             (end + 4 == s.size() || !is_digit(s[end + 4]))) {
        end += 4;
        ++groups;
      }
      if (end + 1 < s.size() && s[end] == ',' && is_digit(s[end + 1])) {
        groups = 0;  // "1,234,56" or "12,345,6": a list, not a number
      }
    }
    if (groups == 0) end = j;
    for (std::size_t k = i; k < end; ++k) {
      if (s[k] != ',') out.push_back(s[k]);
    }
    i = end;
  }
  return out;
}

std::string normalize_integer(std::string_view digits, bool negative) {
  std::size_t nz = 0;
  while (nz + 1 < digits.size() && digits[nz] == '0') ++nz;
  std::string out(digits.substr(nz));
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

}  // namespace

std::optional<std::string> extract_integer(std::string_view response,
                                           const JudgeContext& ctx) {
  const std::string text = strip_formatting(response);
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const Span& run : digit_runs(text)) {
    bool negative = false;
    std::size_t start = run.begin;
    if (run.begin > 0 && (text[run.begin - 1] == '-')) {
      const std::size_t m = run.begin - 1;
      const char before = m > 0 ? text[m - 1] : ' ';
      if (!is_alnum_byte(before) && before != ')' && before != ']' &&
          before != '}' && before != '_') {
        negative = true;
        start = m;
      }
    }
    found.emplace_back(start, normalize_integer(run.view(text), negative));
  }
  return pick(found, text, ctx);
}

std::optional<char> extract_choice(std::string_view response,
                                   const JudgeContext& ctx) {
  std::vector<std::pair<std::size_t, char>> found;
  const std::string low = lower(response);
  for (std::size_t i = 0; i < response.size(); ++i) {
    const char c = response[i];
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up < 'A' || up > 'D') continue;
    const bool left_free = i == 0 || !is_alnum_byte(response[i - 1]);
    const bool right_free = i + 1 == response.size() || !is_alnum_byte(response[i + 1]);
    if (!left_free || !right_free) continue;
    if (c != up) {
      const bool parens = i > 0 && response[i - 1] == '(' &&
                          i + 1 < response.size() && response[i + 1] == ')';
      std::size_t k = i;
      while (k > 0 && (response[k - 1] == ' ')) --k;
      const std::string_view before = std::string_view(low).substr(0, k);
      const bool keyword = before.ends_with("option") || before.ends_with("choice");
      if (!parens && !keyword) continue;
    }
    found.emplace_back(i, up);
  }
  return pick(found, response, ctx);
}

Verdict judge_numeric(std::string_view response, int gold,
                      const JudgeContext& ctx) {
  if (gold < 0 || gold > 999) {
    throw invalid_argument("numeric gold answer must be in [0, 999], got " +
                           std::to_string(gold));
  }
  Verdict v;
  v.method = JudgeMethod::kNumeric;
  v.extracted = extract_integer(response, ctx);
  v.correct = v.extracted && *v.extracted == std::to_string(gold);
  if (!v.extracted) v.note = "no number found";
  return v;
}

Verdict judge_numeric(std::string_view response, std::string_view gold,
                      const JudgeContext& ctx) {
  const std::string_view g = trim(gold);
  if (!is_integer_answer(g) || g.size() > 3) {
    throw invalid_argument("numeric gold answer must be an integer in [0, 999], got '" +
                           std::string(gold) + "'");
  }
  return judge_numeric(response, std::stoi(std::string(g)), ctx);
}

Verdict judge_choice(std::string_view response, char gold,
                     const JudgeContext& ctx) {
  const char g = static_cast<char>(std::toupper(static_cast<unsigned char>(gold)));
  if (g < 'A' || g > 'D') {
    throw invalid_argument(std::string("choice gold answer must be A-D, got '") +
                           gold + "'");
  }
  Verdict v;
  v.method = JudgeMethod::kChoice;
  if (const auto c = extract_choice(response, ctx)) {
    v.extracted = std::string(1, *c);
    v.correct = *c == g;
  } else {
    v.note = "no option found";
  }
  return v;
}

Verdict judge_choice(std::string_view response, std::string_view gold,
                     const JudgeContext& ctx) {
  std::string_view g = trim(gold);
  if (g.size() == 3 && g.front() == '(' && g.back() == ')') g = g.substr(1, 1);
  if (g.size() != 1) {
    throw invalid_argument("choice gold answer must be one letter, got '" +
                           std::string(gold) + "'");
  }
  return judge_choice(response, g.front(), ctx);
}

std::optional<std::string> extract_code(std::string_view response) {
  static constexpr std::string_view kFence = "```";
  std::string_view body = response;
  const std::size_t open = response.find(kFence);
  if (open != std::string_view::npos) {
    // A bare first fence after some code closes a block the prompt opened;
    // a fence with a language tag, or one at the start, opens a new block.
    const std::size_t eol = response.find('\n', open);
    const std::string_view tag = trim(response.substr(
        open + kFence.size(),
        eol == std::string_view::npos ? std::string_view::npos
                                      : eol - open - kFence.size()));
    const bool inside = tag.empty() && !trim(response.substr(0, open)).empty();
    if (inside) {
      body = response.substr(0, open);
    } else {
      const std::size_t nl = response.find('\n', open);
      if (nl == std::string_view::npos) return std::nullopt;
      const std::size_t close = response.find(kFence, nl + 1);
      body = response.substr(nl + 1, close == std::string_view::npos
                                          ? std::string_view::npos
                                          : close - nl - 1);
    }
  }
  if (trim(body).empty()) return std::nullopt;
  return std::string(body);
}

Verdict judge_code(std::string_view response, const ReasoningRecord& record,
                   const CodeRunner& runner) {
  Verdict v;
  v.method = JudgeMethod::kCodeStub;
  v.extracted = extract_code(response);
  if (!v.extracted) {
    v.note = "no code found";
    return v;
  }
  if (!runner) {
    v.note = "code not executed";
    return v;
  }
  const auto passed = runner(*v.extracted, record);
  if (!passed) {
    v.note = "runner undecided";
    return v;
  }
  v.correct = *passed;
  v.note = *passed ? "tests passed" : "tests failed";
  return v;
}

Verdict judge_local(const ReasoningRecord& record, std::string_view response,
                    const JudgeContext& ctx, const CodeRunner& runner) {
  switch (record.benchmark) {
    case Benchmark::kMathInteger:
      return judge_numeric(response, record.gold_answer, ctx);
    case Benchmark::kMultipleChoice:
      return judge_choice(response, record.gold_answer, ctx);
    case Benchmark::kCode:
      return judge_code(response, record, runner);
  }
  return {};
}

std::string render_judge_prompt(std::string_view tmpl, std::string_view gold,
                                std::string_view response) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string_view slot = tmpl.substr(open + 2, close - open - 2);
    if (slot == "gold") {
      out.append(gold);
    } else if (slot == "response") {
      out.append(response);
    } else {
      throw parse_error("judge template: unknown slot '" + std::string(slot) + "'");
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

std::optional<bool> parse_judge_reply(std::string_view reply) {
  std::string word;
  for (char c : trim(reply)) {
    if (is_alpha(c)) {
      word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    } else if (!word.empty()) {
      break;
    } else if (c != '*' && c != '"' && c != '\'' && c != '`') {
      return std::nullopt;
    }
  }
  if (word == "YES" || word == "CORRECT" || word == "TRUE") return true;
  if (word == "NO" || word == "INCORRECT" || word == "FALSE") return false;
  return std::nullopt;
}

Verdict judge_external(const ReasoningRecord& record,
                       std::string_view response, const ExternalJudge& judge,
                       const JudgeContext& ctx) {
  if (judge.backend == nullptr) {
    throw invalid_argument("external judge has no backend");
  }
  CompletionRequest req;
  req.rendered =
      render_judge_prompt(judge.prompt_template, record.gold_answer, response);
  const ModelResponse r = judge.backend->complete(req, judge.params);
  if (!r.ok()) {
    throw JudgmentUnavailable(std::string(to_string(r.status)) +
                              (r.error.empty() ? "" : ": " + r.error));
  }
  const auto decision = parse_judge_reply(*r.text);
  if (!decision) {
    Verdict v = judge_local(record, response, ctx);
    v.note = "external judge reply unparseable; local fallback" +
             (v.note.empty() ? std::string() : "; " + v.note);
    return v;
  }
  Verdict local = judge_local(record, response, ctx);
  Verdict v;
  v.method = JudgeMethod::kExternal;
  v.correct = *decision;
  v.extracted = local.extracted;
  if (v.correct && !v.extracted) v.extracted = std::string(trim(response));
  v.note = "judge: " + std::string(trim(*r.text)).substr(0, 40);
  return v;
}

}  // namespace chainprobe
