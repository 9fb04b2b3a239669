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

#include "chainprobe/pipeline.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <memory>
#include <utility>

#include "chainprobe/answers.hpp"

namespace chainprobe {

namespace {

struct StepInfo {
  Step step;
  std::string_view name;
};

constexpr std::array<StepInfo, 12> kSteps = {{
    {Step::kTokenShuffle, "token_shuffle"},
    {Step::kWordShuffle, "word_shuffle"},
    {Step::kLineShuffle, "line_shuffle"},
    {Step::kInlineWordShuffle, "inline_word_shuffle"},
    {Step::kMaskAlphabet, "mask_alphabet"},
    {Step::kMaskDigits, "mask_digits"},
    {Step::kMaskAnswer, "mask_answer"},
    {Step::kRemoveAlphabet, "remove_alphabet"},
    {Step::kRemoveAnswer, "remove_answer"},
    {Step::kInjectNoise, "inject_noise"},
    {Step::kRandomToken, "random_token"},
    {Step::kRandomWord, "random_word"},
}};

constexpr std::array<std::pair<std::string_view, Step>, 6> kAliases = {{
    {"tok_shuffle", Step::kTokenShuffle},
    {"ilw_shuffle", Step::kInlineWordShuffle},
    {"mask_number", Step::kMaskDigits},
    {"mask_numbers", Step::kMaskDigits},
    {"noise", Step::kInjectNoise},
    {"random_tok", Step::kRandomToken},
}};

std::optional<Step> lookup_step(std::string_view name) {
  for (const auto& s : kSteps) {
    if (s.name == name) return s.step;
  }
  for (const auto& [alias, step] : kAliases) {
    if (alias == name) return step;
  }
  return std::nullopt;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

class DslParser {
 public:
  explicit DslParser(std::string_view text) : text_(text) {}

  std::vector<ProcessorSpec> parse() {
    std::vector<ProcessorSpec> steps;
    skip_space();
    if (at_end()) return steps;
    if (rest_is("none")) return steps;
    while (true) {
      steps.push_back(parse_step());
      skip_space();
      if (at_end()) break;
      expect(',');
    }
    return steps;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }

  bool rest_is(std::string_view word) const {
    std::string_view rest = text_.substr(pos_);
    while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
    return rest == word;
  }

  void skip_space() {
    while (!at_end() && is_space(text_[pos_])) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw parse_error("pipeline DSL at offset " + std::to_string(pos_) + ": " +
                      what + " in \"" + std::string(text_) + "\"");
  }

  void expect(char c) {
    skip_space();
    if (at_end() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  std::string_view identifier() {
    skip_space();
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a name");
    return text_.substr(start, pos_ - start);
  }

  std::string value() {
    skip_space();
    std::string out;
    if (!at_end() && text_[pos_] == '"') {
      ++pos_;
      while (true) {
        if (at_end()) fail("unterminated string");
        char c = text_[pos_++];
        if (c == '"') break;
        if (c == '\\') {
          if (at_end()) fail("dangling escape");
          c = text_[pos_++];
          if (c == 'n') c = '\n';
        }
        out.push_back(c);
      }
      return out;
    }
    while (!at_end() && text_[pos_] != ',' && text_[pos_] != ')') {
      out.push_back(text_[pos_++]);
    }
    while (!out.empty() && is_space(out.back())) out.pop_back();
    if (out.empty()) fail("expected a value");
    return out;
  }

  std::uint64_t unsigned_value(std::string_view key, const std::string& v) {
    std::uint64_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size()) {
      fail("'" + std::string(key) + "' needs a nonnegative integer, got '" +
           v + "'");
    }
    return n;
  }

  char32_t char_value(const std::string& v) {
    if (v.size() > 2 && (v[0] == 'U' || v[0] == 'u') && v[1] == '+') {
      std::uint32_t cp = 0;
      auto [p, ec] = std::from_chars(v.data() + 2, v.data() + v.size(), cp, 16);
      if (ec != std::errc() || p != v.data() + v.size() || cp > 0x10FFFF) {
        fail("bad code point '" + v + "'");
      }
      return cp;
    }
    const auto cps = decode_utf8(v);
    if (cps.size() != 1) fail("mask_char must be one character, got '" + v + "'");
    return cps.front().value;
  }

  ProcessorSpec parse_step() {
    const std::size_t name_pos = pos_;
    const std::string_view name = identifier();
    const auto step = lookup_step(name);
    if (!step) {
      pos_ = name_pos;
      fail("unknown step '" + std::string(name) + "'");
    }
    ProcessorSpec spec;
    spec.step = *step;
    skip_space();
    if (at_end() || text_[pos_] != '(') return spec;
    ++pos_;
    skip_space();
    if (!at_end() && text_[pos_] == ')') {
      ++pos_;
      return spec;
    }
    while (true) {
      const std::string_view key = identifier();
      expect('=');
      const std::string v = value();
      apply_param(spec, key, v);
      skip_space();
      if (!at_end() && text_[pos_] == ')') {
        ++pos_;
        break;
      }
      expect(',');
    }
    return spec;
  }

  void apply_param(ProcessorSpec& spec, std::string_view key,
                   const std::string& v) {
    const Step s = spec.step;
    auto only_for = [&](bool ok) {
      if (!ok) {
        fail("step '" + std::string(step_name(s)) + "' takes no '" +
             std::string(key) + "' parameter");
      }
    };
    if (key == "salt") {
      spec.seed_salt = unsigned_value(key, v);
    } else if (key == "k") {
      only_for(s == Step::kInjectNoise);
      const std::uint64_t k = unsigned_value(key, v);
      if (k > 1000) fail("noise multiplier too large");
      spec.params.noise_multiplier = static_cast<std::uint32_t>(k);
    } else if (key == "sentence") {
      only_for(s == Step::kInjectNoise);
      spec.params.false_answer = v;
    } else if (key == "mask_char" || key == "char") {
      only_for(kind_of(s) == ProcessorKind::kMask);
      spec.params.mask_char = char_value(v);
    } else if (key == "vocab") {
      only_for(kind_of(s) == ProcessorKind::kRandomize);
      spec.params.vocab_id = v;
    } else if (key == "scheme") {
      only_for(s == Step::kTokenShuffle || s == Step::kRandomToken);
      spec.params.scheme = v;
    } else {
      fail("unknown parameter '" + std::string(key) + "'");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string quote_if_needed(const std::string& v) {
  bool plain = !v.empty();
  for (char c : v) {
    if (c == ',' || c == ')' || c == '(' || c == '"' || c == '\\' ||
        is_space(c)) {
      plain = false;
    }
  }
  if (plain) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::optional<std::span<const std::string>> vocabulary_for(
    const ProcessorSpec& spec) {
  if (!spec.params.vocab_id) return std::nullopt;
  const auto scheme = SchemeRegistry::global().get(*spec.params.vocab_id);
  const auto* vocab = dynamic_cast<const VocabularyScheme*>(scheme.get());
  if (vocab == nullptr) {
    throw invalid_argument("'" + *spec.params.vocab_id +
                           "' is not a vocabulary scheme");
  }
  return std::span<const std::string>(vocab->vocabulary());
}

}  // namespace

ProcessorKind kind_of(Step step) {
  switch (step) {
    case Step::kTokenShuffle:
    case Step::kWordShuffle:
    case Step::kLineShuffle:
    case Step::kInlineWordShuffle:
      return ProcessorKind::kShuffle;
    case Step::kMaskAlphabet:
    case Step::kMaskDigits:
    case Step::kMaskAnswer:
      return ProcessorKind::kMask;
    case Step::kRemoveAlphabet:
    case Step::kRemoveAnswer:
      return ProcessorKind::kRemove;
    case Step::kInjectNoise:
      return ProcessorKind::kInjectNoise;
    case Step::kRandomToken:
    case Step::kRandomWord:
      return ProcessorKind::kRandomize;
  }
  return ProcessorKind::kShuffle;
}

std::string_view step_name(Step step) {
  for (const auto& s : kSteps) {
    if (s.step == step) return s.name;
  }
  return "?";
}

bool needs_answer(Step step) {
  return step == Step::kMaskAnswer || step == Step::kRemoveAnswer ||
         step == Step::kInjectNoise;
}

StepError::StepError(std::size_t step_index, const Error& cause)
    : Error(cause.code(),
            "step " + std::to_string(step_index) + ": " + cause.what()),
      step_index_(step_index) {}

std::vector<ProcessorSpec> parse_pipeline_steps(std::string_view dsl) {
  return DslParser(dsl).parse();
}

std::string step_to_dsl(const ProcessorSpec& spec) {
  static const ProcessorParams kDefaults;
  std::vector<std::string> params;
  const auto& p = spec.params;
  if (spec.step == Step::kInjectNoise) {
    params.push_back("k=" + std::to_string(p.noise_multiplier));
    if (p.false_answer != kDefaults.false_answer) {
      params.push_back("sentence=" + quote_if_needed(p.false_answer));
    }
  }
  if (kind_of(spec.step) == ProcessorKind::kMask &&
      p.mask_char != kDefaults.mask_char) {
    std::string c;
    append_utf8(c, p.mask_char);
    params.push_back("mask_char=" + quote_if_needed(c));
  }
  if (p.vocab_id) params.push_back("vocab=" + quote_if_needed(*p.vocab_id));
  if (p.scheme != kDefaults.scheme) {
    params.push_back("scheme=" + quote_if_needed(p.scheme));
  }
  if (spec.seed_salt != 0) {
    params.push_back("salt=" + std::to_string(spec.seed_salt));
  }
  std::string out(step_name(spec.step));
  if (!params.empty()) {
    out += '(';
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i != 0) out += ',';
      out += params[i];
    }
    out += ')';
  }
  return out;
}

std::string apply_step(const ProcessorSpec& spec, std::string_view chain,
                       std::string_view gold_answer, Rng& rng) {
  const auto& p = spec.params;
  switch (spec.step) {
    case Step::kTokenShuffle:
      return shuffle(chain, ShuffleGranularity::kToken, rng, p.scheme);
    case Step::kWordShuffle:
      return shuffle(chain, ShuffleGranularity::kWord, rng);
    case Step::kLineShuffle:
      return shuffle(chain, ShuffleGranularity::kLine, rng);
    case Step::kInlineWordShuffle:
      return shuffle(chain, ShuffleGranularity::kInlineWord, rng);
    case Step::kMaskAlphabet:
      return mask(chain, MaskTarget::kAlphabet, {}, p.mask_char);
    case Step::kMaskDigits:
      return mask(chain, MaskTarget::kDigits, {}, p.mask_char);
    case Step::kMaskAnswer:
      return mask(chain, MaskTarget::kAnswer, gold_answer, p.mask_char);
    case Step::kRemoveAlphabet:
      return remove(chain, RemoveTarget::kAlphabet);
    case Step::kRemoveAnswer:
      return remove(chain, RemoveTarget::kAnswer, gold_answer);
    case Step::kInjectNoise:
      return inject_noise(chain, gold_answer, p.noise_multiplier, rng,
                          p.false_answer);
    case Step::kRandomToken:
      return randomize(chain, RandomUnit::kToken, rng, vocabulary_for(spec),
                       p.scheme);
    case Step::kRandomWord:
      return randomize(chain, RandomUnit::kWord, rng, vocabulary_for(spec));
  }
  return std::string(chain);
}

TransformPipeline TransformPipeline::parse(std::string_view dsl,
                                           std::uint64_t run_seed) {
  return TransformPipeline(parse_pipeline_steps(dsl), run_seed);
}

std::string TransformPipeline::to_dsl() const {
  std::string out;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (i != 0) out += ',';
    out += step_to_dsl(steps_[i]);
  }
  return out;
}

std::uint64_t TransformPipeline::step_seed(std::string_view record_id,
                                           std::size_t index) const {
  return mix_seed({run_seed_, fnv1a64(record_id),
                   static_cast<std::uint64_t>(index), steps_[index].seed_salt});
}

std::string TransformPipeline::apply(std::string_view record_id,
                                     std::string_view chain,
                                     std::string_view gold_answer) const {
  std::string current(chain);
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    Rng rng(step_seed(record_id, i));
    try {
      if (needs_answer(steps_[i].step) && trim(gold_answer).empty()) {
        throw invalid_argument(std::string(step_name(steps_[i].step)) +
                               " requires a gold answer");
      }
      current = apply_step(steps_[i], current, gold_answer, rng);
    } catch (const StepError&) {
      throw;
    } catch (const Error& e) {
      throw StepError(i, e);
    }
  }
  return current;
}

}  // namespace chainprobe
