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

#include "chainprobe/prompting.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "chainprobe/error.hpp"

namespace chainprobe {

const char* to_string(EvalMode m) { return m == EvalMode::kGen ? "gen" : "ret"; }

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "gen") return EvalMode::kGen;
  if (s == "ret") return EvalMode::kRet;
  throw parse_error("unknown evaluation mode '" + std::string(s) +
                    "' (expected gen or ret)");
}

std::string_view ret_prefix(Benchmark b) {
  return b == Benchmark::kCode ? kCodePrefix : kAnswerPrefix;
}

namespace {

enum class Slot { kQuestion, kChain, kPrefix };
enum class Section { kQuestion, kChain, kRet };

struct Tag {
  std::size_t begin;
  std::size_t end;
  char sigil;  // 0, '#', '/'
  std::string name;
};

// Scans `text` for {{...}} tags.
std::vector<Tag> scan_tags(const std::string& text) {
  std::vector<Tag> tags;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string::npos) {
    const std::size_t close = text.find("}}", pos + 2);
    if (close == std::string::npos) {
      throw parse_error("prompt template: unterminated '{{' at offset " +
                        std::to_string(pos));
    }
    std::string body = text.substr(pos + 2, close - pos - 2);
    char sigil = 0;
    if (!body.empty() && (body[0] == '#' || body[0] == '/')) {
      sigil = body[0];
      body.erase(0, 1);
    }
    tags.push_back({pos, close + 2, sigil, body});
    pos = close + 2;
  }
  return tags;
}

bool section_enabled(const std::string& name, const EvalPrompt& p) {
  if (name == "question") return p.question.has_value();
  if (name == "chain") return p.chain.has_value();
  return p.mode == EvalMode::kRet;
}

void validate(const std::string& text) {
  std::string open;
  for (const Tag& t : scan_tags(text)) {
    if (t.sigil == 0) {
      if (t.name != "question" && t.name != "chain" && t.name != "prefix") {
        throw parse_error("prompt template: unknown slot '" + t.name + "'");
      }
    } else {
      if (t.name != "question" && t.name != "chain" && t.name != "ret") {
        throw parse_error("prompt template: unknown section '" + t.name + "'");
      }
      if (t.sigil == '#') {
        if (!open.empty()) throw parse_error("prompt template: nested section");
        open = t.name;
      } else {
        if (open != t.name) {
          throw parse_error("prompt template: unbalanced section '" + t.name +
                            "'");
        }
        open.clear();
      }
    }
  }
  if (!open.empty()) {
    throw parse_error("prompt template: unclosed section '" + open + "'");
  }
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  validate(text_);
}

PromptTemplate PromptTemplate::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open prompt template " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return PromptTemplate(ss.str());
}

std::string EvalPrompt::render() const {
  std::vector<std::string_view> parts;
  if (question) parts.push_back(*question);
  if (chain) parts.push_back(*chain);
  if (mode == EvalMode::kRet) parts.push_back(prefix);
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out.append(kSectionSeparator);
    out.append(parts[i]);
  }
  return out;
}

std::string EvalPrompt::render(const PromptTemplate& tmpl) const {
  const std::string& text = tmpl.text();
  std::string out;
  bool skipping = false;
  std::size_t pos = 0;
  for (const Tag& t : scan_tags(text)) {
    if (!skipping) out.append(text, pos, t.begin - pos);
    pos = t.end;
    if (t.sigil == '#') {
      skipping = !section_enabled(t.name, *this);
    } else if (t.sigil == '/') {
      skipping = false;
    } else if (!skipping) {
      if (t.name == "question" && question) out.append(*question);
      if (t.name == "chain" && chain) out.append(*chain);
      if (t.name == "prefix") out.append(prefix);
    }
  }
  out.append(text, pos, std::string::npos);
  if (mode == EvalMode::kRet &&
      (out.size() < prefix.size() ||
       out.compare(out.size() - prefix.size(), prefix.size(), prefix) != 0)) {
    throw invalid_argument(
        "prompt template does not end with the extraction prefix in ret mode");
  }
  return out;
}

EvalPrompt build_prompt(const ReasoningRecord& record,
                        const std::optional<std::string>& chain, EvalMode mode,
                        bool include_question, bool include_chain) {
  if (include_chain && !chain) {
    throw invalid_argument("build_prompt: include_chain set but no chain given");
  }
  EvalPrompt p;
  p.benchmark = record.benchmark;
  p.mode = mode;
  if (include_question) p.question = record.question;
  if (include_chain) p.chain = *chain;
  if (mode == EvalMode::kRet) p.prefix = std::string(ret_prefix(record.benchmark));
  return p;
}

}  // namespace chainprobe
