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

#include "chainprobe/segmentation.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <fstream>
#include <mutex>

#include "chainprobe/error.hpp"

namespace chainprobe {

const char* to_string(CharClass c) {
  switch (c) {
    case CharClass::kAlphabetic: return "alphabetic";
    case CharClass::kDigit: return "digit";
    case CharClass::kWhitespace: return "whitespace";
    case CharClass::kSymbol: return "symbol";
  }
  return "symbol";
}

CharClass classify_char(char32_t c) {
  if (c >= U'0' && c <= U'9') return CharClass::kDigit;
  if (c > 0x10FFFF) return CharClass::kSymbol;
  const auto cp = static_cast<UChar32>(c);
  if (u_isUWhiteSpace(cp)) return CharClass::kWhitespace;
  if (U_GET_GC_MASK(cp) & U_GC_L_MASK) return CharClass::kAlphabetic;
  return CharClass::kSymbol;
}

std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char b = s[i];
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if (b < 0x80) {
      len = 1;
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      len = 2;
      cp = b & 0x1F;
      min = 0x80;
    } else if ((b & 0xF0) == 0xE0) {
      len = 3;
      cp = b & 0x0F;
      min = 0x800;
    } else if ((b & 0xF8) == 0xF0) {
      len = 4;
      cp = b & 0x07;
      min = 0x10000;
    }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (s[i + k] & 0x3F);
      }
    }
    if (ok && len > 1 &&
        (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) {
      ok = false;
    }
    if (!ok) {
      out.push_back({U'�', {i, i + 1}});
      ++i;
      continue;
    }
    out.push_back({cp, {i, i + len}});
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::vector<Span> line_spans(std::string_view text) {
  std::vector<Span> spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      spans.push_back({start, i});
      start = i + 1;
    }
  }
  spans.push_back({start, text.size()});
  return spans;
}

namespace {

std::vector<Span> word_spans_of(const std::vector<CodePoint>& cps) {
  std::vector<Span> spans;
  bool in_word = false;
  Span cur;
  for (const auto& cp : cps) {
    const bool ws = classify_char(cp.value) == CharClass::kWhitespace;
    if (!ws && !in_word) {
      cur.begin = cp.span.begin;
      in_word = true;
    } else if (ws && in_word) {
      cur.end = cp.span.begin;
      spans.push_back(cur);
      in_word = false;
    }
  }
  if (in_word) {
    cur.end = cps.back().span.end;
    spans.push_back(cur);
  }
  return spans;
}

}  // namespace

std::vector<Span> word_spans(std::string_view text) {
  return word_spans_of(decode_utf8(text));
}

std::vector<std::string> materialize(std::string_view text,
                                     const std::vector<Span>& spans) {
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.emplace_back(s.view(text));
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  return materialize(text, line_spans(text));
}

std::vector<std::string> split_words(std::string_view text) {
  return materialize(text, word_spans(text));
}

std::vector<Span> ClassBoundaryScheme::tokenize(std::string_view text) const {
  const auto cps = decode_utf8(text);
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    const CharClass cls = classify_char(cps[i].value);
    if (cls == CharClass::kWhitespace) {
      ++i;
      continue;
    }
    if (cls == CharClass::kSymbol) {
      out.push_back(cps[i].span);
      ++i;
      continue;
    }
    const std::size_t chunk =
        cls == CharClass::kDigit ? kDigitChunk : kAlphaChunk;
    std::size_t run_end = i;
    while (run_end < cps.size() && classify_char(cps[run_end].value) == cls) {
      ++run_end;
    }
    for (std::size_t s = i; s < run_end; s += chunk) {
      const std::size_t e = std::min(run_end, s + chunk);
      out.push_back({cps[s].span.begin, cps[e - 1].span.end});
    }
    i = run_end;
  }
  return out;
}

VocabularyScheme::VocabularyScheme(std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)) {
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    if (vocabulary_[i].empty()) continue;
    index_.emplace(vocabulary_[i], i);
    max_token_bytes_ = std::max(max_token_bytes_, vocabulary_[i].size());
  }
}

std::vector<Span> VocabularyScheme::tokenize(std::string_view text) const {
  std::vector<Span> out;
  for (const Span& word : word_spans(text)) {
    const auto cps = decode_utf8(word.view(text));
    std::size_t i = 0;
    while (i < cps.size()) {
      // Longest vocabulary match that ends on a code point boundary.
      std::size_t best = 0;
      for (std::size_t j = i; j < cps.size(); ++j) {
        const std::size_t bytes = cps[j].span.end - cps[i].span.begin;
        if (bytes > max_token_bytes_) break;
        const std::string piece(
            word.view(text).substr(cps[i].span.begin, bytes));
        if (index_.count(piece) != 0) best = j + 1;
      }
      if (best == 0) best = i + 1;
      out.push_back({word.begin + cps[i].span.begin,
                     word.begin + cps[best - 1].span.end});
      i = best;
    }
  }
  return out;
}

SchemeRegistry& SchemeRegistry::global() {
  static SchemeRegistry registry;
  return registry;
}

SchemeRegistry::SchemeRegistry() {
  schemes_.emplace(std::string(kDefaultScheme),
                   std::make_shared<ClassBoundaryScheme>());
}

void SchemeRegistry::add(std::string id,
                         std::shared_ptr<const SubwordScheme> scheme) {
  if (id.empty()) throw invalid_argument("tokenizer scheme id is empty");
  if (!scheme) throw invalid_argument("tokenizer scheme is null");
  std::unique_lock lock(mu_);
  schemes_[std::move(id)] = std::move(scheme);
}

void SchemeRegistry::add_vocabulary_file(std::string id,
                                         const std::string& path) {
  add(std::move(id),
      std::make_shared<VocabularyScheme>(read_vocabulary_file(path)));
}

bool SchemeRegistry::contains(std::string_view id) const {
  std::shared_lock lock(mu_);
  return schemes_.count(std::string(id)) != 0;
}

std::shared_ptr<const SubwordScheme> SchemeRegistry::get(
    std::string_view id) const {
  std::shared_lock lock(mu_);
  auto it = schemes_.find(std::string(id));
  if (it == schemes_.end()) {
    throw Error(ErrorCode::kNotFound,
                "unknown tokenizer scheme '" + std::string(id) + "'");
  }
  return it->second;
}

std::vector<std::string> tokenize_subwords(std::string_view text,
                                           std::string_view scheme) {
  return materialize(text, SchemeRegistry::global().get(scheme)->tokenize(text));
}

std::vector<std::string> read_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open vocabulary file " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return tokens;
}

SegmentedChain SegmentedChain::build(std::string text,
                                     std::string_view scheme) {
  SegmentedChain c;
  c.raw = std::move(text);
  c.chars = decode_utf8(c.raw);
  c.class_map.reserve(c.chars.size());
  for (const auto& cp : c.chars) c.class_map.push_back(classify_char(cp.value));
  c.lines = line_spans(c.raw);
  c.words = word_spans_of(c.chars);
  c.subwords = SchemeRegistry::global().get(scheme)->tokenize(c.raw);
  return c;
}

std::size_t SegmentedChain::count(CharClass cls) const {
  return static_cast<std::size_t>(
      std::count(class_map.begin(), class_map.end(), cls));
}

}  // namespace chainprobe
