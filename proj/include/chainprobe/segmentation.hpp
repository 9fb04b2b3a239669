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
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chainprobe {

enum class CharClass { kAlphabetic, kDigit, kWhitespace, kSymbol };

const char* to_string(CharClass c);

// Letters (any Unicode L* category) are alphabetic; only ASCII 0-9 count as
// digits; White_Space code points are whitespace; everything else, including
// non-ASCII numerals and U+FFFD, is a symbol.
CharClass classify_char(char32_t c);

// Half-open byte range [begin, end) into the segmented text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  std::string_view view(std::string_view text) const {
    return text.substr(begin, end - begin);
  }
  bool operator==(const Span&) const = default;
};

// One decoded code point. Malformed UTF-8 decodes byte-by-byte to U+FFFD so
// the original bytes can always be recovered through `span`.
struct CodePoint {
  char32_t value = 0;
  Span span;
};

std::vector<CodePoint> decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t c);

std::vector<Span> line_spans(std::string_view text);
std::vector<Span> word_spans(std::string_view text);

// Maximal newline-free substrings. Empty segments are kept, so joining the
// result with '\n' reproduces the input; "" yields a single empty line.
std::vector<std::string> split_lines(std::string_view text);

// Maximal runs of non-whitespace characters; punctuation stays attached.
std::vector<std::string> split_words(std::string_view text);

// A subword tokenizer returns non-whitespace spans that tile every word of
// the input. Whitespace between spans is the separator.
class SubwordScheme {
 public:
  virtual ~SubwordScheme() = default;
  virtual std::vector<Span> tokenize(std::string_view text) const = 0;
};

// Splits at character-class boundaries, then chunks alphabetic runs to at
// most 4 code points and digit runs to at most 3. Each symbol is its own
// token.
class ClassBoundaryScheme final : public SubwordScheme {
 public:
  static constexpr std::size_t kAlphaChunk = 4;
  static constexpr std::size_t kDigitChunk = 3;
  std::vector<Span> tokenize(std::string_view text) const override;
};

// Greedy longest-match against a fixed vocabulary, word by word. Characters
// not covered by any vocabulary entry become single-character tokens.
class VocabularyScheme final : public SubwordScheme {
 public:
  explicit VocabularyScheme(std::vector<std::string> vocabulary);

  std::vector<Span> tokenize(std::string_view text) const override;
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_token_bytes_ = 0;
};

inline constexpr std::string_view kDefaultScheme = "default";

// Tokenizer schemes keyed by string id. "default" is always registered.
class SchemeRegistry {
 public:
  static SchemeRegistry& global();

  SchemeRegistry();

  void add(std::string id, std::shared_ptr<const SubwordScheme> scheme);
  // Registers a VocabularyScheme read from a UTF-8 file, one token per line.
  void add_vocabulary_file(std::string id, const std::string& path);
  bool contains(std::string_view id) const;
  // Throws kNotFound for an unknown id.
  std::shared_ptr<const SubwordScheme> get(std::string_view id) const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const SubwordScheme>> schemes_;
};

std::vector<std::string> tokenize_subwords(
    std::string_view text, std::string_view scheme = kDefaultScheme);

std::vector<std::string> read_vocabulary_file(const std::string& path);

// Cached views of a chain at every granularity the processors use.
struct SegmentedChain {
  std::string raw;
  std::vector<Span> lines;
  std::vector<Span> words;
  std::vector<Span> subwords;
  std::vector<CodePoint> chars;
  std::vector<CharClass> class_map;  // parallel to `chars`

  static SegmentedChain build(std::string text,
                              std::string_view scheme = kDefaultScheme);

  std::size_t count(CharClass c) const;
};

std::vector<std::string> materialize(std::string_view text,
                                     const std::vector<Span>& spans);

}  // namespace chainprobe
