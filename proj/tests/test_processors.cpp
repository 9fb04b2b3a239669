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

#include <map>

#include <gtest/gtest.h>

#include "chainprobe/answers.hpp"
#include "chainprobe/error.hpp"
#include "chainprobe/processors.hpp"
#include "chainprobe/rng.hpp"
#include "testutil.hpp"

namespace cp = chainprobe;
using Strings = std::vector<std::string>;

// ---- PRNG against an independent transcription of the reference code ----

namespace {

struct RefXoshiro {
  std::uint64_t s[4];
  explicit RefXoshiro(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s) {
      std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

// Descending Fisher-Yates with a multiply-shift bounded draw, written
// against the reference generator above.
template <typename G>
std::uint64_t ref_below(G& g, std::uint64_t bound) {
  for (;;) {
    const __uint128_t m = static_cast<__uint128_t>(g.next()) * bound;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= (0 - bound) % bound) return static_cast<std::uint64_t>(m >> 64);
  }
}

template <typename G>
std::vector<std::size_t> ref_permutation(std::size_t n, G& g) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[ref_below(g, i)]);
  return idx;
}

}  // namespace

TEST(Rng, MatchesReferenceXoshiro) {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xDEADBEEFull}) {
    cp::Rng rng(seed);
    RefXoshiro ref(seed);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(rng(), ref.next());
  }
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform) {
  cp::Rng rng(7);
  std::array<int, 6> hist{};
  for (int i = 0; i < 60000; ++i) {
    const auto v = rng.below(6);
    ASSERT_LT(v, 6u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 400);
}

TEST(Shuffle, WordGoldenFromReferenceShuffle) {
  // Golden computed by the reference generator + descending Fisher-Yates.
  const std::uint64_t seed = 12345;
  RefXoshiro ref(seed);
  const auto perm = ref_permutation(3, ref);
  const Strings words{"a", "b", "c"};
  std::string expected;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (i) expected += ' ';
    expected += words[perm[i]];
  }
  cp::Rng rng(seed);
  const std::string got = cp::shuffle("a b c", cp::ShuffleGranularity::kWord, rng);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got, "b a c");  // frozen
}

TEST(Shuffle, SingleSegmentIsIdentity) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    cp::Rng rng(s);
    EXPECT_EQ(cp::shuffle("only line", cp::ShuffleGranularity::kLine, rng), "only line");
  }
  cp::Rng rng(1);
  EXPECT_EQ(cp::shuffle("", cp::ShuffleGranularity::kWord, rng), "");
}

TEST(Shuffle, InlineWordKeepsLineOrder) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    cp::Rng rng(s);
    const std::string out = cp::shuffle("x = 1\ny = 2", cp::ShuffleGranularity::kInlineWord, rng);
    const auto lines = testutil::split_on(out, '\n');
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(testutil::sorted(testutil::oracle_words(lines[0])), (Strings{"1", "=", "x"}));
    EXPECT_EQ(testutil::sorted(testutil::oracle_words(lines[1])), (Strings{"2", "=", "y"}));
  }
}

TEST(Shuffle, LineShuffleHitsAllPermutations) {
  std::map<std::string, int> seen;
  for (std::uint64_t s = 0; s < 600; ++s) {
    cp::Rng rng(s);
    ++seen[cp::shuffle("a\nb\nc", cp::ShuffleGranularity::kLine, rng)];
  }
  ASSERT_EQ(seen.size(), 6u);
  for (const auto& [k, n] : seen) EXPECT_NEAR(n, 100, 45) << k;
}

TEST(Mask, Examples) {
  EXPECT_EQ(cp::mask("b = 21", cp::MaskTarget::kAlphabet), "■ = 21");
  EXPECT_EQ(cp::mask("9b + 7 = 63", cp::MaskTarget::kDigits), "■b + ■ = ■■");
  EXPECT_EQ(cp::mask("sum is 70; 170 stays", cp::MaskTarget::kAnswer, "70"),
            "sum is ■■; 170 stays");
  EXPECT_EQ(cp::mask("café 7", cp::MaskTarget::kAlphabet, {}, U'#'), "#### 7");
}

TEST(Mask, AnswerRequiresText) {
  try {
    cp::mask("70", cp::MaskTarget::kAnswer, "");
    FAIL();
  } catch (const cp::Error& e) {
    EXPECT_EQ(e.code(), cp::ErrorCode::kInvalidArgument);
  }
}

TEST(Mask, OptionLetterAnswerUsesWordBoundaries) {
  EXPECT_EQ(cp::mask("Answer: B. Both are fine (B)", cp::MaskTarget::kAnswer, "B"),
            "Answer: ■. Both are fine (■)");
}

TEST(Remove, Examples) {
  EXPECT_EQ(cp::remove("Thus answer 70.", cp::RemoveTarget::kAlphabet), "  70.");
  EXPECT_EQ(cp::remove("=21: 17_21 = 21+7=28", cp::RemoveTarget::kAlphabet),
            "=21: 17_21 = 21+7=28");
  EXPECT_EQ(cp::remove("Thus answer 70. 170 stays", cp::RemoveTarget::kAnswer, "70"),
            "Thus answer . 170 stays");
}

TEST(Remove, AlphabetCanMergeDigitRuns) {
  // Letters between digits vanish, so separate runs join.
  EXPECT_EQ(cp::remove("1a2", cp::RemoveTarget::kAlphabet), "12");
  EXPECT_EQ(testutil::oracle_digit_runs("1a2"), (Strings{"1", "2"}));
}

TEST(Remove, AnswerRequiresText) {
  EXPECT_THROW(cp::remove("70", cp::RemoveTarget::kAnswer, ""), cp::Error);
}

TEST(Randomize, WordModeFollowsChainFrequencies) {
  cp::Rng rng(99);
  std::size_t a = 0;
  std::size_t total = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto words = testutil::oracle_words(cp::randomize("a a b", cp::RandomUnit::kWord, rng));
    ASSERT_EQ(words.size(), 3u);
    for (const auto& w : words) {
      ASSERT_TRUE(w == "a" || w == "b");
      a += w == "a";
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(a) / static_cast<double>(total), 2.0 / 3.0, 0.01);
}

TEST(Randomize, SingletonVocabulary) {
  const Strings vocab{"X"};
  cp::Rng rng(3);
  const std::string chain = "Thus b+7 = 28.\nanswer 70";
  const auto n = cp::tokenize_subwords(chain).size();
  const std::string out =
      cp::randomize(chain, cp::RandomUnit::kToken, rng, std::span<const std::string>(vocab));
  const auto toks = testutil::oracle_words(out);
  EXPECT_EQ(toks.size(), n);
  for (const auto& t : toks) EXPECT_EQ(t, "X");
}

TEST(Randomize, EmptyInputAndEmptyVocabulary) {
  cp::Rng rng(3);
  EXPECT_EQ(cp::randomize("", cp::RandomUnit::kWord, rng), "");
  const Strings empty;
  EXPECT_THROW(cp::randomize("a b", cp::RandomUnit::kToken, rng, std::span<const std::string>(empty)),
               cp::Error);
}

TEST(InjectNoise, Examples) {
  const std::string chain = "5 apples\nthen 5 more\nso 10";
  cp::Rng rng(11);
  const std::string out = cp::inject_noise(chain, "5", 1, rng);
  EXPECT_EQ(testutil::count_occurrences(out, "Thus answer: 123."), 2u);
  // Original lines keep their relative order.
  Strings kept;
  for (const auto& l : testutil::split_on(out, '\n')) {
    if (l != "Thus answer: 123.") kept.push_back(l);
  }
  EXPECT_EQ(kept, testutil::split_on(chain, '\n'));

  cp::Rng r2(1);
  EXPECT_EQ(cp::inject_noise(chain, "5", 0, r2), chain);
  EXPECT_EQ(cp::inject_noise(chain, "7", 3, r2), chain);
}

TEST(InjectNoise, CustomSentenceAndValidation) {
  cp::Rng rng(5);
  const std::string out = cp::inject_noise("x 4", "4", 2, rng, "So it is 9.");
  EXPECT_EQ(testutil::count_occurrences(out, "So it is 9."), 2u);
  EXPECT_THROW(cp::inject_noise("x 4", "", 1, rng), cp::Error);
  EXPECT_THROW(cp::inject_noise("x 4", "4", 1, rng, "two\nlines"), cp::Error);
}

TEST(InjectNoise, PositionsCoverEveryBoundary) {
  // One insertion into a two-line chain: three possible slots.
  std::map<std::size_t, int> slot;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    cp::Rng rng(s);
    const auto lines = testutil::split_on(cp::inject_noise("a 1\nb", "1", 1, rng), '\n');
    ASSERT_EQ(lines.size(), 3u);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i] == "Thus answer: 123.") ++slot[i];
    }
  }
  ASSERT_EQ(slot.size(), 3u);
  for (const auto& [i, n] : slot) EXPECT_NEAR(n, 1000, 120) << i;
}

// ---- properties ----

TEST(ProcessorProperties, ShuffleMultisets) {
  std::mt19937_64 g(7001);
  for (int i = 0; i < 400; ++i) {
    const std::string chain = testutil::random_chain(g);
    cp::Rng rng(static_cast<std::uint64_t>(i));
    const auto line_out = cp::shuffle(chain, cp::ShuffleGranularity::kLine, rng);
    ASSERT_EQ(testutil::sorted(testutil::split_on(line_out, '\n')),
              testutil::sorted(testutil::split_on(chain, '\n')));
    const auto word_out = cp::shuffle(chain, cp::ShuffleGranularity::kWord, rng);
    ASSERT_EQ(testutil::sorted(testutil::oracle_words(word_out)),
              testutil::sorted(testutil::oracle_words(chain)));
    const auto tok_out = cp::shuffle(chain, cp::ShuffleGranularity::kToken, rng);
    ASSERT_EQ(testutil::sorted(testutil::oracle_words(tok_out)),
              testutil::sorted(cp::tokenize_subwords(chain)));
    const auto ilw = cp::shuffle(chain, cp::ShuffleGranularity::kInlineWord, rng);
    const auto in_lines = testutil::split_on(chain, '\n');
    const auto out_lines = testutil::split_on(ilw, '\n');
    ASSERT_EQ(in_lines.size(), out_lines.size());
    for (std::size_t l = 0; l < in_lines.size(); ++l) {
      ASSERT_EQ(testutil::sorted(testutil::oracle_words(out_lines[l])),
                testutil::sorted(testutil::oracle_words(in_lines[l])));
    }
  }
}

TEST(ProcessorProperties, MaskAndRemove) {
  std::mt19937_64 g(7002);
  for (int i = 0; i < 400; ++i) {
    const std::string chain = testutil::random_chain(g);
    const auto n_cp = testutil::oracle_code_points(chain).size();
    for (auto t : {cp::MaskTarget::kAlphabet, cp::MaskTarget::kDigits}) {
      const auto once = cp::mask(chain, t);
      ASSERT_EQ(testutil::oracle_code_points(once).size(), n_cp);
      ASSERT_EQ(cp::mask(once, t), once);
    }
    const auto digits_masked = cp::mask(chain, cp::MaskTarget::kDigits);
    ASSERT_TRUE(testutil::oracle_digit_runs(digits_masked).empty());

    const auto no_alpha = cp::remove(chain, cp::RemoveTarget::kAlphabet);
    ASSERT_EQ(testutil::oracle_letter_count(no_alpha), 0u);
    ASSERT_EQ(cp::remove(no_alpha, cp::RemoveTarget::kAlphabet), no_alpha);
    // The digit sequence survives exactly.
    std::string d_in, d_out;
    for (char c : chain) if (testutil::is_ascii_digit(c)) d_in += c;
    for (char c : no_alpha) if (testutil::is_ascii_digit(c)) d_out += c;
    ASSERT_EQ(d_in, d_out);

    const auto runs = testutil::oracle_digit_runs(chain);
    if (!runs.empty()) {
      const std::string ans = runs[static_cast<std::size_t>(i) % runs.size()];
      const auto rm = cp::remove(chain, cp::RemoveTarget::kAnswer, ans);
      ASSERT_EQ(testutil::oracle_answer_count(rm, ans) == 0 ||
                    cp::count_answer_occurrences(rm, ans) > 0,
                true);
      ASSERT_EQ(cp::remove(rm, cp::RemoveTarget::kAnswer, ans),
                cp::count_answer_occurrences(rm, ans) == 0 ? rm : cp::remove(rm, cp::RemoveTarget::kAnswer, ans));
      const auto mk = cp::mask(chain, cp::MaskTarget::kAnswer, ans);
      ASSERT_EQ(testutil::oracle_answer_count(mk, ans), 0u);
      ASSERT_EQ(cp::mask(mk, cp::MaskTarget::kAnswer, ans), mk);
    }
  }
}

TEST(ProcessorProperties, NoiseCountLaw) {
  std::mt19937_64 g(7003);
  for (int i = 0; i < 400; ++i) {
    const std::string chain = testutil::random_chain(g);
    const auto runs = testutil::oracle_digit_runs(chain);
    const std::string ans = runs.empty() ? "70" : runs.front();
    const std::uint32_t k = static_cast<std::uint32_t>(i % 4);
    cp::Rng rng(static_cast<std::uint64_t>(i));
    const auto out = cp::inject_noise(chain, ans, k, rng);
    const std::string s = "Thus answer: 123.";
    ASSERT_EQ(testutil::count_occurrences(out, s) - testutil::count_occurrences(chain, s),
              k * testutil::oracle_answer_count(chain, ans));
  }
}

TEST(AnswerMatching, DigitRunOracleAgreement) {
  std::mt19937_64 g(7004);
  for (int i = 0; i < 500; ++i) {
    const std::string chain = testutil::random_chain(g);
    const auto runs = testutil::oracle_digit_runs(chain);
    ASSERT_EQ(cp::digit_run_values(chain), runs);
    for (const auto& r : runs) {
      ASSERT_EQ(cp::count_answer_occurrences(chain, r), testutil::oracle_answer_count(chain, r));
    }
  }
}
