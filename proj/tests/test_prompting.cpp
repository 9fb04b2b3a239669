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

#include <cstring>

#include <gtest/gtest.h>

#include "chainprobe/error.hpp"
#include "chainprobe/prompting.hpp"
#include "testutil.hpp"

namespace cp = chainprobe;

namespace {

cp::ReasoningRecord record(cp::Benchmark b) {
  cp::ReasoningRecord r;
  r.id = "q1#0";
  r.benchmark = b;
  r.question = "Find the sum of all integer bases b > 9.";
  r.chain = "b=21: 17_21 = 28\nThus the answer is 70";
  r.gold_answer = "70";
  return r;
}

bool ends_with_bytes(const std::string& s, const char* suffix, std::size_t n) {
  return s.size() >= n && std::memcmp(s.data() + s.size() - n, suffix, n) == 0;
}

}  // namespace

TEST(Prompt, RetPrefixesAreBitExact) {
  // Byte arrays spelled out so a typo in a shared constant cannot hide.
  const char answer[] = {'T', 'h', 'u', 's', ',', ' ', 't', 'h', 'e', ' ', 'a', 'n', 's', 'w', 'e', 'r',
                         ' ', 'i', 's'};
  const char code[] = {'T', 'h', 'u', 's', ',', ' ', 't', 'h', 'e', ' ', 'c', 'o', 'd', 'e',
                       ' ', 'i', 's', '\n', '`', '`', '`', 'c', 'p', 'p', '\n'};
  for (auto b : {cp::Benchmark::kMathInteger, cp::Benchmark::kMultipleChoice}) {
    const auto r = record(b);
    const auto text = cp::build_prompt(r, r.chain, cp::EvalMode::kRet, true, true).render();
    EXPECT_TRUE(ends_with_bytes(text, answer, sizeof answer)) << text;
    EXPECT_NE(text.back(), ' ');
  }
  const auto r = record(cp::Benchmark::kCode);
  const auto text = cp::build_prompt(r, r.chain, cp::EvalMode::kRet, true, true).render();
  EXPECT_TRUE(ends_with_bytes(text, code, sizeof code));
}

TEST(Prompt, DefaultLayout) {
  const auto r = record(cp::Benchmark::kMathInteger);
  EXPECT_EQ(cp::build_prompt(r, r.chain, cp::EvalMode::kRet, true, true).render(),
            r.question + "\n\n" + r.chain + "\n\nThus, the answer is");
  EXPECT_EQ(cp::build_prompt(r, r.chain, cp::EvalMode::kGen, true, true).render(),
            r.question + "\n\n" + r.chain);
  EXPECT_EQ(cp::build_prompt(r, r.chain, cp::EvalMode::kRet, false, true).render(),
            r.chain + "\n\nThus, the answer is");
  EXPECT_EQ(cp::build_prompt(r, std::nullopt, cp::EvalMode::kRet, true, false).render(),
            r.question + "\n\nThus, the answer is");
}

TEST(Prompt, DegenerateCaseIsPrefixOnly) {
  for (auto b : {cp::Benchmark::kMathInteger, cp::Benchmark::kMultipleChoice, cp::Benchmark::kCode}) {
    const auto r = record(b);
    const auto p = cp::build_prompt(r, r.chain, cp::EvalMode::kRet, false, false);
    EXPECT_EQ(p.render(), std::string(cp::ret_prefix(b)));
    EXPECT_FALSE(p.question.has_value());
    EXPECT_FALSE(p.chain.has_value());
  }
}

TEST(Prompt, ChainRequiredWhenIncluded) {
  const auto r = record(cp::Benchmark::kMathInteger);
  EXPECT_THROW(cp::build_prompt(r, std::nullopt, cp::EvalMode::kRet, true, true), cp::Error);
}

TEST(Prompt, OmittedChainIgnoresArgument) {
  const auto r = record(cp::Benchmark::kMathInteger);
  const auto a = cp::build_prompt(r, std::string("one"), cp::EvalMode::kRet, true, false).render();
  const auto b = cp::build_prompt(r, std::string("two"), cp::EvalMode::kRet, true, false).render();
  EXPECT_EQ(a, b);
}

TEST(Prompt, PureFunctionOfInputs) {
  std::mt19937_64 g(8);
  for (int i = 0; i < 200; ++i) {
    auto r = record(i % 3 == 0 ? cp::Benchmark::kCode : cp::Benchmark::kMathInteger);
    const auto chain = testutil::random_chain(g);
    const auto mode = i % 2 ? cp::EvalMode::kGen : cp::EvalMode::kRet;
    const auto a = cp::build_prompt(r, chain, mode, i % 5 != 0, true).render();
    const auto b = cp::build_prompt(r, chain, mode, i % 5 != 0, true).render();
    EXPECT_EQ(a, b);
    if (mode == cp::EvalMode::kRet) {
      const auto prefix = std::string(cp::ret_prefix(r.benchmark));
      EXPECT_EQ(a.substr(a.size() - prefix.size()), prefix);
    }
  }
}

TEST(PromptTemplate, SectionsAndSlots) {
  const cp::PromptTemplate t("{{#question}}Q: {{question}}\n{{/question}}{{#chain}}R: {{chain}}\n{{/chain}}{{#ret}}{{prefix}}{{/ret}}");
  const auto r = record(cp::Benchmark::kMathInteger);
  EXPECT_EQ(cp::build_prompt(r, r.chain, cp::EvalMode::kRet, true, true).render(t),
            "Q: " + r.question + "\nR: " + r.chain + "\nThus, the answer is");
  EXPECT_EQ(cp::build_prompt(r, r.chain, cp::EvalMode::kGen, false, true).render(t), "R: " + r.chain + "\n");
}

TEST(PromptTemplate, Validation) {
  EXPECT_THROW(cp::PromptTemplate("{{nope}}"), cp::Error);
  EXPECT_THROW(cp::PromptTemplate("{{#chain}}x"), cp::Error);
  EXPECT_THROW(cp::PromptTemplate("{{question"), cp::Error);
  const cp::PromptTemplate trailing("{{question}}{{prefix}} Please answer.");
  const auto r = record(cp::Benchmark::kMathInteger);
  EXPECT_THROW(cp::build_prompt(r, r.chain, cp::EvalMode::kRet, true, true).render(trailing), cp::Error);
}
