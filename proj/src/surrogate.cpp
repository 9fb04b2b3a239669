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

#include "chainprobe/surrogate.hpp"

#include <charconv>
#include <map>

#include "chainprobe/answers.hpp"
#include "chainprobe/error.hpp"

namespace chainprobe {

const char* to_string(ExtractorKind k) {
  switch (k) {
    case ExtractorKind::kLastNumber: return "last_number";
    case ExtractorKind::kMostFrequentNumber: return "most_frequent_number";
    case ExtractorKind::kAfterAnchor: return "after_anchor";
  }
  return "last_number";
}

std::vector<std::string> ExtractorStrategy::default_anchors() {
  return {"answer is", "Thus answer", "answer:"};
}

ExtractorStrategy ExtractorStrategy::parse(std::string_view id) {
  ExtractorStrategy s;
  std::string_view name = id;
  std::optional<std::string_view> args;
  if (const std::size_t eq = id.find('='); eq != std::string_view::npos) {
    name = id.substr(0, eq);
    args = id.substr(eq + 1);
  }
  if (name == "last_number") {
    s.kind = ExtractorKind::kLastNumber;
  } else if (name == "most_frequent_number") {
    s.kind = ExtractorKind::kMostFrequentNumber;
  } else if (name == "after_anchor") {
    s.kind = ExtractorKind::kAfterAnchor;
  } else {
    throw parse_error("unknown extractor strategy '" + std::string(id) + "'");
  }
  if (args) {
    if (s.kind != ExtractorKind::kAfterAnchor) {
      throw parse_error("only after_anchor takes anchors: '" + std::string(id) + "'");
    }
    s.anchors.clear();
    std::size_t pos = 0;
    while (pos <= args->size()) {
      const std::size_t bar = args->find('|', pos);
      const std::string_view a = args->substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos);
      if (a.empty()) throw parse_error("empty anchor in '" + std::string(id) + "'");
      s.anchors.emplace_back(a);
      if (bar == std::string_view::npos) break;
      pos = bar + 1;
    }
  }
  return s;
}

std::string ExtractorStrategy::id() const {
  std::string out = to_string(kind);
  if (kind == ExtractorKind::kAfterAnchor && anchors != default_anchors()) {
    out += '=';
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (i) out += '|';
      out += anchors[i];
    }
  }
  return out;
}

namespace {

std::string_view strip_zeros(std::string_view digits) {
  std::size_t i = 0;
  while (i + 1 < digits.size() && digits[i] == '0') ++i;
  return digits.substr(i);
}

// Numeric order on zero-stripped digit strings.
struct ValueLess {
  bool operator()(std::string_view a, std::string_view b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

Extraction finish(std::string_view digits, std::string note = {}) {
  Extraction e;
  e.note = std::move(note);
  const std::string_view v = strip_zeros(digits);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    e.note += (e.note.empty() ? "" : "; ") + std::string("value out of range: ") + std::string(v);
    return e;
  }
  e.value = out;
  return e;
}

}  // namespace

Extraction extract_detailed(std::string_view chain,
                            const ExtractorStrategy& strategy) {
  const std::vector<Span> runs = digit_runs(chain);
  switch (strategy.kind) {
    case ExtractorKind::kLastNumber:
      if (runs.empty()) return {};
      return finish(runs.back().view(chain));

    case ExtractorKind::kMostFrequentNumber: {
      if (runs.empty()) return {};
      std::map<std::string_view, std::size_t, ValueLess> counts;
      for (const Span& r : runs) ++counts[strip_zeros(r.view(chain))];
      std::string_view best;
      std::size_t best_count = 0;
      std::size_t tied = 0;
      for (const auto& [value, n] : counts) {  // ascending value
        if (n > best_count) {
          best = value;
          best_count = n;
          tied = 1;
        } else if (n == best_count) {
          ++tied;
        }
      }
      std::string note;
      if (tied > 1) {
        note = std::to_string(tied) + "-way tie at count " + std::to_string(best_count) +
               "; smallest value chosen";
      }
      return finish(best, std::move(note));
    }

    case ExtractorKind::kAfterAnchor: {
      if (strategy.anchors.empty()) {
        throw invalid_argument("after_anchor needs at least one anchor");
      }
      std::size_t anchor_start = std::string_view::npos;
      std::size_t anchor_end = 0;
      for (const std::string& a : strategy.anchors) {
        if (a.empty()) throw invalid_argument("after_anchor: empty anchor");
        const std::size_t p = chain.rfind(a);
        if (p == std::string_view::npos) continue;
        if (anchor_start == std::string_view::npos || p > anchor_start ||
            (p == anchor_start && p + a.size() > anchor_end)) {
          anchor_start = p;
          anchor_end = p + a.size();
        }
      }
      if (anchor_start == std::string_view::npos) {
        Extraction e;
        e.note = "no anchor found";
        return e;
      }
      for (const Span& r : runs) {
        if (r.begin >= anchor_end) return finish(r.view(chain));
      }
      Extraction e;
      e.note = "no number after anchor";
      return e;
    }
  }
  return {};
}

std::optional<std::int64_t> extract(std::string_view chain,
                                    const ExtractorStrategy& strategy) {
  return extract_detailed(chain, strategy).value;
}

SurrogateBackend::SurrogateBackend(ExtractorStrategy strategy)
    : strategy_(std::move(strategy)) {
  if (strategy_.kind == ExtractorKind::kAfterAnchor && strategy_.anchors.empty()) {
    throw invalid_argument("after_anchor needs at least one anchor");
  }
}

ModelResponse SurrogateBackend::complete(const CompletionRequest& request,
                                         const InferenceParams&) {
  std::string text;
  if (request.prompt && request.prompt->chain) {
    if (const auto v = extract(*request.prompt->chain, strategy_)) {
      text = std::to_string(*v);
    }
  }
  ModelResponse r = ModelResponse::success(std::move(text));
  r.attempts = 1;
  return r;
}

std::string SurrogateBackend::describe() const {
  return "surrogate:" + strategy_.id();
}

}  // namespace chainprobe
