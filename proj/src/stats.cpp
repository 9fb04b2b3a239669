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

#include "chainprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chainprobe/error.hpp"

namespace chainprobe {

using nlohmann::json;

const char* to_string(Shade s) {
  switch (s) {
    case Shade::kNone: return "none";
    case Shade::kLight: return "light";
    case Shade::kDark: return "dark";
  }
  return "none";
}

namespace {

// Differences of printed values carry binary noise (58.7 - 91.3 is
// -32.599999...); six decimals is far below any printed precision.
double settle(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

Shade shade_for(double delta_pp) {
  const double d = settle(delta_pp);
  if (d < -60.0) return Shade::kDark;
  if (d < -25.0) return Shade::kLight;
  return Shade::kNone;
}

const char* to_string(RefusalPolicy p) {
  return p == RefusalPolicy::kExclude ? "exclude" : "count_as_incorrect";
}

RefusalPolicy parse_refusal_policy(std::string_view s) {
  if (s == "exclude") return RefusalPolicy::kExclude;
  if (s == "count_as_incorrect") return RefusalPolicy::kCountAsIncorrect;
  throw parse_error("unknown refusal policy '" + std::string(s) + "'");
}

ConditionResult from_counts(std::string condition_id, std::uint64_t n_correct,
                            std::uint64_t n_success) {
  if (n_success == 0) {
    throw Error(ErrorCode::kUndefined,
                "accuracy undefined for '" + condition_id + "': no successful responses");
  }
  if (n_correct > n_success) {
    throw invalid_argument("n_correct exceeds n_success");
  }
  ConditionResult r;
  r.condition_id = std::move(condition_id);
  r.n_total = n_success;
  r.n_success = n_success;
  r.n_correct = n_correct;
  r.accuracy = static_cast<double>(n_correct) / static_cast<double>(n_success);
  r.se = std::sqrt(r.accuracy * (1.0 - r.accuracy) / static_cast<double>(n_success));
  return r;
}

ConditionResult from_percent(std::string condition_id, double percent,
                             std::uint64_t n_success) {
  if (percent < 0.0 || percent > 100.0 || n_success == 0) {
    throw invalid_argument("from_percent: percent must be in [0, 100] and n > 0");
  }
  ConditionResult r;
  r.condition_id = std::move(condition_id);
  r.n_total = n_success;
  r.n_success = n_success;
  r.accuracy = percent / 100.0;
  r.n_correct = static_cast<std::uint64_t>(std::llround(r.accuracy * static_cast<double>(n_success)));
  r.se = std::sqrt(r.accuracy * (1.0 - r.accuracy) / static_cast<double>(n_success));
  return r;
}

ConditionResult accuracy(std::string condition_id,
                         std::span<const Verdict> verdicts,
                         std::span<const ResponseStatus> statuses,
                         RefusalPolicy policy) {
  if (verdicts.size() != statuses.size()) {
    throw invalid_argument("accuracy: verdicts and statuses differ in length");
  }
  std::uint64_t success = 0;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < statuses.size(); ++i) {
    switch (statuses[i]) {
      case ResponseStatus::kOk:
        ++success;
        if (verdicts[i].correct) ++correct;
        break;
      case ResponseStatus::kRefused:
        if (policy == RefusalPolicy::kCountAsIncorrect) ++success;
        break;
      case ResponseStatus::kTransportError:
      case ResponseStatus::kTimeout:
        break;
    }
  }
  ConditionResult r = from_counts(std::move(condition_id), correct, success);
  r.n_total = statuses.size();
  return r;
}

double delta_pp(const ConditionResult& a, const ConditionResult& b) {
  return settle(100.0 * (a.accuracy - b.accuracy));
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", settle(100.0 * fraction));
  return buf;
}

std::string format_delta(double delta_pp) {
  const double tenths = std::round(settle(delta_pp) * 10.0);
  if (tenths == 0.0) return "0.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", tenths / 10.0);
  return buf;
}

const char* to_string(ReportLayout l) {
  return l == ReportLayout::kGrid ? "grid" : "ablation";
}

ReportLayout parse_report_layout(std::string_view s) {
  if (s == "grid") return ReportLayout::kGrid;
  if (s == "ablation") return ReportLayout::kAblation;
  throw parse_error("unknown report layout '" + std::string(s) + "'");
}

json RunReport::to_json() const {
  json rows = json::array();
  for (const ConditionResult& r : results) {
    rows.push_back({{"condition_id", r.condition_id},
                    {"row", r.row},
                    {"col", r.col},
                    {"baseline", r.condition_id == baseline_id},
                    {"n_total", r.n_total},
                    {"n_success", r.n_success},
                    {"n_correct", r.n_correct},
                    {"accuracy_pct", format_percent(r.accuracy)},
                    {"se_pp", format_percent(r.se)},
                    {"delta_pp", r.delta_pp ? json(format_delta(*r.delta_pp)) : json(nullptr)},
                    {"shade", to_string(r.shade)}});
  }
  return json{{"baseline", baseline_id},
              {"layout", chainprobe::to_string(layout)},
              {"conditions", rows}};
}

std::uint64_t RunReport::total_success() const {
  std::uint64_t n = 0;
  for (const ConditionResult& r : results) n += r.n_success;
  return n;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += "\\n";
    else out.push_back(c);
  }
  return out;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows,
                         const std::vector<bool>& right_align) {
  std::vector<std::size_t> width(rows.front().size(), 3);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], display_width(row[c]));
    }
  }
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line = "|";
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - display_width(row[c]), ' ');
      line += ' ';
      line += right_align[c] ? pad + row[c] : row[c] + pad;
      line += " |";
    }
    return line + "\n";
  };
  std::string out = emit(rows.front());
  out += "|";
  for (std::size_t c = 0; c < width.size(); ++c) {
    out += right_align[c] ? " " + std::string(width[c] - 1, '-') + ": |"
                          : " " + std::string(width[c], '-') + " |";
  }
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) out += emit(rows[i]);
  return out;
}

std::string shade_marker(Shade s) {
  switch (s) {
    case Shade::kNone: return "";
    case Shade::kLight: return " [light]";
    case Shade::kDark: return " [dark]";
  }
  return "";
}

std::string render_ablation(const RunReport& rep) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Condition", "Acc (%)", "Delta (pp)", "SE (pp)", "n", "Shade"});
  for (const ConditionResult& r : rep.results) {
    const bool base = r.condition_id == rep.baseline_id;
    rows.push_back({md_cell(r.condition_id) + (base ? " (baseline)" : ""),
                    format_percent(r.accuracy),
                    base ? "---" : format_delta(*r.delta_pp),
                    format_percent(r.se), std::to_string(r.n_success),
                    to_string(r.shade)});
  }
  return render_table(rows, {false, true, true, true, true, false});
}

std::string render_grid(const RunReport& rep) {
  std::vector<std::string> row_keys;
  std::vector<std::string> col_keys;
  for (const ConditionResult& r : rep.results) {
    if (std::find(row_keys.begin(), row_keys.end(), r.row) == row_keys.end()) row_keys.push_back(r.row);
    if (std::find(col_keys.begin(), col_keys.end(), r.col) == col_keys.end()) col_keys.push_back(r.col);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{""};
  for (const std::string& c : col_keys) header.push_back(md_cell(c));
  rows.push_back(header);
  for (const std::string& rk : row_keys) {
    std::vector<std::string> line{md_cell(rk)};
    for (const std::string& ck : col_keys) {
      auto it = std::find_if(rep.results.begin(), rep.results.end(),
                             [&](const ConditionResult& r) { return r.row == rk && r.col == ck; });
      if (it == rep.results.end()) {
        line.emplace_back();
      } else if (it->condition_id == rep.baseline_id) {
        line.push_back(format_percent(it->accuracy) + " (baseline)");
      } else {
        line.push_back(format_percent(it->accuracy) + " (" + format_delta(*it->delta_pp) + ")" +
                       shade_marker(it->shade));
      }
    }
    rows.push_back(std::move(line));
  }
  std::vector<bool> align(header.size(), true);
  align[0] = false;
  return render_table(rows, align);
}

}  // namespace

RunReport build_report(std::vector<ConditionResult> results,
                       const std::string& baseline_id, ReportLayout layout) {
  auto base = std::find_if(results.begin(), results.end(),
                           [&](const ConditionResult& r) { return r.condition_id == baseline_id; });
  if (base == results.end()) {
    throw Error(ErrorCode::kNotFound, "unknown baseline condition '" + baseline_id + "'");
  }
  const ConditionResult baseline = *base;
  for (ConditionResult& r : results) {
    r.delta_pp = delta_pp(r, baseline);
    r.shade = shade_for(*r.delta_pp);
  }

  RunReport rep;
  rep.results = std::move(results);
  rep.baseline_id = baseline_id;
  rep.layout = layout;

  rep.csv = "condition_id,row,col,baseline,n_total,n_success,n_correct,accuracy_pct,se_pp,delta_pp,shade\n";
  for (const ConditionResult& r : rep.results) {
    const bool is_base = r.condition_id == baseline_id;
    rep.csv += csv_field(r.condition_id) + ',' + csv_field(r.row) + ',' + csv_field(r.col) + ',' +
               (is_base ? "1" : "0") + ',' + std::to_string(r.n_total) + ',' +
               std::to_string(r.n_success) + ',' + std::to_string(r.n_correct) + ',' +
               format_percent(r.accuracy) + ',' + format_percent(r.se) + ',' +
               format_delta(*r.delta_pp) + ',' + to_string(r.shade) + '\n';
  }
  rep.markdown = "Baseline: " + md_cell(baseline_id) + " (" + format_percent(baseline.accuracy) +
                 "%)\n\n" +
                 (layout == ReportLayout::kGrid ? render_grid(rep) : render_ablation(rep)) +
                 "\nShading: light when -60 <= delta < -25 pp, dark when delta < -60 pp.\n";
  return rep;
}

}  // namespace chainprobe
