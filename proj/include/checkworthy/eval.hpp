#pragma once

// Ranking metrics over per-debate runs: AP/MAP, RR/MRR, R-Precision and
// Precision@N, plus the ablation comparison table.
//
// Conventions:
//   - a query with no relevant lines scores 0 on every metric and is flagged;
//   - P@N always divides by N, so rankings shorter than N count the missing
//     positions as irrelevant.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "checkworthy/corpus.hpp"
#include "checkworthy/error.hpp"

namespace checkworthy {

using Ranking = std::vector<int>;

struct QueryJudgments {
  std::string query_id;
  std::set<int> relevant;
};

inline constexpr std::array<int, 6> kPrecisionCutoffs = {1, 3, 5, 10, 20, 50};

/// Metric names in report order.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"MAP", "RR", "R-P", "P@1", "P@3", "P@5", "P@10", "P@20", "P@50"};
  return names;
}

namespace detail {

inline std::vector<bool> relevance_pattern(const Ranking& ranking, const QueryJudgments& j) {
  std::unordered_set<int> seen;
  std::vector<bool> rel;
  rel.reserve(ranking.size());
  for (int line : ranking) {
    if (!seen.insert(line).second) {
      throw ContractError("ranking for " + j.query_id + " lists line " + std::to_string(line) + " twice");
    }
    rel.push_back(j.relevant.count(line) != 0);
  }
  return rel;
}

inline std::size_t hits_in_top(const std::vector<bool>& rel, std::size_t k) {
  return static_cast<std::size_t>(std::count(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(std::min(k, rel.size())), true));
}

}  // namespace detail

inline double average_precision(const Ranking& ranking, const QueryJudgments& j) {
  const auto rel = detail::relevance_pattern(ranking, j);
  if (j.relevant.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (!rel[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(j.relevant.size());
}

inline double reciprocal_rank(const Ranking& ranking, const QueryJudgments& j) {
  const auto rel = detail::relevance_pattern(ranking, j);
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (rel[k]) return 1.0 / static_cast<double>(k + 1);
  }
  return 0.0;
}

inline double r_precision(const Ranking& ranking, const QueryJudgments& j) {
  const auto rel = detail::relevance_pattern(ranking, j);
  const auto r = j.relevant.size();
  if (r == 0) return 0.0;
  return static_cast<double>(detail::hits_in_top(rel, r)) / static_cast<double>(r);
}

inline double precision_at_n(const Ranking& ranking, const QueryJudgments& j, int n) {
  if (n < 1) throw ContractError("precision cutoff must be positive");
  const auto rel = detail::relevance_pattern(ranking, j);
  return static_cast<double>(detail::hits_in_top(rel, static_cast<std::size_t>(n))) / static_cast<double>(n);
}

struct QueryMetrics {
  std::string query_id;
  double ap = 0.0;
  double rr = 0.0;
  double r_prec = 0.0;
  std::array<double, kPrecisionCutoffs.size()> p_at{};
  bool no_relevant = false;
};

inline QueryMetrics evaluate_query(const Ranking& ranking, const QueryJudgments& j) {
  QueryMetrics q;
  q.query_id = j.query_id;
  q.no_relevant = j.relevant.empty();
  q.ap = average_precision(ranking, j);
  q.rr = reciprocal_rank(ranking, j);
  q.r_prec = r_precision(ranking, j);
  for (std::size_t i = 0; i < kPrecisionCutoffs.size(); ++i) q.p_at[i] = precision_at_n(ranking, j, kPrecisionCutoffs[i]);
  return q;
}

struct MetricsReport {
  /// Keyed by the names in metric_names(); values are means over queries.
  std::map<std::string, double> values;
  std::vector<QueryMetrics> per_query;
  std::vector<std::string> no_relevant_queries;

  double at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ContractError("unknown metric '" + name + "'");
    return it->second;
  }
};

/// Means of the per-query metrics. Both maps must have the same keys.
inline MetricsReport evaluate_run(const std::map<std::string, Ranking>& runs,
                                  const std::map<std::string, QueryJudgments>& judgments) {
  std::vector<std::string> only_runs, only_gold;
  for (const auto& [q, _] : runs) {
    if (!judgments.count(q)) only_runs.push_back(q);
  }
  for (const auto& [q, _] : judgments) {
    if (!runs.count(q)) only_gold.push_back(q);
  }
  if (!only_runs.empty() || !only_gold.empty()) {
    std::string msg = "run and gold query sets differ:";
    for (const auto& q : only_runs) msg += " +" + q;
    for (const auto& q : only_gold) msg += " -" + q;
    throw ContractError(msg);
  }

  MetricsReport rep;
  for (const auto& n : metric_names()) rep.values[n] = 0.0;
  if (runs.empty()) return rep;
  for (const auto& [q, ranking] : runs) {
    auto m = evaluate_query(ranking, judgments.at(q));
    if (m.no_relevant) rep.no_relevant_queries.push_back(q);
    rep.values["MAP"] += m.ap;
    rep.values["RR"] += m.rr;
    rep.values["R-P"] += m.r_prec;
    for (std::size_t i = 0; i < kPrecisionCutoffs.size(); ++i) {
      rep.values["P@" + std::to_string(kPrecisionCutoffs[i])] += m.p_at[i];
    }
    rep.per_query.push_back(std::move(m));
  }
  const double nq = static_cast<double>(runs.size());
  for (auto& [_, v] : rep.values) v /= nq;
  return rep;
}

inline QueryJudgments judgments_from_debate(const Debate& d) {
  QueryJudgments j{d.debate_id, {}};
  for (const auto& r : d.records) {
    if (!r.label) throw ContractError("gold debate " + d.debate_id + " is unlabeled");
    if (*r.label == 1) j.relevant.insert(r.line_number);
  }
  return j;
}

inline Ranking ranking_from_run(std::vector<RunEntry> entries) {
  sort_run(entries);
  Ranking r;
  r.reserve(entries.size());
  for (const auto& e : entries) r.push_back(e.line_number);
  return r;
}

/// Checks that a ranking lists exactly the debate's line numbers.
inline void require_covers(const Ranking& ranking, const Debate& d) {
  std::set<int> want, got(ranking.begin(), ranking.end());
  for (const auto& r : d.records) want.insert(r.line_number);
  if (got != want || got.size() != ranking.size()) {
    throw ContractError("run for " + d.debate_id + " is not a permutation of the gold line numbers");
  }
}

// Ablation tables.

struct AblationRow {
  std::string name;
  MetricsReport report;
};

/// Relative change in percent, truncated (not rounded) to two decimals:
/// (system - baseline) / baseline * 100. NaN when the baseline is 0.
inline double percent_delta(double baseline, double system) {
  if (baseline == 0.0) return std::nan("");
  const double pct = (system - baseline) / baseline * 100.0;
  // nudge by 1e-9 so values that are exact in decimal survive truncation
  const double nudged = pct + (pct >= 0 ? 1e-9 : -1e-9);
  return std::trunc(nudged * 100.0) / 100.0;
}

inline std::string format_delta(double d) {
  if (std::isnan(d)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f%%", d == 0.0 ? 0.0 : d);
  return buf;
}

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct AblationTable {
  std::vector<AblationRow> rows;
  std::size_t baseline = 0;

  double delta(std::size_t row, const std::string& metric) const {
    return percent_delta(rows.at(baseline).report.at(metric), rows.at(row).report.at(metric));
  }

  /// Aligned text: one line per configuration, then one delta line per
  /// non-baseline row.
  std::string to_text() const {
    std::size_t w = 8;
    for (const auto& r : rows) w = std::max(w, r.name.size() + 2);
    std::ostringstream os;
    auto pad = [&](const std::string& s, std::size_t n) { return s + std::string(n > s.size() ? n - s.size() : 1, ' '); };
    os << pad("", w);
    for (const auto& m : metric_names()) os << pad(m, 10);
    os << '\n';
    for (const auto& r : rows) {
      os << pad(r.name, w);
      for (const auto& m : metric_names()) os << pad(format_metric(r.report.at(m)), 10);
      os << '\n';
    }
    if (rows.size() > 1) {
      os << "\ndelta vs " << rows[baseline].name << '\n';
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == baseline) continue;
        os << pad(rows[i].name, w);
        for (const auto& m : metric_names()) os << pad(format_delta(delta(i, m)), 10);
        os << '\n';
      }
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json out;
    out["baseline"] = rows.at(baseline).name;
    out["rows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      nlohmann::json row;
      row["name"] = rows[i].name;
      for (const auto& m : metric_names()) {
        row["metrics"][m] = rows[i].report.at(m);
        const double d = delta(i, m);
        row["delta_pct"][m] = std::isnan(d) ? nlohmann::json(nullptr) : nlohmann::json(d);
      }
      out["rows"].push_back(std::move(row));
    }
    return out;
  }
};

inline AblationTable ablation_report(std::vector<AblationRow> rows, std::size_t baseline = 0) {
  if (rows.empty()) throw ContractError("ablation report needs at least one configuration");
  if (baseline >= rows.size()) throw ContractError("baseline row out of range");
  return {std::move(rows), baseline};
}

inline nlohmann::json report_to_json(const MetricsReport& rep) {
  nlohmann::json out;
  for (const auto& m : metric_names()) out["metrics"][m] = rep.at(m);
  out["queries"] = nlohmann::json::array();
  for (const auto& q : rep.per_query) {
    nlohmann::json row{{"query", q.query_id}, {"AP", q.ap}, {"RR", q.rr}, {"R-P", q.r_prec}, {"no_relevant", q.no_relevant}};
    for (std::size_t i = 0; i < kPrecisionCutoffs.size(); ++i) row["P@" + std::to_string(kPrecisionCutoffs[i])] = q.p_at[i];
    out["queries"].push_back(std::move(row));
  }
  out["no_relevant_queries"] = rep.no_relevant_queries;
  return out;
}

/// Published reference rows, usable as ablation rows for comparison.
namespace reference {

struct PublishedRow {
  const char* name;
  std::array<double, 9> values;  // MAP, RR, R-P, P@1, P@3, P@5, P@10, P@20, P@50
};

// Feature ablation on top of the TOBB ETU baseline system.
inline constexpr std::array<PublishedRow, 8> kFeatureAblation = {{
    {"TOBB ETU", {.0884, .2028, .1150, .0000, .0952, .1429, .1286, .1357, .0829}},
    {"SF only", {.0832, .3017, .0873, .1429, .1905, .1429, .1286, .1000, .0800}},
    {"SF + TOBB ETU", {.0885, .1992, .1218, .0000, .1429, .1143, .1286, .1500, .0829}},
    {"SBERT only", {.1243, .2207, .1522, .1429, .0952, .0857, .1571, .1643, .1200}},
    {"SBERT + TOBB ETU", {.1287, .2318, .1577, .1429, .1429, .1714, .1429, .1786, .1171}},
    {"TMF only", {.1151, .3487, .0979, .2857, .1905, .1714, .1429, .1071, .0800}},
    {"TMF + TOBB ETU", {.1063, .1930, .1327, .0000, .0952, .2000, .1714, .1429, .0886}},
    {"SBERT + TMF + SF + TOBB ETU", {.1396, .2780, .1348, .1429, .1905, .1714, .1571, .1643, .1171}},
}};

// Top primary shared-task submissions and the combined system.
inline constexpr std::array<PublishedRow, 5> kSharedTaskComparison = {{
    {"Copenhagen", {.1660, .4176, .1387, .2857, .2381, .2571, .2286, .1571, .1229}},
    {"TheEarthIsFlat", {.1597, .19531, .2052, .0000, .0952, .2286, .2143, .1857, .1457}},
    {"Combined (SBERT + TMF + SF + TOBB ETU)", {.1396, .2780, .1348, .1429, .1905, .1714, .1571, .1643, .1171}},
    {"IPIPAN", {.1332, .2864, .1481, .1429, .0952, .1429, .1714, .1500, .1171}},
    {"TOBB ETU", {.0884, .2028, .1150, .0000, .0952, .1429, .1286, .1357, .0829}},
}};

inline AblationRow to_row(const PublishedRow& p) {
  AblationRow row{p.name, {}};
  const auto& names = metric_names();
  for (std::size_t i = 0; i < names.size(); ++i) row.report.values[names[i]] = p.values[i];
  return row;
}

}  // namespace reference

}  // namespace checkworthy
