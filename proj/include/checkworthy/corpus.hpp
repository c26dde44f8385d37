#pragma once

// Debate transcripts, labels and ranked-run files.
//
// Transcript rows are `line_number \t speaker \t text \t label` (labeled) or
// `line_number \t speaker \t text` (unlabeled), UTF-8, no header. Run rows
// are `line_number \t score` with six fixed decimals, best score first.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "checkworthy/binary_io.hpp"
#include "checkworthy/error.hpp"

namespace checkworthy {

struct SentenceRecord {
  std::string debate_id;
  int line_number = 0;
  std::string speaker;
  std::string text;
  std::optional<int> label;

  bool operator==(const SentenceRecord&) const = default;
};

struct Debate {
  std::string debate_id;
  std::vector<SentenceRecord> records;

  bool operator==(const Debate&) const = default;

  bool labeled() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(), [](const auto& r) { return r.label.has_value(); });
  }
};

struct RunEntry {
  int line_number = 0;
  double score = 0.0;

  bool operator==(const RunEntry&) const = default;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::optional<long long> parse_int(std::string_view s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  long long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

/// Splits text into lines on '\n', dropping one trailing '\r' per line and
/// the empty remainder after a final newline.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return lines;
}

}  // namespace detail

/// Parses transcript text; `source` names the file in error messages.
inline Debate parse_debate_text(std::string_view contents, std::string debate_id, bool labeled,
                                const std::string& source) {
  Debate debate{std::move(debate_id), {}};
  const std::size_t expected = labeled ? 4 : 3;
  auto lines = detail::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto lineno = i + 1;
    auto line = lines[i];
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != expected) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(expected) + " tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    auto num = detail::parse_int(detail::trim(fields[0]));
    if (!num || *num < 1) {
      throw ParseError(source, lineno, "line number must be a positive integer: '" + std::string(fields[0]) + "'");
    }
    SentenceRecord rec;
    rec.debate_id = debate.debate_id;
    rec.line_number = static_cast<int>(*num);
    rec.speaker = std::string(fields[1]);
    rec.text = std::string(fields[2]);
    if (labeled) {
      auto lab = detail::trim(fields[3]);
      if (lab != "0" && lab != "1") {
        throw ParseError(source, lineno, "label must be 0 or 1: '" + std::string(fields[3]) + "'");
      }
      rec.label = lab == "1" ? 1 : 0;
      if (detail::trim(rec.text).empty()) throw ParseError(source, lineno, "empty sentence text");
    }
    debate.records.push_back(std::move(rec));
  }
  return debate;
}

inline Debate parse_debate_tsv(const std::filesystem::path& path, bool labeled) {
  std::string contents;
  try {
    contents = io::read_file(path.string());
  } catch (const Error&) {
    throw ParseError(path.string(), 0, "cannot read file");
  }
  return parse_debate_text(contents, path.stem().string(), labeled, path.string());
}

/// Serializes a debate in the transcript format. A debate is written labeled
/// when every record carries a label.
inline std::string format_debate_tsv(const Debate& debate) {
  const bool labeled = debate.labeled();
  std::string out;
  for (const auto& r : debate.records) {
    if (r.text.find_first_of("\t\n") != std::string::npos || r.speaker.find_first_of("\t\n") != std::string::npos) {
      throw ContractError("debate " + debate.debate_id + " line " + std::to_string(r.line_number) +
                          ": tabs and newlines are not allowed inside fields");
    }
    out += std::to_string(r.line_number);
    out += '\t';
    out += r.speaker;
    out += '\t';
    out += r.text;
    if (labeled) {
      out += '\t';
      out += std::to_string(*r.label);
    }
    out += '\n';
  }
  return out;
}

inline void write_debate_tsv(const Debate& debate, const std::filesystem::path& path) {
  io::write_file(path.string(), format_debate_tsv(debate));
}

/// Orders run entries best-first; equal scores go by ascending line number.
inline void sort_run(std::vector<RunEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RunEntry& a, const RunEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.line_number < b.line_number;
  });
}

inline std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", score);
  return buf;
}

inline std::string format_run(const Debate& debate, std::vector<RunEntry> entries) {
  std::set<int> expected;
  for (const auto& r : debate.records) expected.insert(r.line_number);
  std::multiset<int> got;
  for (const auto& e : entries) {
    if (!std::isfinite(e.score)) {
      throw ContractError("run for " + debate.debate_id + ": non-finite score at line " +
                          std::to_string(e.line_number));
    }
    got.insert(e.line_number);
  }
  std::vector<int> missing, extra;
  for (int n : expected) {
    if (!got.count(n)) missing.push_back(n);
  }
  for (auto it = got.begin(); it != got.end(); it = got.upper_bound(*it)) {
    if (!expected.count(*it) || got.count(*it) > 1) extra.push_back(*it);
  }
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "run for " << debate.debate_id << " does not cover the debate exactly:";
    if (!missing.empty()) {
      msg << " missing";
      for (int n : missing) msg << ' ' << n;
    }
    if (!extra.empty()) {
      msg << (missing.empty() ? "" : ";") << " extra or duplicated";
      for (int n : extra) msg << ' ' << n;
    }
    throw ContractError(msg.str());
  }
  sort_run(entries);
  std::string out;
  for (const auto& e : entries) {
    out += std::to_string(e.line_number);
    out += '\t';
    out += format_score(e.score);
    out += '\n';
  }
  return out;
}

inline void write_run(const Debate& debate, const std::vector<RunEntry>& entries,
                      const std::filesystem::path& path) {
  io::write_file(path.string(), format_run(debate, entries));
}

/// Reads a run file and returns its entries best-first.
inline std::vector<RunEntry> read_run(const std::filesystem::path& path) {
  std::string contents;
  try {
    contents = io::read_file(path.string());
  } catch (const Error&) {
    throw ParseError(path.string(), 0, "cannot read file");
  }
  std::vector<RunEntry> entries;
  auto lines = detail::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    auto fields = detail::split_tabs(lines[i]);
    if (fields.size() != 2) throw ParseError(path.string(), i + 1, "expected 'line_number<TAB>score'");
    auto num = detail::parse_int(detail::trim(fields[0]));
    if (!num || *num < 1) throw ParseError(path.string(), i + 1, "bad line number");
    std::string score_text(detail::trim(fields[1]));
    char* end = nullptr;
    double score = std::strtod(score_text.c_str(), &end);
    if (score_text.empty() || end != score_text.c_str() + score_text.size() || !std::isfinite(score)) {
      throw ParseError(path.string(), i + 1, "bad score '" + score_text + "'");
    }
    entries.push_back({static_cast<int>(*num), score});
  }
  sort_run(entries);
  return entries;
}

struct LineRef {
  std::string debate_id;
  int line_number = 0;

  bool operator==(const LineRef&) const = default;
};

struct ValidationReport {
  std::size_t debates = 0;
  std::size_t sentences = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t unlabeled = 0;
  std::vector<LineRef> duplicate_lines;
  std::vector<LineRef> out_of_order_lines;
  std::vector<LineRef> empty_texts;

  bool clean() const {
    return duplicate_lines.empty() && out_of_order_lines.empty() && empty_texts.empty();
  }
};

inline ValidationReport validate_corpus(const std::vector<Debate>& debates) {
  ValidationReport rep;
  rep.debates = debates.size();
  for (const auto& d : debates) {
    std::set<int> seen;
    int prev = 0;
    for (const auto& r : d.records) {
      ++rep.sentences;
      if (!r.label) {
        ++rep.unlabeled;
      } else if (*r.label == 1) {
        ++rep.positives;
      } else {
        ++rep.negatives;
      }
      if (!seen.insert(r.line_number).second) {
        rep.duplicate_lines.push_back({d.debate_id, r.line_number});
      } else if (r.line_number <= prev) {
        rep.out_of_order_lines.push_back({d.debate_id, r.line_number});
      }
      prev = std::max(prev, r.line_number);
      if (detail::trim(r.text).empty()) rep.empty_texts.push_back({d.debate_id, r.line_number});
    }
  }
  return rep;
}

/// Human-readable rendering, one `key: value` fact per line.
inline std::string format_validation_report(const ValidationReport& rep) {
  std::ostringstream os;
  os << "debates: " << rep.debates << '\n'
     << "sentences: " << rep.sentences << '\n'
     << "positives: " << rep.positives << '\n'
     << "negatives: " << rep.negatives << '\n'
     << "unlabeled: " << rep.unlabeled << '\n';
  auto list = [&os](const char* name, const std::vector<LineRef>& refs) {
    os << name << ": " << refs.size() << '\n';
    for (const auto& r : refs) os << "  " << r.debate_id << ':' << r.line_number << '\n';
  };
  list("duplicate_lines", rep.duplicate_lines);
  list("out_of_order_lines", rep.out_of_order_lines);
  list("empty_texts", rep.empty_texts);
  return os.str();
}

/// Throws when a corpus breaks the Debate invariants the pipeline relies on.
inline void require_well_formed(const std::vector<Debate>& debates) {
  auto rep = validate_corpus(debates);
  auto first = [](const std::vector<LineRef>& v) { return v.front().debate_id + ":" + std::to_string(v.front().line_number); };
  if (!rep.duplicate_lines.empty()) throw ContractError("duplicate line number at " + first(rep.duplicate_lines));
  if (!rep.out_of_order_lines.empty()) throw ContractError("line numbers not increasing at " + first(rep.out_of_order_lines));
}

/// Lists `*.tsv` files of a directory in lexicographic order.
inline std::vector<std::filesystem::path> list_tsv_files(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<Debate> load_debate_dir(const std::filesystem::path& dir, bool labeled) {
  std::vector<Debate> out;
  for (const auto& f : list_tsv_files(dir)) out.push_back(parse_debate_tsv(f, labeled));
  return out;
}

}  // namespace checkworthy
