#pragma once

// Experiment reports: provenance header, one or more tables, footnotes.
// Numbers keep full precision in memory and are rendered with two decimals.
//
// CSV layout (also what parse_report_csv reads back):
//   # title: <title>
//   # <key>: <value>            provenance, one per line
//   # table: <name>
//   col1,col2,...              RFC 4180 quoting
//   ...rows...
//   <blank line between tables>
//   # note: <footnote>
//
// Markdown mirrors the published tables: the best value per column (within a
// row group) is bold, control cells are parenthesized.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gentrans/error.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

inline std::string format_fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // "-0.00" renders as "0.00"
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

struct Cell {
  std::variant<std::monostate, std::string, double, int64_t> value;
  bool control = false;  // swapped-reference cell: never "best", parenthesized in Markdown

  static Cell text(std::string s) { return {std::move(s), false}; }
  static Cell number(double v, bool control = false) { return {v, control}; }
  static Cell integer(int64_t v) { return {v, false}; }
  static Cell empty() { return {}; }

  std::optional<double> numeric() const {
    if (auto* d = std::get_if<double>(&value)) return *d;
    if (auto* i = std::get_if<int64_t>(&value)) return static_cast<double>(*i);
    return std::nullopt;
  }

  std::string render() const {
    if (auto* s = std::get_if<std::string>(&value)) return *s;
    if (auto* d = std::get_if<double>(&value)) return format_fixed(*d);
    if (auto* i = std::get_if<int64_t>(&value)) return std::to_string(*i);
    return "";
  }
};

enum class Better { None, Higher, LowerAbs };

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<Better> better;                // per column; missing entries mean None
  std::optional<std::size_t> group_column;   // "best" is decided within runs of equal values here

  std::size_t column(std::string_view c) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == c) return i;
    }
    throw Error(ErrorKind::MissingColumn, "report table '" + name + "' has no column '" + std::string(c) + "'");
  }
};

struct ExperimentReport {
  std::string title;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<ReportTable> tables;
  std::vector<std::string> footnotes;

  const ReportTable& table(std::string_view name) const {
    for (const auto& t : tables) {
      if (t.name == name) return t;
    }
    throw Error(ErrorKind::MissingColumn, "report has no table '" + std::string(name) + "'");
  }
};

enum class ReportFormat { Csv, Markdown };

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string one_line(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

/// best[r][c] == true when row r holds the best value of column c in its group.
inline std::vector<std::vector<bool>> best_cells(const ReportTable& t) {
  std::vector<std::vector<bool>> best(t.rows.size(), std::vector<bool>(t.columns.size(), false));
  std::size_t start = 0;
  while (start < t.rows.size()) {
    std::size_t end = start + 1;
    if (t.group_column) {
      const auto key = t.rows[start][*t.group_column].render();
      while (end < t.rows.size() && t.rows[end][*t.group_column].render() == key) ++end;
    } else {
      end = t.rows.size();
    }
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const Better b = c < t.better.size() ? t.better[c] : Better::None;
      if (b == Better::None) continue;
      std::optional<double> target;
      auto key_of = [&](double v) { return b == Better::Higher ? v : -std::abs(v); };
      for (std::size_t r = start; r < end; ++r) {
        const auto& cell = t.rows[r][c];
        auto v = cell.numeric();
        if (!v || cell.control) continue;
        // Compare at display precision so visually equal values tie.
        const double k = key_of(std::strtod(format_fixed(*v).c_str(), nullptr));
        if (!target || k > *target) target = k;
      }
      if (!target) continue;
      for (std::size_t r = start; r < end; ++r) {
        const auto& cell = t.rows[r][c];
        auto v = cell.numeric();
        if (v && !cell.control && key_of(std::strtod(format_fixed(*v).c_str(), nullptr)) == *target) best[r][c] = true;
      }
    }
    start = end;
  }
  return best;
}

inline std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline std::string emit_csv(const ExperimentReport& report) {
  std::string out = "# title: " + detail::one_line(report.title) + "\n";
  for (const auto& [k, v] : report.header) out += "# " + detail::one_line(k) + ": " + detail::one_line(v) + "\n";
  for (const auto& t : report.tables) {
    out += "\n# table: " + detail::one_line(t.name) + "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + detail::csv_field(t.columns[c]);
    out += "\n";
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + detail::csv_field(row[c].render());
      out += "\n";
    }
  }
  if (!report.footnotes.empty()) out += "\n";
  for (const auto& f : report.footnotes) out += "# note: " + detail::one_line(f) + "\n";
  return out;
}

inline std::string emit_markdown(const ExperimentReport& report) {
  std::string out = "# " + detail::one_line(report.title) + "\n\n";
  for (const auto& [k, v] : report.header) out += "- " + k + ": `" + detail::one_line(v) + "`\n";
  for (const auto& t : report.tables) {
    out += "\n## " + t.name + "\n\n|";
    for (const auto& c : t.columns) out += " " + detail::md_escape(c) + " |";
    out += "\n|";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += "---|";
    out += "\n";
    const auto best = detail::best_cells(t);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      out += "|";
      for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
        const auto& cell = t.rows[r][c];
        std::string s = detail::md_escape(cell.render());
        if (cell.control && !s.empty()) s = "(" + s + ")";
        if (best[r][c]) s = "**" + s + "**";
        out += " " + s + " |";
      }
      out += "\n";
    }
  }
  if (!report.footnotes.empty()) {
    out += "\nNotes:\n\n";
    for (const auto& f : report.footnotes) out += "- " + detail::one_line(f) + "\n";
  }
  return out;
}

inline std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  return format == ReportFormat::Csv ? emit_csv(report) : emit_markdown(report);
}

namespace detail {

inline std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::ParseError, "unterminated quoted CSV field");
  out.push_back(std::move(cur));
  return out;
}

inline Cell parse_cell(const std::string& s) {
  if (s.empty()) return Cell::empty();
  char* end = nullptr;
  const bool has_dot = s.find('.') != std::string::npos;
  if (!has_dot) {
    const long long i = std::strtoll(s.c_str(), &end, 10);
    if (*end == '\0' && end != s.c_str()) return Cell::integer(i);
  }
  const double d = std::strtod(s.c_str(), &end);
  if (*end == '\0' && end != s.c_str() && has_dot) return Cell::number(d);
  return Cell::text(s);
}

}  // namespace detail

/// Reads a CSV produced by emit_csv (or written by hand in the same layout,
/// e.g. published score tables used as fixtures). Cells are typed by shape:
/// integers, decimals, text. Presentation metadata (control cells, best-value
/// directions) is not stored in CSV; experiment code re-derives it.
inline ExperimentReport parse_report_csv(std::string_view content) {
  ExperimentReport report;
  ReportTable* current = nullptr;
  bool expect_columns = false;
  for (const auto& line : text::split_lines(content)) {
    if (text::is_blank(line)) continue;
    if (text::starts_with(line, "# ")) {
      const auto body = std::string_view(line).substr(2);
      const auto colon = body.find(": ");
      const auto key = std::string(body.substr(0, colon));
      const auto value = colon == std::string_view::npos ? std::string() : std::string(body.substr(colon + 2));
      if (key == "title") {
        report.title = value;
      } else if (key == "table") {
        report.tables.push_back(ReportTable{value, {}, {}, {}, std::nullopt});
        current = &report.tables.back();
        expect_columns = true;
      } else if (key == "note") {
        report.footnotes.push_back(value);
      } else {
        report.header.emplace_back(key, value);
      }
      continue;
    }
    if (!current) throw Error(ErrorKind::ParseError, "CSV data before any '# table:' line");
    auto fields = detail::parse_csv_line(line);
    if (expect_columns) {
      current->columns = std::move(fields);
      expect_columns = false;
      continue;
    }
    if (fields.size() != current->columns.size()) {
      throw Error(ErrorKind::ParseError, "row with " + std::to_string(fields.size()) + " fields in table '" +
                                             current->name + "' of " + std::to_string(current->columns.size()) + " columns");
    }
    std::vector<Cell> row;
    for (const auto& f : fields) row.push_back(detail::parse_cell(f));
    current->rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace gentrans
