#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fairaudit/errors.hpp"

namespace fairaudit {

// A raw delimited table: header names plus untyped text cells.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return column_names.size(); }

  // Index of a named column, or -1 when absent.
  long column_index(const std::string& name) const {
    for (std::size_t j = 0; j < column_names.size(); ++j)
      if (column_names[j] == name) return static_cast<long>(j);
    return -1;
  }
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

// Parses comma-delimited text with double-quote quoting ("" escapes a quote
// inside a quoted cell). Accepts \n and \r\n row terminators; quoted cells may
// span lines. Unquoted cells are whitespace-trimmed, quoted cells are kept
// verbatim. Blank lines are skipped.
inline std::vector<std::vector<std::string>> parse_delimited(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool cell_was_quoted = false;
  bool any_cell_in_record = false;

  std::size_t i = 0;
  const std::size_t n = text.size();
  // Strip a UTF-8 byte-order mark.
  if (n >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
    i = 3;

  auto end_cell = [&]() {
    record.push_back(cell_was_quoted ? cell : trim_copy(cell));
    cell.clear();
    cell_was_quoted = false;
    any_cell_in_record = false;
  };
  auto end_record = [&]() {
    end_cell();
    const bool blank_line = record.size() == 1 && record[0].empty();
    if (!blank_line) records.push_back(record);
    record.clear();
  };

  enum class State { FieldStart, Unquoted, Quoted, AfterQuote };
  State st = State::FieldStart;

  for (; i < n; ++i) {
    const char c = text[i];
    switch (st) {
      case State::FieldStart:
        if (c == ' ' || c == '\t') {
          cell.push_back(c);  // trimmed later unless the field turns out quoted
        } else if (c == '"') {
          cell.clear();
          cell_was_quoted = true;
          any_cell_in_record = true;
          st = State::Quoted;
        } else if (c == ',') {
          end_cell();
          any_cell_in_record = true;
        } else if (c == '\n') {
          end_record();
        } else if (c == '\r') {
          // consumed; handled when the \n arrives (or trimmed)
          cell.push_back(c);
        } else {
          cell.push_back(c);
          any_cell_in_record = true;
          st = State::Unquoted;
        }
        break;
      case State::Unquoted:
        if (c == ',') {
          end_cell();
          st = State::FieldStart;
        } else if (c == '\n') {
          end_record();
          st = State::FieldStart;
        } else {
          cell.push_back(c);
        }
        break;
      case State::Quoted:
        if (c == '"') {
          st = State::AfterQuote;
        } else {
          cell.push_back(c);
        }
        break;
      case State::AfterQuote:
        if (c == '"') {
          cell.push_back('"');  // escaped quote
          st = State::Quoted;
        } else if (c == ',') {
          end_cell();
          st = State::FieldStart;
        } else if (c == '\n') {
          end_record();
          st = State::FieldStart;
        } else if (c == ' ' || c == '\t' || c == '\r') {
          // tolerated padding between closing quote and delimiter
        } else {
          throw FormatError("csv: unexpected character after closing quote near record " +
                            std::to_string(records.size() + 1));
        }
        break;
    }
  }
  if (st == State::Quoted)
    throw FormatError("csv: unterminated quoted cell at end of input");
  if (!cell.empty() || any_cell_in_record || !record.empty()) end_record();
  return records;
}

}  // namespace detail

// Parses CSV text into a RawTable. When has_header is false, column names
// col0..colN-1 are synthesized.
inline RawTable parse_csv(const std::string& text, bool has_header) {
  RawTable t;
  auto records = detail::parse_delimited(text);
  if (records.empty()) return t;

  std::size_t start = 0;
  if (has_header) {
    t.column_names = records[0];
    start = 1;
  } else {
    for (std::size_t j = 0; j < records[0].size(); ++j)
      t.column_names.push_back("col" + std::to_string(j));
  }
  const std::size_t width = t.column_names.size();
  t.rows.reserve(records.size() - start);
  for (std::size_t r = start; r < records.size(); ++r) {
    if (records[r].size() != width)
      throw FormatError("csv: ragged row " + std::to_string(r + 1) + ": expected " +
                        std::to_string(width) + " cells, got " +
                        std::to_string(records[r].size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

// Loads a CSV file from disk.
inline RawTable load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IOError("failed reading file: " + path);
  return parse_csv(buf.str(), has_header);
}

}  // namespace fairaudit
