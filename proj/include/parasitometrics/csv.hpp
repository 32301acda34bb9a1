#pragma once

// Minimal RFC 4180 reader and writer: quoted fields, doubled quotes inside
// quotes, embedded newlines, CRLF or LF line endings.

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "parasitometrics/error.hpp"

namespace parasitometrics::csv {

using Row = std::vector<std::string>;

inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) fail(ErrorCode::kSchemaError, "stray quote inside unquoted CSV field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) fail(ErrorCode::kSchemaError, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& os, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << quote(row[i]);
  }
  os << '\n';
}

// Shortest representation that round-trips; "inf"/"-inf"/"nan" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, std::string_view what) {
  if (s == "inf") return INFINITY;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kSchemaError, std::string(what) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

inline long long parse_integer(std::string_view s, std::string_view what) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kSchemaError,
         std::string(what) + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

/// A parsed table with a header. Columns are addressed by name; column order
/// in the source is irrelevant.
class Table {
 public:
  Table(std::vector<Row> rows, const std::vector<std::string>& required, std::string_view name) {
    if (rows.empty()) fail(ErrorCode::kSchemaError, std::string(name) + ": missing header row");
    header_ = std::move(rows.front());
    for (std::size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
    for (const auto& col : required) {
      if (!index_.count(col)) {
        fail(ErrorCode::kSchemaError, std::string(name) + ": missing column '" + col + "'");
      }
    }
    rows_.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (rows_[r].size() != header_.size()) {
        fail(ErrorCode::kSchemaError, std::string(name) + ": row " + std::to_string(r + 2) +
                                          " has " + std::to_string(rows_[r].size()) +
                                          " fields, expected " + std::to_string(header_.size()));
      }
    }
  }

  std::size_t size() const { return rows_.size(); }
  const std::string& at(std::size_t row, const std::string& column) const {
    return rows_[row][index_.at(column)];
  }

 private:
  Row header_;
  std::map<std::string, std::size_t> index_;
  std::vector<Row> rows_;
};

}  // namespace parasitometrics::csv
