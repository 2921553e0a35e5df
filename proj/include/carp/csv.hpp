#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace carp::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Column index for `name`, or -1.
  int column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    return -1;
  }
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// RFC 4180 style: double-quoted fields may contain commas and "" escapes.
// Embedded newlines inside quotes are not supported.
inline Row split_line(std::string_view line) {
  Row out;
  std::string field;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      out.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += ch;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  out.push_back(was_quoted ? field : trim(field));
  return out;
}

inline Table parse(std::istream& in, std::string_view source = "<stream>") {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    if (trim(line).empty()) continue;
    Row row;
    try {
      row = split_line(line);
    } catch (const DataError& e) {
      throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      t.header = std::move(row);
      have_header = true;
      continue;
    }
    if (row.size() != t.header.size())
      throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(row.size()));
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw DataError(std::string(source) + ": empty file");
  return t;
}

inline Table parse_string(const std::string& text, std::string_view source = "<string>") {
  std::istringstream in(text);
  return parse(in, source);
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse(in, path);
}

inline std::string quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

// 17 significant digits, locale independent.
// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace carp::csv
