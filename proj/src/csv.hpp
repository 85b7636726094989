#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "yieldcast/common.hpp"

// Minimal CSV reader: comma separator, optional RFC-4180 double-quoting,
// no embedded newlines inside quoted fields.

namespace yieldcast::csvutil {

inline std::vector<std::string> split_line(const std::string& line,
                                           std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    fail(ErrorCode::MalformedCsv,
         "unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(cur);
  return fields;
}

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvFile read_csv(const std::string& path,
                        ErrorCode jagged_row_code = ErrorCode::MalformedCsv) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::Io, "cannot open " + path);
  }
  CsvFile csv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line, line_no);
    if (line_no == 1) {
      csv.header = std::move(fields);
    } else {
      if (fields.size() != csv.header.size()) {
        fail(jagged_row_code,
             "line " + std::to_string(line_no) + " has " +
                 std::to_string(fields.size()) + " fields, header has " +
                 std::to_string(csv.header.size()) + " (" + path + ")");
      }
      csv.rows.push_back(std::move(fields));
    }
  }
  if (csv.header.empty()) {
    fail(ErrorCode::MalformedCsv, "empty file: " + path);
  }
  return csv;
}

}  // namespace yieldcast::csvutil
