/*
 * Copyright 2026 The PSA Audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psa/csv.h"

#include "psa/errors.h"

namespace psa {

std::vector<CsvRow> ParseCsv(std::string_view content) {
  std::vector<CsvRow> rows;
  size_t line = 1;
  size_t pos = 0;
  const size_t n = content.size();
  while (pos < n) {
    CsvRow row;
    row.line = line;
    std::string field;
    bool row_done = false;
    bool any_content = false;
    while (!row_done) {
      if (pos < n && content[pos] == '"') {
        any_content = true;
        const size_t quote_line = line;
        ++pos;
        bool closed = false;
        while (pos < n) {
          const char ch = content[pos];
          if (ch == '"') {
            if (pos + 1 < n && content[pos + 1] == '"') {
              field.push_back('"');
              pos += 2;
              continue;
            }
            ++pos;
            closed = true;
            break;
          }
          if (ch == '\n') ++line;
          field.push_back(ch);
          ++pos;
        }
        if (!closed) {
          throw InputError("csv line " + std::to_string(quote_line) +
                           ": unterminated quoted field");
        }
        if (pos < n && content[pos] != ',' && content[pos] != '\n' &&
            content[pos] != '\r') {
          throw InputError("csv line " + std::to_string(line) +
                           ": unexpected character after closing quote");
        }
      } else {
        while (pos < n && content[pos] != ',' && content[pos] != '\n' &&
               content[pos] != '\r') {
          if (content[pos] == '"') {
            throw InputError("csv line " + std::to_string(line) +
                             ": quote inside unquoted field");
          }
          field.push_back(content[pos]);
          ++pos;
        }
      }
      if (!field.empty()) any_content = true;
      row.fields.push_back(std::move(field));
      field.clear();
      if (pos >= n) {
        row_done = true;
      } else if (content[pos] == ',') {
        any_content = true;
        ++pos;
      } else {
        if (content[pos] == '\r') ++pos;
        if (pos < n && content[pos] == '\n') ++pos;
        ++line;
        row_done = true;
      }
    }
    if (any_content) rows.push_back(std::move(row));
  }
  return rows;
}

std::string CsvEscape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string CsvLine(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += CsvEscape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace psa
