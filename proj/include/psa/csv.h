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

#ifndef PSA_CSV_H_
#define PSA_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace psa {

struct CsvRow {
  size_t line = 0;  // 1-based physical line on which the record starts
  std::vector<std::string> fields;
};

// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
// quoted fields may span lines, CRLF or LF line endings. Blank lines are
// dropped. Throws InputError on an unterminated quote or stray quote.
std::vector<CsvRow> ParseCsv(std::string_view content);

// Quotes `field` if it contains a comma, quote, CR or LF.
std::string CsvEscape(std::string_view field);

// Joins escaped fields with commas and terminates the line with LF.
std::string CsvLine(const std::vector<std::string>& fields);

}  // namespace psa

#endif  // PSA_CSV_H_
