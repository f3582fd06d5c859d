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

#include "psa/perturbation.h"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "psa/csv.h"
#include "psa/errors.h"
#include "psa/tokenize.h"

namespace psa {
namespace {

bool IsPossessive(AnchorForm form) {
  return form == AnchorForm::kPossessiveDeterminer ||
         form == AnchorForm::kPossessivePronoun;
}

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<NameEntry> ParseNamesCsv(std::string_view content) {
  const std::vector<CsvRow> rows = ParseCsv(content);
  if (rows.empty()) throw InputError("names csv is empty");
  const CsvRow& header = rows.front();
  int name_col = -1, gender_col = -1, category_col = -1, type_col = -1;
  for (size_t i = 0; i < header.fields.size(); ++i) {
    const std::string h = AsciiLower(Trim(header.fields[i]));
    const int col = static_cast<int>(i);
    if (h == "name") name_col = col;
    if (h == "gender") gender_col = col;
    if (h == "category") category_col = col;
    if (h == "entity_type") type_col = col;
  }
  if (name_col < 0) throw InputError("names csv header has no 'name' column");

  std::vector<NameEntry> names;
  std::unordered_set<std::string> seen;
  for (size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string where = "names csv line " + std::to_string(row.line);
    if (row.fields.size() != header.fields.size()) {
      throw InputError(where + ": wrong number of columns");
    }
    NameEntry entry;
    entry.name = Trim(row.fields[name_col]);
    if (entry.name.empty()) throw InputError(where + ": empty name");
    if (entry.name.find_first_of("\r\n") != std::string::npos) {
      throw InputError(where + ": name contains a newline");
    }
    if (!seen.insert(entry.name).second) {
      throw InputError(where + ": duplicate name '" + entry.name + "'");
    }
    if (gender_col >= 0) {
      auto g = ParseGender(Trim(row.fields[gender_col]));
      if (!g) {
        throw InputError(where + ": unknown gender '" +
                         row.fields[gender_col] + "'");
      }
      entry.gender = *g;
    }
    if (category_col >= 0) entry.category = Trim(row.fields[category_col]);
    if (type_col >= 0) {
      std::string type = Trim(row.fields[type_col]);
      if (!type.empty()) entry.entity_type = std::move(type);
    }
    names.push_back(std::move(entry));
  }
  if (names.empty()) throw InputError("names csv has no names");
  return names;
}

std::vector<NameEntry> LoadNames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read names file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseNamesCsv(buffer.str());
}

std::string RenderSubstitution(const AnchoredSentence& sentence,
                               const NameEntry& name) {
  const AnchorSpan& a = sentence.anchor;
  if (a.char_start >= a.char_end || a.char_end > sentence.text.size()) {
    throw InputError("anchor span [" + std::to_string(a.char_start) + ", " +
                     std::to_string(a.char_end) + ") out of bounds for '" +
                     sentence.source_id + "'");
  }
  std::string out;
  out.reserve(sentence.text.size() + name.name.size() + 2);
  out.append(sentence.text, 0, a.char_start);
  out += name.name;
  if (IsPossessive(a.form)) out += "'s";
  out.append(sentence.text, a.char_end, std::string::npos);
  return out;
}

bool PairIncluded(const AnchoredSentence& sentence, const NameEntry& name,
                  const GridOptions& options) {
  return !options.match_gender || name.gender == Gender::kUnspecified ||
         name.gender == sentence.anchor.gender;
}

std::vector<PerturbedSentence> GenerateGrid(
    std::span<const AnchoredSentence> sentences,
    std::span<const NameEntry> names, const GridOptions& options) {
  if (sentences.empty()) throw InputError("generate grid: sentence set is empty");
  if (names.empty()) throw InputError("generate grid: name set is empty");
  std::vector<PerturbedSentence> grid;
  grid.reserve(sentences.size() * names.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    for (size_t j = 0; j < names.size(); ++j) {
      if (!PairIncluded(sentences[i], names[j], options)) continue;
      grid.push_back({i, j, RenderSubstitution(sentences[i], names[j])});
    }
  }
  return grid;
}

std::string GridToJsonl(std::span<const PerturbedSentence> grid,
                        std::span<const AnchoredSentence> sentences,
                        std::span<const NameEntry> names) {
  std::string out;
  for (const PerturbedSentence& p : grid) {
    nlohmann::json record = {{"source_id", sentences[p.sentence].source_id},
                             {"name", names[p.name].name},
                             {"text", p.text}};
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<GridRecord> GridFromJsonl(std::string_view content) {
  std::vector<GridRecord> out;
  size_t line = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    ++line;
    size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view raw = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (IsBlank(raw)) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(raw);
      out.push_back({j.at("source_id").get<std::string>(),
                     j.at("name").get<std::string>(),
                     j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw InputError("grid line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace psa
