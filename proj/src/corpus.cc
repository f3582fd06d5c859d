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

#include "psa/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "psa/csv.h"
#include "psa/errors.h"
#include "psa/random.h"
#include "psa/tokenize.h"

namespace psa {
namespace {

using Json = nlohmann::json;

// Words that follow an object "her" far more often than a possessed noun:
// determiners, prepositions, conjunctions, pronouns, adverbs, auxiliaries
// and bare verbs of causative/perception frames ("let her go").
const std::unordered_set<std::string_view>& HerFollowers() {
  static const auto* const kWords = new std::unordered_set<std::string_view>{
      // determiners and quantifiers
      "a", "an", "the", "this", "that", "these", "those", "some", "any",
      "all", "every", "each", "no", "another", "one", "two", "many", "much",
      "more", "most", "enough", "both",
      // prepositions and particles
      "about", "above", "across", "after", "against", "along", "around", "as",
      "at", "away", "back", "before", "behind", "below", "beside", "between",
      "by", "down", "during", "for", "from", "in", "inside", "into", "like",
      "near", "of", "off", "on", "onto", "out", "outside", "over", "past",
      "through", "to", "toward", "towards", "under", "until", "up", "upon",
      "with", "within", "without",
      // conjunctions and complementizers
      "and", "but", "or", "nor", "so", "yet", "because", "if", "unless",
      "when", "whenever", "where", "while", "whether", "than", "though",
      "although", "since", "cause", "cuz", "lol",
      // pronouns and wh-words
      "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
      "them", "myself", "yourself", "himself", "herself", "itself",
      "what", "who", "whom", "which", "why", "how",
      // adverbs
      "again", "already", "also", "always", "anymore", "anyway", "ever",
      "here", "there", "now", "then", "today", "tonight", "tomorrow",
      "yesterday", "too", "very", "really", "just", "only", "even", "still",
      "never", "not", "once", "twice", "often", "sometimes", "soon", "later",
      "well", "better", "best", "first", "last", "instead",
      "either", "alone", "together", "forever", "anyways", "maybe",
      "probably", "definitely", "actually", "completely", "totally",
      "hard", "badly", "less",
      // auxiliaries and copulas
      "is", "isn't", "was", "wasn't", "are", "aren't", "were", "weren't",
      "be", "been", "being", "am", "do", "does", "did", "don't", "doesn't",
      "didn't", "have", "has", "had", "can", "can't", "could", "couldn't",
      "will", "won't", "would", "wouldn't", "should", "shouldn't", "may",
      "might", "must", "shall",
      // bare verbs common after an object pronoun
      "go", "come", "get", "know", "see", "feel", "think", "say", "tell",
      "cry", "leave", "stay", "win", "lose", "die", "look", "sound", "seem",
      "want", "need", "make", "let", "help", "try", "stop", "speak",
      "talk", "sing", "dance", "run", "walk", "fall", "laugh", "smile",
      "understand", "believe", "live", "work", "play", "sleep", "eat",
      "finish", "happen", "change", "grow", "become"};
  return *kWords;
}

std::string TrimCopy(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class RecordSink {
 public:
  RecordSink(std::string_view file_name, const LoadOptions& options)
      : file_name_(file_name), options_(options) {
    result_.comments.reserve(64);
  }

  void Malformed(size_t line, const std::string& reason) {
    const std::string where = file_name_ + ":" + std::to_string(line);
    if (!options_.skip_malformed) {
      throw InputError(where + ": malformed record: " + reason);
    }
    ++result_.skipped;
    result_.skipped_records.push_back(where + ": " + reason);
  }

  void Add(size_t line, std::optional<std::string> id, std::string text) {
    if (IsBlank(text)) {
      Malformed(line, "empty text");
      return;
    }
    std::string final_id = id && !id->empty()
                               ? std::move(*id)
                               : file_name_ + ":" + std::to_string(line);
    if (!seen_ids_.insert(final_id).second) {
      Malformed(line, "duplicate id '" + final_id + "'");
      return;
    }
    result_.comments.push_back(
        {std::move(final_id), std::move(text), options_.source_label});
  }

  LoadResult Take() { return std::move(result_); }

 private:
  std::string file_name_;
  const LoadOptions& options_;
  std::unordered_set<std::string> seen_ids_;
  LoadResult result_;
};

void ParsePlainLines(std::string_view content, RecordSink& sink) {
  size_t line = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    ++line;
    size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view text = content.substr(pos, eol - pos);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    pos = eol + 1;
    if (IsBlank(text)) continue;
    sink.Add(line, std::nullopt, std::string(text));
  }
}

void ParseCsvCorpus(std::string_view content, RecordSink& sink) {
  const std::vector<CsvRow> rows = ParseCsv(content);
  if (rows.empty()) return;
  const CsvRow& header = rows.front();
  std::optional<size_t> id_col, text_col;
  for (size_t i = 0; i < header.fields.size(); ++i) {
    const std::string name = AsciiLower(TrimCopy(header.fields[i]));
    if (name == "id") id_col = i;
    if (name == "text") text_col = i;
  }
  if (!text_col) {
    throw InputError("csv header (line " + std::to_string(header.line) +
                     ") has no 'text' column");
  }
  for (size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.fields.size() != header.fields.size()) {
      sink.Malformed(row.line, "expected " +
                                   std::to_string(header.fields.size()) +
                                   " columns, got " +
                                   std::to_string(row.fields.size()));
      continue;
    }
    std::optional<std::string> id;
    if (id_col) id = row.fields[*id_col];
    sink.Add(row.line, std::move(id), row.fields[*text_col]);
  }
}

void ParseJsonl(std::string_view content, RecordSink& sink) {
  size_t line = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    ++line;
    size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view raw = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (IsBlank(raw)) continue;
    Json record = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      sink.Malformed(line, "not a JSON object");
      continue;
    }
    auto text_it = record.find("text");
    if (text_it == record.end() || !text_it->is_string()) {
      sink.Malformed(line, "missing string field 'text'");
      continue;
    }
    std::optional<std::string> id;
    if (auto id_it = record.find("id"); id_it != record.end()) {
      if (id_it->is_string()) {
        id = id_it->get<std::string>();
      } else if (id_it->is_number_integer()) {
        id = std::to_string(id_it->get<int64_t>());
      } else if (!id_it->is_null()) {
        sink.Malformed(line, "field 'id' must be a string or integer");
        continue;
      }
    }
    sink.Add(line, std::move(id), text_it->get<std::string>());
  }
}

AnchorForm ResolveHer(std::string_view text, const std::vector<Token>& tokens,
                      size_t index) {
  if (index + 1 >= tokens.size()) return AnchorForm::kObject;
  const Token& next = tokens[index + 1];
  // Punctuation between "her" and the next word ends the phrase.
  if (!IsBlank(text.substr(tokens[index].end,
                           next.begin - tokens[index].end))) {
    return AnchorForm::kObject;
  }
  return IsHerObjectFollower(AsciiLower(next.text))
             ? AnchorForm::kObject
             : AnchorForm::kPossessiveDeterminer;
}

}  // namespace

std::string_view ToString(Gender g) {
  switch (g) {
    case Gender::kFemale:
      return "female";
    case Gender::kMale:
      return "male";
    case Gender::kUnspecified:
      return "unspecified";
  }
  return "unspecified";
}

std::string_view ToString(AnchorForm f) {
  switch (f) {
    case AnchorForm::kSubject:
      return "subject";
    case AnchorForm::kObject:
      return "object";
    case AnchorForm::kPossessiveDeterminer:
      return "possessive_determiner";
    case AnchorForm::kPossessivePronoun:
      return "possessive_pronoun";
    case AnchorForm::kObjectOrPossessive:
      return "object_or_possessive";
  }
  return "subject";
}

std::optional<Gender> ParseGender(std::string_view s) {
  const std::string lower = AsciiLower(s);
  if (lower == "female" || lower == "f") return Gender::kFemale;
  if (lower == "male" || lower == "m") return Gender::kMale;
  if (lower == "unspecified" || lower.empty()) return Gender::kUnspecified;
  return std::nullopt;
}

std::optional<AnchorForm> ParseAnchorForm(std::string_view s) {
  for (AnchorForm f :
       {AnchorForm::kSubject, AnchorForm::kObject,
        AnchorForm::kPossessiveDeterminer, AnchorForm::kPossessivePronoun,
        AnchorForm::kObjectOrPossessive}) {
    if (ToString(f) == s) return f;
  }
  return std::nullopt;
}

std::optional<CorpusFormat> ParseCorpusFormat(std::string_view s) {
  if (s == "plain-lines") return CorpusFormat::kPlainLines;
  if (s == "csv") return CorpusFormat::kCsv;
  if (s == "jsonl") return CorpusFormat::kJsonl;
  return std::nullopt;
}

LoadResult ParseCorpus(std::string_view content, std::string_view file_name,
                       CorpusFormat format, const LoadOptions& options) {
  RecordSink sink(file_name, options);
  switch (format) {
    case CorpusFormat::kPlainLines:
      ParsePlainLines(content, sink);
      break;
    case CorpusFormat::kCsv:
      ParseCsvCorpus(content, sink);
      break;
    case CorpusFormat::kJsonl:
      ParseJsonl(content, sink);
      break;
  }
  return sink.Take();
}

LoadResult LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                      const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  LoadOptions effective = options;
  if (effective.source_label.empty()) {
    effective.source_label = path.stem().string();
  }
  return ParseCorpus(buffer.str(), path.filename().string(), format,
                     effective);
}

std::vector<InventoryEntry> DefaultAnchorInventory() {
  return {
      {"he", AnchorForm::kSubject, Gender::kMale},
      {"she", AnchorForm::kSubject, Gender::kFemale},
      {"him", AnchorForm::kObject, Gender::kMale},
      {"her", AnchorForm::kObjectOrPossessive, Gender::kFemale},
      {"his", AnchorForm::kPossessiveDeterminer, Gender::kMale},
      {"hers", AnchorForm::kPossessivePronoun, Gender::kFemale},
  };
}

void ExtractionConfig::Validate() const {
  if (max_words < 1) {
    throw ConfigError("extraction.max_words", "must be >= 1");
  }
  if (sample_size < 2) {
    throw ConfigError("extraction.sample_size", "must be >= 2");
  }
  if (anchor_inventory.empty()) {
    throw ConfigError("extraction.anchor_inventory", "must not be empty");
  }
  std::unordered_set<std::string> seen;
  for (const InventoryEntry& e : anchor_inventory) {
    if (e.surface.empty() || AsciiLower(e.surface) != e.surface ||
        Tokenize(e.surface).size() != 1 ||
        Tokenize(e.surface)[0].text.size() != e.surface.size()) {
      throw ConfigError("extraction.anchor_inventory",
                        "surface '" + e.surface +
                            "' must be a single lowercase word");
    }
    if (!seen.insert(e.surface).second) {
      throw ConfigError("extraction.anchor_inventory",
                        "duplicate surface '" + e.surface + "'");
    }
  }
}

bool IsHerObjectFollower(std::string_view lower_token) {
  return HerFollowers().contains(lower_token);
}

std::vector<AnchorSpan> FindAnchors(std::string_view text,
                                    const ExtractionConfig& config) {
  std::unordered_map<std::string, const InventoryEntry*> lookup;
  for (const InventoryEntry& e : config.anchor_inventory) {
    lookup.emplace(e.surface, &e);
  }
  const std::vector<Token> tokens = Tokenize(text);
  std::vector<AnchorSpan> anchors;
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto it = lookup.find(AsciiLower(tokens[i].text));
    if (it == lookup.end()) continue;
    const InventoryEntry& entry = *it->second;
    AnchorForm form = entry.form;
    if (form == AnchorForm::kObjectOrPossessive) {
      if (config.her_disambiguation == HerDisambiguation::kExclude) continue;
      form = ResolveHer(text, tokens, i);
    }
    anchors.push_back({i, tokens[i].begin, tokens[i].end, form, entry.gender});
  }
  return anchors;
}

ExtractionResult ExtractAnchoredSentences(std::span<const RawComment> comments,
                                          const ExtractionConfig& config) {
  config.Validate();
  ExtractionResult result;
  std::vector<AnchoredSentence> eligible;
  std::unordered_set<std::string_view> seen_texts;
  for (const RawComment& c : comments) {
    ++result.considered;
    const size_t words = WordCount(c.text);
    if (words > config.max_words) {
      ++result.too_long;
      continue;
    }
    const std::vector<AnchorSpan> anchors = FindAnchors(c.text, config);
    if (anchors.empty()) {
      ++result.no_anchor;
      continue;
    }
    if (!seen_texts.insert(c.text).second) {
      ++result.duplicates;
      continue;
    }
    eligible.push_back({c.id, c.text, anchors.front(), words});
  }
  if (eligible.empty()) {
    throw InputError("no eligible sentences: need <= " +
                     std::to_string(config.max_words) +
                     " words and at least one anchor pronoun (considered " +
                     std::to_string(result.considered) + ")");
  }

  std::vector<size_t> female, male, other;
  for (size_t i = 0; i < eligible.size(); ++i) {
    switch (eligible[i].anchor.gender) {
      case Gender::kFemale:
        female.push_back(i);
        break;
      case Gender::kMale:
        male.push_back(i);
        break;
      case Gender::kUnspecified:
        other.push_back(i);
        break;
    }
  }
  result.eligible_female = female.size();
  result.eligible_male = male.size();
  result.eligible_unspecified = other.size();

  SplitMix64 rng(config.seed);
  std::vector<size_t> chosen;
  if (config.gender_balance) {
    size_t per_gender = config.sample_size / 2;
    if (female.size() < per_gender || male.size() < per_gender) {
      per_gender = std::min(female.size(), male.size());
      result.warnings.push_back(
          "balance shortfall: requested " +
          std::to_string(config.sample_size / 2) + " per gender, eligible " +
          std::to_string(female.size()) + " female / " +
          std::to_string(male.size()) + " male; took " +
          std::to_string(per_gender) + " of each");
    }
    if (!other.empty()) {
      result.warnings.push_back(
          std::to_string(other.size()) +
          " eligible sentences with unspecified-gender anchors were left out "
          "of the gender-balanced sample");
    }
    if (per_gender == 0) {
      throw InputError(
          "gender-balanced sample is empty: one gender has no eligible "
          "sentences");
    }
    for (size_t k : SampleWithoutReplacement(female.size(), per_gender, rng)) {
      chosen.push_back(female[k]);
    }
    for (size_t k : SampleWithoutReplacement(male.size(), per_gender, rng)) {
      chosen.push_back(male[k]);
    }
  } else {
    size_t take = config.sample_size;
    if (eligible.size() < take) {
      result.warnings.push_back("sample shortfall: requested " +
                                std::to_string(config.sample_size) +
                                ", eligible " +
                                std::to_string(eligible.size()));
      take = eligible.size();
    }
    chosen = SampleWithoutReplacement(eligible.size(), take, rng);
  }
  std::sort(chosen.begin(), chosen.end());
  result.sentences.reserve(chosen.size());
  for (size_t i : chosen) result.sentences.push_back(std::move(eligible[i]));
  return result;
}

std::string SentencesToJsonl(std::span<const AnchoredSentence> sentences) {
  std::string out;
  for (const AnchoredSentence& s : sentences) {
    Json anchor = {{"token_index", s.anchor.token_index},
                   {"char_start", s.anchor.char_start},
                   {"char_end", s.anchor.char_end},
                   {"form", ToString(s.anchor.form)},
                   {"gender", ToString(s.anchor.gender)}};
    Json record = {{"source_id", s.source_id},
                   {"text", s.text},
                   {"anchor", std::move(anchor)},
                   {"token_count", s.token_count}};
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<AnchoredSentence> SentencesFromJsonl(std::string_view content) {
  std::vector<AnchoredSentence> out;
  size_t line = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    ++line;
    size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view raw = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (IsBlank(raw)) continue;
    const std::string where = "sentences line " + std::to_string(line);
    try {
      const Json j = Json::parse(raw);
      AnchoredSentence s;
      s.source_id = j.at("source_id").get<std::string>();
      s.text = j.at("text").get<std::string>();
      s.token_count = j.at("token_count").get<size_t>();
      const Json& a = j.at("anchor");
      s.anchor.token_index = a.at("token_index").get<size_t>();
      s.anchor.char_start = a.at("char_start").get<size_t>();
      s.anchor.char_end = a.at("char_end").get<size_t>();
      const auto form = ParseAnchorForm(a.at("form").get<std::string>());
      const auto gender = ParseGender(a.at("gender").get<std::string>());
      if (!form || *form == AnchorForm::kObjectOrPossessive || !gender) {
        throw InputError(where + ": bad anchor form or gender");
      }
      s.anchor.form = *form;
      s.anchor.gender = *gender;
      if (s.anchor.char_start >= s.anchor.char_end ||
          s.anchor.char_end > s.text.size()) {
        throw InputError(where + ": anchor span out of bounds");
      }
      out.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace psa
