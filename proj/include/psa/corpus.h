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

// Corpus ingestion: loading raw comments, locating pronoun anchors, and
// drawing a reproducible, gender-balanced sample of anchored sentences.

#ifndef PSA_CORPUS_H_
#define PSA_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psa {

enum class Gender { kFemale, kMale, kUnspecified };

// Grammatical role of an anchor pronoun. kObjectOrPossessive only appears
// in an anchor inventory (for "her"); FindAnchors() always resolves it.
enum class AnchorForm {
  kSubject,
  kObject,
  kPossessiveDeterminer,
  kPossessivePronoun,
  kObjectOrPossessive,
};

std::string_view ToString(Gender g);
std::string_view ToString(AnchorForm f);
std::optional<Gender> ParseGender(std::string_view s);
std::optional<AnchorForm> ParseAnchorForm(std::string_view s);

struct RawComment {
  std::string id;
  std::string text;
  std::string source;
};

enum class CorpusFormat { kPlainLines, kCsv, kJsonl };

std::optional<CorpusFormat> ParseCorpusFormat(std::string_view s);

struct LoadOptions {
  bool skip_malformed = false;
  // Corpus label stored in RawComment::source. Defaults to the file stem.
  std::string source_label;
};

struct LoadResult {
  std::vector<RawComment> comments;
  size_t skipped = 0;
  // "<file>:<line>: <reason>" for each skipped record.
  std::vector<std::string> skipped_records;
};

// Reads a corpus file. Ids missing from the record are synthesized as
// "<filename>:<line>". Malformed records throw InputError naming the line
// unless options.skip_malformed is set, in which case they are tallied.
LoadResult LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                      const LoadOptions& options = {});

// As LoadCorpus, over in-memory content. `file_name` is used for ids.
LoadResult ParseCorpus(std::string_view content, std::string_view file_name,
                       CorpusFormat format, const LoadOptions& options = {});

struct AnchorSpan {
  size_t token_index = 0;
  size_t char_start = 0;  // byte offsets, half-open
  size_t char_end = 0;
  AnchorForm form = AnchorForm::kSubject;
  Gender gender = Gender::kUnspecified;
  bool operator==(const AnchorSpan&) const = default;
};

struct AnchoredSentence {
  std::string source_id;
  std::string text;
  AnchorSpan anchor;
  size_t token_count = 0;
  bool operator==(const AnchoredSentence&) const = default;
};

struct InventoryEntry {
  std::string surface;  // lowercase
  AnchorForm form = AnchorForm::kSubject;
  Gender gender = Gender::kUnspecified;
};

enum class HerDisambiguation { kHeuristic, kExclude };

// he, she, him, her (ambiguous), his, hers. Reflexives are left out because
// substituting a name for them is ungrammatical.
std::vector<InventoryEntry> DefaultAnchorInventory();

struct ExtractionConfig {
  size_t max_words = 50;
  size_t sample_size = 1000;
  uint64_t seed = 0;
  std::vector<InventoryEntry> anchor_inventory = DefaultAnchorInventory();
  bool gender_balance = true;
  HerDisambiguation her_disambiguation = HerDisambiguation::kHeuristic;

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

// Lowercase tokens that, when they directly follow an ambiguous "her",
// mark it as an object rather than a possessive determiner ("I met her
// yesterday", "gave her a ride", "told her that").
bool IsHerObjectFollower(std::string_view lower_token);

// Every token whose lowercase form is in the inventory, in text order.
std::vector<AnchorSpan> FindAnchors(std::string_view text,
                                    const ExtractionConfig& config);

struct ExtractionResult {
  std::vector<AnchoredSentence> sentences;
  size_t considered = 0;
  size_t too_long = 0;
  size_t no_anchor = 0;
  size_t duplicates = 0;
  size_t eligible_female = 0;
  size_t eligible_male = 0;
  size_t eligible_unspecified = 0;
  std::vector<std::string> warnings;
};

// Filters (length, anchor presence, exact-text duplicates), picks the
// leftmost anchor, and samples per the config. Output keeps corpus order.
// Throws InputError when nothing is eligible.
ExtractionResult ExtractAnchoredSentences(std::span<const RawComment> comments,
                                          const ExtractionConfig& config);

// JSONL persistence: {source_id, text, anchor:{token_index, char_start,
// char_end, form, gender}, token_count}.
std::string SentencesToJsonl(std::span<const AnchoredSentence> sentences);
std::vector<AnchoredSentence> SentencesFromJsonl(std::string_view content);

}  // namespace psa

#endif  // PSA_CORPUS_H_
