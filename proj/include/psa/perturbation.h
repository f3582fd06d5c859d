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

#ifndef PSA_PERTURBATION_H_
#define PSA_PERTURBATION_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psa/corpus.h"

namespace psa {

// A name swapped into anchored sentences. Gender is metadata for reporting
// (and for GridOptions::match_gender); it does not affect rendering.
struct NameEntry {
  std::string name;
  Gender gender = Gender::kUnspecified;
  std::string category;
  std::string entity_type = "person";
};

// Names CSV with header "name,gender,category,entity_type". Only "name" is
// required. Names must be non-empty, newline-free and unique.
std::vector<NameEntry> ParseNamesCsv(std::string_view content);
std::vector<NameEntry> LoadNames(const std::filesystem::path& path);

struct PerturbedSentence {
  size_t sentence = 0;  // index into the sentence list
  size_t name = 0;      // index into the name list
  std::string text;
};

// Replaces the anchor span with the name. Possessive anchors become
// "<name>'s". Bytes outside the span are untouched. Throws InputError if the
// span does not fit the text.
std::string RenderSubstitution(const AnchoredSentence& sentence,
                               const NameEntry& name);

struct GridOptions {
  // Only pair names with anchors of the same gender (names with
  // unspecified gender pair with everything).
  bool match_gender = false;
};

bool PairIncluded(const AnchoredSentence& sentence, const NameEntry& name,
                  const GridOptions& options);

// Sentence-major |X| x |N| grid. Throws InputError naming an empty input.
std::vector<PerturbedSentence> GenerateGrid(
    std::span<const AnchoredSentence> sentences,
    std::span<const NameEntry> names, const GridOptions& options = {});

// Grid persistence: one {source_id, name, text} object per line.
std::string GridToJsonl(std::span<const PerturbedSentence> grid,
                        std::span<const AnchoredSentence> sentences,
                        std::span<const NameEntry> names);

struct GridRecord {
  std::string source_id;
  std::string name;
  std::string text;
};
std::vector<GridRecord> GridFromJsonl(std::string_view content);

}  // namespace psa

#endif  // PSA_PERTURBATION_H_
