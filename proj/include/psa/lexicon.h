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

#ifndef PSA_LEXICON_H_
#define PSA_LEXICON_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace psa {

// Configuration of the builtin additive scorer:
//
//   score = intercept + sum(word_weights[token] for token in text)
//                     + sum(name_bias[n] for each distinct name n in text)
//
// Tokens are looked up lowercased. Names match case-sensitively at word
// boundaries (neighbouring bytes must not be letters or digits, so the
// possessive "Name's" still matches); where two names overlap the longer
// one wins.
struct LexiconConfig {
  std::map<std::string, double> word_weights;
  std::map<std::string, double> name_bias;
  double intercept = 0.0;
  bool clip = false;
  double clip_min = 0.0;
  double clip_max = 1.0;
};

LexiconConfig LexiconFromJson(const nlohmann::json& j);
nlohmann::json LexiconToJson(const LexiconConfig& config);

// Pure function of (config, text). Precomputes the name matcher.
class LexiconScorer {
 public:
  explicit LexiconScorer(LexiconConfig config);

  double Score(std::string_view text) const;

  // Names found in `text` after longest-match resolution, in text order.
  std::vector<std::string> MatchNames(std::string_view text) const;

  const LexiconConfig& config() const { return config_; }

 private:
  LexiconConfig config_;
  // Names bucketed by first byte, longest first.
  std::vector<std::vector<const std::string*>> by_first_byte_;
};

double LexiconScore(const LexiconConfig& config, std::string_view text);

}  // namespace psa

#endif  // PSA_LEXICON_H_
