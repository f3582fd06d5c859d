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

#include "psa/lexicon.h"

#include <algorithm>
#include <set>

#include "psa/errors.h"
#include "psa/tokenize.h"

namespace psa {
namespace {

bool IsWordByte(char ch) {
  const auto b = static_cast<unsigned char>(ch);
  return (b >= '0' && b <= '9') || (b >= 'a' && b <= 'z') ||
         (b >= 'A' && b <= 'Z') || b >= 0x80;
}

}  // namespace

LexiconConfig LexiconFromJson(const nlohmann::json& j) {
  LexiconConfig c;
  try {
    if (j.contains("word_weights")) {
      for (const auto& [word, weight] : j.at("word_weights").items()) {
        c.word_weights[AsciiLower(word)] = weight.get<double>();
      }
    }
    if (j.contains("name_bias")) {
      for (const auto& [name, bias] : j.at("name_bias").items()) {
        if (name.empty()) {
          throw ConfigError("scorer.lexicon.name_bias", "empty name");
        }
        c.name_bias[name] = bias.get<double>();
      }
    }
    c.intercept = j.value("intercept", 0.0);
    c.clip = j.value("clip", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scorer.lexicon", e.what());
  }
  return c;
}

nlohmann::json LexiconToJson(const LexiconConfig& config) {
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [w, v] : config.word_weights) weights[w] = v;
  nlohmann::json bias = nlohmann::json::object();
  for (const auto& [n, v] : config.name_bias) bias[n] = v;
  return {{"word_weights", weights},
          {"name_bias", bias},
          {"intercept", config.intercept},
          {"clip", config.clip}};
}

LexiconScorer::LexiconScorer(LexiconConfig config)
    : config_(std::move(config)), by_first_byte_(256) {
  for (const auto& [name, bias] : config_.name_bias) {
    by_first_byte_[static_cast<unsigned char>(name.front())].push_back(&name);
  }
  for (auto& bucket : by_first_byte_) {
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const std::string* a, const std::string* b) {
                       return a->size() > b->size();
                     });
  }
}

std::vector<std::string> LexiconScorer::MatchNames(
    std::string_view text) const {
  std::vector<std::string> found;
  size_t pos = 0;
  while (pos < text.size()) {
    const bool at_boundary = pos == 0 || !IsWordByte(text[pos - 1]);
    const std::string* match = nullptr;
    if (at_boundary) {
      for (const std::string* name :
           by_first_byte_[static_cast<unsigned char>(text[pos])]) {
        if (text.compare(pos, name->size(), *name) != 0) continue;
        const size_t end = pos + name->size();
        if (end < text.size() && IsWordByte(text[end])) continue;
        match = name;
        break;
      }
    }
    if (match) {
      found.push_back(*match);
      pos += match->size();
    } else {
      ++pos;
    }
  }
  return found;
}

double LexiconScorer::Score(std::string_view text) const {
  double score = config_.intercept;
  if (!config_.word_weights.empty()) {
    for (const Token& t : Tokenize(text)) {
      auto it = config_.word_weights.find(AsciiLower(t.text));
      if (it != config_.word_weights.end()) score += it->second;
    }
  }
  if (!config_.name_bias.empty()) {
    std::vector<std::string> names = MatchNames(text);
    std::set<std::string_view> distinct;
    for (const std::string& n : names) {
      if (distinct.insert(n).second) score += config_.name_bias.at(n);
    }
  }
  if (config_.clip) {
    score = std::clamp(score, config_.clip_min, config_.clip_max);
  }
  return score;
}

double LexiconScore(const LexiconConfig& config, std::string_view text) {
  return LexiconScorer(config).Score(text);
}

}  // namespace psa
