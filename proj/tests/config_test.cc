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

#include "psa/config.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "psa/errors.h"

namespace psa {
namespace {

namespace fs = std::filesystem;

nlohmann::json MinimalConfig() {
  return nlohmann::json::parse(R"({
    "corpus": {"path": "corpus.txt"},
    "names_path": "names.csv",
    "scorer": {"kind": "builtin-lexicon", "scorer_id": "lex",
               "lexicon": {"word_weights": {"bad": 0.5}}}
  })");
}

std::string FieldOf(const nlohmann::json& j) {
  try {
    ConfigFromJson(j, "/base").Validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

TEST(ConfigTest, DefaultsAndPathResolution) {
  const AuditConfig c = ConfigFromJson(MinimalConfig(), "/base");
  EXPECT_EQ(c.corpus_path, fs::path("/base/corpus.txt"));
  EXPECT_EQ(c.names_path, fs::path("/base/names.csv"));
  EXPECT_EQ(c.corpus_label, "corpus");
  EXPECT_EQ(c.extraction.max_words, 50u);
  EXPECT_EQ(c.extraction.sample_size, 1000u);
  EXPECT_EQ(c.scorer.kind, ScorerKind::kBuiltinLexicon);
  EXPECT_EQ(c.ResolvedThresholds().size(), 21u);
  EXPECT_EQ(c.correlation, CorrelationMethod::kPearson);
  EXPECT_NO_THROW(c.Validate());
}

TEST(ConfigTest, ThresholdsOutsideRangeNameTheField) {
  auto j = MinimalConfig();
  j["thresholds"] = {0.2, 1.5};
  EXPECT_EQ(FieldOf(j), "thresholds");
  j["thresholds"] = {{"values", {-0.1}}};
  EXPECT_EQ(FieldOf(j), "thresholds");
  j["thresholds"] = {{"step", 0}};
  EXPECT_EQ(FieldOf(j), "thresholds");
  j["thresholds"] = "often";
  EXPECT_EQ(FieldOf(j), "thresholds");
  j["thresholds"] = {0.25, 0.5};
  EXPECT_EQ(FieldOf(j), "");
}

TEST(ConfigTest, SignedScoreRangeGrid) {
  auto j = MinimalConfig();
  j["scorer"]["score_min"] = -1.0;
  const AuditConfig c = ConfigFromJson(j, "/base");
  const auto grid = c.ResolvedThresholds();
  ASSERT_EQ(grid.size(), 41u);
  EXPECT_EQ(grid.front(), -1.0);
}

TEST(ConfigTest, UnknownKeysRejected) {
  auto j = MinimalConfig();
  j["colour"] = "blue";
  EXPECT_EQ(FieldOf(j), "colour");
  j = MinimalConfig();
  j["scorer"]["retries"] = 3;
  EXPECT_EQ(FieldOf(j), "scorer.retries");
}

TEST(ConfigTest, FieldSpecificErrors) {
  auto j = MinimalConfig();
  j.erase("names_path");
  EXPECT_EQ(FieldOf(j), "names_path");
  j = MinimalConfig();
  j["scorer"]["kind"] = "oracle";
  EXPECT_EQ(FieldOf(j), "scorer.kind");
  j = MinimalConfig();
  j["scorer"]["max_in_flight"] = -2;
  EXPECT_EQ(FieldOf(j), "scorer.max_in_flight");
  j = MinimalConfig();
  j["scorer"].erase("lexicon");
  EXPECT_EQ(FieldOf(j), "scorer.lexicon");
  j = MinimalConfig();
  j["extraction"] = {{"her_disambiguation", "guess"}};
  EXPECT_EQ(FieldOf(j), "extraction.her_disambiguation");
  j = MinimalConfig();
  j["correlation"] = "kendall";
  EXPECT_EQ(FieldOf(j), "correlation");
  j = MinimalConfig();
  j["scorer"]["kind"] = "remote-http";
  EXPECT_EQ(FieldOf(j), "scorer.endpoint");
}

TEST(ConfigTest, HashIgnoresLocationsButNotSettings) {
  const fs::path dir = fs::temp_directory_path() / "psa_config_hash";
  fs::create_directories(dir);
  std::ofstream(dir / "corpus.txt") << "He won.\n";
  std::ofstream(dir / "names.csv") << "name\nA\n";
  AuditConfig a = ConfigFromJson(MinimalConfig(), dir);
  AuditConfig b = a;
  b.output_dir = "/elsewhere";
  b.cache_dir = "/elsewhere/cache";
  b.scorer.max_in_flight = 9;
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.extraction.seed = 1;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
  const std::string before = ConfigHash(a);
  std::ofstream(dir / "corpus.txt") << "She won.\n";
  EXPECT_NE(ConfigHash(a), before);
  fs::remove_all(dir);
}

TEST(ConfigTest, LoadConfigErrors) {
  EXPECT_THROW(LoadConfig("/nonexistent/config.json"), ConfigError);
  const fs::path path = fs::temp_directory_path() / "psa_bad_config.json";
  std::ofstream(path) << "{not json";
  EXPECT_THROW(LoadConfig(path), ConfigError);
  fs::remove(path);
}

TEST(ConfigTest, PrintedConfigRoundTrips) {
  const AuditConfig c = ConfigFromJson(MinimalConfig(), "/base");
  const nlohmann::json printed = ConfigToJson(c);
  const AuditConfig again = ConfigFromJson(printed, "/other");
  EXPECT_EQ(ConfigToJson(again), printed);
}

}  // namespace
}  // namespace psa
