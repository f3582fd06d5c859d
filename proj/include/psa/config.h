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

#ifndef PSA_CONFIG_H_
#define PSA_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "psa/corpus.h"
#include "psa/metrics.h"
#include "psa/scoring.h"

namespace psa {

struct AuditFlags {
  bool allow_partial = false;
  bool match_gender = false;
  bool include_original = false;
  bool obfuscate_names = false;
  bool skip_malformed = false;
};

// Either an explicit threshold list or a step across the scorer range.
struct ThresholdSpec {
  double step = 0.05;
  std::vector<double> values;
};

struct AuditConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::kPlainLines;
  std::string corpus_label;  // defaults to the corpus file stem
  ExtractionConfig extraction;
  std::filesystem::path names_path;
  ScorerSpec scorer;
  std::string bearer_token_env;  // env var holding the bearer token
  ThresholdSpec thresholds;
  CorrelationMethod correlation = CorrelationMethod::kPearson;
  std::filesystem::path output_dir = "psa_out";
  std::filesystem::path cache_dir = ".psa_cache";
  AuditFlags flags;

  // Full validation; throws ConfigError naming the field.
  void Validate() const;
  std::vector<double> ResolvedThresholds() const;
};

// Parses a config object. Relative paths resolve against `base_dir`.
// Unknown keys are rejected.
AuditConfig ConfigFromJson(const nlohmann::json& j,
                           const std::filesystem::path& base_dir);
AuditConfig LoadConfig(const std::filesystem::path& path);

// Every setting, defaults included.
nlohmann::json ConfigToJson(const AuditConfig& config);

// SHA-256 over the settings that influence results. Input files contribute
// their content digests (not their paths); output and cache locations are
// left out.
std::string ConfigHash(const AuditConfig& config);

}  // namespace psa

#endif  // PSA_CONFIG_H_
