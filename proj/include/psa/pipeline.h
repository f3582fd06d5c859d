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

// Audit stages. Each stage reads the artifacts of the previous one from the
// output directory and writes its own, so any stage can be rerun alone:
//
//   extract  corpus            -> sentences.jsonl, extract_meta.json
//   perturb  sentences + names -> grid.jsonl
//   score    sentences + grid  -> matrix.json, score_manifest.json
//   analyze  matrix            -> analysis.json
//   report   analysis + meta   -> report.json, *.csv

#ifndef PSA_PIPELINE_H_
#define PSA_PIPELINE_H_

#include <memory>
#include <ostream>

#include "json.hpp"
#include "psa/config.h"
#include "psa/metrics.h"
#include "psa/scoring.h"

namespace psa {

inline constexpr const char* kSentencesFile = "sentences.jsonl";
inline constexpr const char* kExtractMetaFile = "extract_meta.json";
inline constexpr const char* kGridFile = "grid.jsonl";
inline constexpr const char* kMatrixFile = "matrix.json";
inline constexpr const char* kManifestFile = "score_manifest.json";
inline constexpr const char* kAnalysisFile = "analysis.json";
inline constexpr const char* kReportFile = "report.json";

struct StageOptions {
  // Progress messages; null silences them.
  std::ostream* log = nullptr;
  // Replaces the backend built from the config (tests, instrumentation).
  std::shared_ptr<ScorerBackend> backend;
  // Overrides config.cache_dir (the CLI feeds PSA_CACHE_DIR here).
  std::filesystem::path cache_dir;
};

void RunExtract(const AuditConfig& config, const StageOptions& options = {});
void RunPerturb(const AuditConfig& config, const StageOptions& options = {});
// Writes the matrix even when cells failed, then throws PartialMatrixError
// unless flags.allow_partial is set.
ScoreManifest RunScore(const AuditConfig& config,
                       const StageOptions& options = {});
Analysis RunAnalyze(const AuditConfig& config, const StageOptions& options = {});
void RunReport(const AuditConfig& config, const StageOptions& options = {});
void RunAll(const AuditConfig& config, const StageOptions& options = {});

nlohmann::json AnalysisToJson(const Analysis& a);
Analysis AnalysisFromJson(const nlohmann::json& j);

}  // namespace psa

#endif  // PSA_PIPELINE_H_
