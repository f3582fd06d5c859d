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

#ifndef PSA_REPORT_H_
#define PSA_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "psa/metrics.h"
#include "psa/perturbation.h"

namespace psa {

inline constexpr const char* kReportSchemaVersion = "1";

// Deterministic facts about how the audit was produced. Wall-clock times
// and cache statistics vary between identical runs and live in the run
// manifest instead.
struct Provenance {
  uint64_t seed = 0;
  std::string config_hash;
  std::string scorer_id;
  std::string scorer_kind;
  std::string corpus_label;
  size_t batch_size = 1;
  std::vector<std::string> extraction_warnings;
};

struct RankedName {
  size_t rank = 0;  // 1-based
  std::string name;
  Gender gender = Gender::kUnspecified;
  std::string category;
  std::string entity_type = "person";
  double score_sens = 0.0;
  size_t n_sentences = 0;
};

struct AuditReport {
  Provenance provenance;
  Analysis analysis;
  std::vector<RankedName> ranked_names;
  bool names_obfuscated = false;
  bool include_original = false;
};

// Sorted by score_sens descending, ties by name ascending.
std::vector<NameSensitivity> RankNames(std::vector<NameSensitivity> per_name);

// Stable pseudonyms "P01", "P02", ... assigned in order of the names'
// SHA-256 digests, so a label depends only on the name set.
std::map<std::string, std::string> ObfuscationLabels(
    std::span<const std::string> names);

// `names` supplies gender/category metadata; names not found get defaults.
AuditReport AssembleReport(const Analysis& analysis,
                           std::span<const NameEntry> names,
                           Provenance provenance, bool obfuscate_names,
                           bool include_original);

nlohmann::json ReportToJson(const AuditReport& report);

// Sorted keys, two-space indent, LF line ends, trailing newline; floats
// printed with 6 significant digits. Throws on non-finite numbers.
std::string CanonicalJson(const nlohmann::json& value);

// Full-precision CSV tables.
std::string PerNameCsv(const AuditReport& report);
std::string ThresholdCurveCsv(const AuditReport& report);
std::string SentenceStatsCsv(const AuditReport& report);
std::string AggregatesCsv(const AuditReport& report);

enum class ReportFormat { kJson, kCsvBundle };

// Writes report.json or the four CSV files into `dir` (created if needed).
// Throws InputError if the directory cannot be written.
void EmitReport(const AuditReport& report, const std::filesystem::path& dir,
                ReportFormat format);

// Writes `content` to `path` via a temporary file and rename.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content);
std::string ReadFile(const std::filesystem::path& path);

}  // namespace psa

#endif  // PSA_REPORT_H_
