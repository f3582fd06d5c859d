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

#include "psa/pipeline.h"

#include <chrono>
#include <ctime>
#include <cstdlib>
#include <unordered_map>

#include "psa/errors.h"
#include "psa/perturbation.h"
#include "psa/report.h"

namespace psa {
namespace {

using Json = nlohmann::json;

void Log(const StageOptions& options, const std::string& message) {
  if (options.log) *options.log << message << '\n';
}

std::string UtcNow() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json ReadJson(const std::filesystem::path& path) {
  Json j = Json::parse(ReadFile(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw InputError(path.string() + ": not valid JSON");
  return j;
}

std::vector<AnchoredSentence> ReadSentences(const AuditConfig& config) {
  const auto path = config.output_dir / kSentencesFile;
  if (!std::filesystem::exists(path)) {
    throw InputError(path.string() + " not found; run the extract stage");
  }
  return SentencesFromJsonl(ReadFile(path));
}

// Non-owning adapter so a shared test backend can sit behind Scorer's
// unique_ptr.
class SharedBackend : public ScorerBackend {
 public:
  explicit SharedBackend(std::shared_ptr<ScorerBackend> inner)
      : inner_(std::move(inner)) {}
  std::vector<ScoreOutcome> ScoreBatch(
      std::span<const std::string> texts) override {
    return inner_->ScoreBatch(texts);
  }

 private:
  std::shared_ptr<ScorerBackend> inner_;
};

Json PointJson(const ThresholdPoint& t) {
  return {{"threshold", t.threshold},
          {"label_dist", t.label_dist},
          {"flips_to_positive", t.flips_to_positive},
          {"flips_to_negative", t.flips_to_negative}};
}

}  // namespace

void RunExtract(const AuditConfig& config, const StageOptions& options) {
  config.Validate();
  LoadOptions load;
  load.skip_malformed = config.flags.skip_malformed;
  load.source_label = config.corpus_label;
  const LoadResult loaded =
      LoadCorpus(config.corpus_path, config.corpus_format, load);
  const ExtractionResult extracted =
      ExtractAnchoredSentences(loaded.comments, config.extraction);
  Log(options, "extract: " + std::to_string(loaded.comments.size()) +
                   " comments, " + std::to_string(extracted.sentences.size()) +
                   " anchored sentences selected");
  for (const std::string& w : extracted.warnings) Log(options, "warning: " + w);

  size_t female = 0, male = 0;
  for (const AnchoredSentence& s : extracted.sentences) {
    female += s.anchor.gender == Gender::kFemale;
    male += s.anchor.gender == Gender::kMale;
  }
  Json meta = {{"corpus", config.corpus_label},
               {"seed", config.extraction.seed},
               {"comments_loaded", loaded.comments.size()},
               {"records_skipped", loaded.skipped},
               {"skipped_records", loaded.skipped_records},
               {"too_long", extracted.too_long},
               {"no_anchor", extracted.no_anchor},
               {"duplicates", extracted.duplicates},
               {"eligible_female", extracted.eligible_female},
               {"eligible_male", extracted.eligible_male},
               {"eligible_unspecified", extracted.eligible_unspecified},
               {"selected", extracted.sentences.size()},
               {"selected_female", female},
               {"selected_male", male},
               {"warnings", extracted.warnings}};
  WriteFileAtomic(config.output_dir / kSentencesFile,
                  SentencesToJsonl(extracted.sentences));
  WriteFileAtomic(config.output_dir / kExtractMetaFile, meta.dump(2) + "\n");
}

void RunPerturb(const AuditConfig& config, const StageOptions& options) {
  config.Validate();
  const std::vector<AnchoredSentence> sentences = ReadSentences(config);
  const std::vector<NameEntry> names = LoadNames(config.names_path);
  GridOptions grid_options;
  grid_options.match_gender = config.flags.match_gender;
  const auto grid = GenerateGrid(sentences, names, grid_options);
  Log(options, "perturb: " + std::to_string(sentences.size()) + " sentences x " +
                   std::to_string(names.size()) + " names -> " +
                   std::to_string(grid.size()) + " perturbed sentences");
  WriteFileAtomic(config.output_dir / kGridFile,
                  GridToJsonl(grid, sentences, names));
}

ScoreManifest RunScore(const AuditConfig& config, const StageOptions& options) {
  config.Validate();
  const std::string started = UtcNow();
  const std::vector<AnchoredSentence> sentences = ReadSentences(config);
  const std::vector<NameEntry> names = LoadNames(config.names_path);
  const auto grid_path = config.output_dir / kGridFile;
  if (!std::filesystem::exists(grid_path)) {
    throw InputError(grid_path.string() + " not found; run the perturb stage");
  }
  const std::vector<GridRecord> records = GridFromJsonl(ReadFile(grid_path));

  std::unordered_map<std::string, size_t> sentence_index, name_index;
  for (size_t i = 0; i < sentences.size(); ++i) {
    sentence_index[sentences[i].source_id] = i;
  }
  for (size_t j = 0; j < names.size(); ++j) name_index[names[j].name] = j;
  std::vector<PerturbedSentence> grid;
  grid.reserve(records.size());
  for (const GridRecord& r : records) {
    auto si = sentence_index.find(r.source_id);
    auto ni = name_index.find(r.name);
    if (si == sentence_index.end() || ni == name_index.end()) {
      throw InputError("grid entry (" + r.source_id + ", " + r.name +
                       ") does not match sentences/names; rerun perturb");
    }
    grid.push_back({si->second, ni->second, r.text});
  }

  ScorerSpec spec = config.scorer;
  if (!config.bearer_token_env.empty()) {
    if (const char* token = std::getenv(config.bearer_token_env.c_str())) {
      spec.bearer_token = token;
    }
  }
  std::unique_ptr<ScorerBackend> backend =
      options.backend ? std::make_unique<SharedBackend>(options.backend)
                      : MakeBackend(spec);
  const auto cache_dir =
      options.cache_dir.empty() ? config.cache_dir : options.cache_dir;
  auto cache = std::make_shared<ScoreCache>(cache_dir, spec.scorer_id);
  Scorer scorer(spec, std::move(backend), cache);

  MatrixBuild build = BuildScoreMatrix(scorer, sentences, names, grid);
  Log(options, "score: " + std::to_string(build.manifest.total_cells) +
                   " cells, " + std::to_string(build.manifest.cached) +
                   " cached, " + std::to_string(build.manifest.requested) +
                   " requested, " + std::to_string(build.manifest.failed) +
                   " failed");

  WriteFileAtomic(config.output_dir / kMatrixFile,
                  MatrixToJson(build.matrix).dump() + "\n");
  Json manifest = build.manifest.ToJson();
  manifest["scorer_id"] = spec.scorer_id;
  manifest["cache_file"] = cache->path().string();
  manifest["started_at"] = started;
  manifest["finished_at"] = UtcNow();
  WriteFileAtomic(config.output_dir / kManifestFile, manifest.dump(2) + "\n");

  const ScoreManifest& m = build.manifest;
  if (m.failed > 0 && m.failed == m.total_cells) {
    throw TransportError("no cell could be scored by '" + spec.scorer_id +
                         "': " + build.first_error);
  }
  if (!config.flags.allow_partial) build.matrix.RequireComplete();
  return build.manifest;
}

Analysis RunAnalyze(const AuditConfig& config, const StageOptions& options) {
  config.Validate();
  const auto path = config.output_dir / kMatrixFile;
  if (!std::filesystem::exists(path)) {
    throw InputError(path.string() + " not found; run the score stage");
  }
  const ScoreMatrix matrix = MatrixFromJson(ReadJson(path));
  AnalysisOptions analysis_options;
  analysis_options.allow_partial = config.flags.allow_partial;
  analysis_options.include_original = config.flags.include_original;
  analysis_options.correlation = config.correlation;
  analysis_options.thresholds = config.ResolvedThresholds();
  ValidateThresholds(analysis_options.thresholds, matrix.score_min,
                     matrix.score_max);
  Analysis analysis = Analyze(matrix, analysis_options);
  Log(options, "analyze: ScoreDev " + std::to_string(analysis.score_dev) +
                   ", ScoreRange " + std::to_string(analysis.score_range));
  WriteFileAtomic(config.output_dir / kAnalysisFile,
                  AnalysisToJson(analysis).dump(2) + "\n");
  return analysis;
}

void RunReport(const AuditConfig& config, const StageOptions& options) {
  config.Validate();
  const auto analysis_path = config.output_dir / kAnalysisFile;
  if (!std::filesystem::exists(analysis_path)) {
    throw InputError(analysis_path.string() +
                     " not found; run the analyze stage");
  }
  const Analysis analysis = AnalysisFromJson(ReadJson(analysis_path));
  const std::vector<NameEntry> names = LoadNames(config.names_path);

  Provenance provenance;
  provenance.seed = config.extraction.seed;
  provenance.config_hash = ConfigHash(config);
  provenance.scorer_id = config.scorer.scorer_id;
  provenance.scorer_kind = std::string(ToString(config.scorer.kind));
  provenance.corpus_label = config.corpus_label;
  provenance.batch_size = config.scorer.batch_size;
  const auto meta_path = config.output_dir / kExtractMetaFile;
  if (std::filesystem::exists(meta_path)) {
    const Json meta = ReadJson(meta_path);
    provenance.extraction_warnings =
        meta.value("warnings", std::vector<std::string>{});
  }
  const AuditReport report =
      AssembleReport(analysis, names, provenance, config.flags.obfuscate_names,
                     config.flags.include_original);
  EmitReport(report, config.output_dir, ReportFormat::kJson);
  EmitReport(report, config.output_dir, ReportFormat::kCsvBundle);
  Log(options, "report: wrote " + (config.output_dir / kReportFile).string());
}

void RunAll(const AuditConfig& config, const StageOptions& options) {
  RunExtract(config, options);
  RunPerturb(config, options);
  RunScore(config, options);
  RunAnalyze(config, options);
  RunReport(config, options);
}

Json AnalysisToJson(const Analysis& a) {
  Json per_name = Json::array();
  for (const NameSensitivity& n : a.per_name) {
    per_name.push_back({{"name", n.name},
                        {"score_sens", n.score_sens},
                        {"n_sentences", n.n_sentences}});
  }
  Json sentences = Json::array();
  for (const SentenceStats& s : a.sentences) {
    sentences.push_back({{"sentence_id", s.sentence_id},
                         {"base_score", s.base_score},
                         {"std_dev", s.std_dev},
                         {"range", s.range},
                         {"mean_abs_delta", s.mean_abs_delta},
                         {"mitigated_score", s.mitigated_score},
                         {"n_names", s.n_names}});
  }
  Json curve = Json::array();
  for (const ThresholdPoint& t : a.threshold_curve) curve.push_back(PointJson(t));
  Json corr = {{"method", ToString(a.correlation.method)},
               {"value", a.correlation.value ? Json(*a.correlation.value)
                                             : Json(nullptr)},
               {"undefined_reason", a.correlation.undefined_reason}};
  return {{"per_name", per_name},
          {"sentences", sentences},
          {"score_dev", a.score_dev},
          {"score_range", a.score_range},
          {"threshold_curve", curve},
          {"correlation", corr},
          {"num_sentences", a.num_sentences},
          {"num_names", a.num_names},
          {"failed_cells", a.failed_cells},
          {"failed_base", a.failed_base},
          {"excluded_cells", a.excluded_cells},
          {"warnings", a.warnings}};
}

Analysis AnalysisFromJson(const Json& j) {
  try {
    Analysis a;
    for (const Json& n : j.at("per_name")) {
      a.per_name.push_back({n.at("name").get<std::string>(),
                            n.at("score_sens").get<double>(),
                            n.at("n_sentences").get<size_t>()});
    }
    for (const Json& s : j.at("sentences")) {
      SentenceStats st;
      st.sentence_id = s.at("sentence_id").get<std::string>();
      st.base_score = s.at("base_score").get<double>();
      st.std_dev = s.at("std_dev").get<double>();
      st.range = s.at("range").get<double>();
      st.mean_abs_delta = s.at("mean_abs_delta").get<double>();
      st.mitigated_score = s.at("mitigated_score").get<double>();
      st.n_names = s.at("n_names").get<size_t>();
      a.sentences.push_back(std::move(st));
    }
    a.score_dev = j.at("score_dev").get<double>();
    a.score_range = j.at("score_range").get<double>();
    for (const Json& t : j.at("threshold_curve")) {
      a.threshold_curve.push_back({t.at("threshold").get<double>(),
                                   t.at("label_dist").get<double>(),
                                   t.at("flips_to_positive").get<size_t>(),
                                   t.at("flips_to_negative").get<size_t>()});
    }
    const Json& c = j.at("correlation");
    auto method = ParseCorrelationMethod(c.at("method").get<std::string>());
    if (!method) throw InputError("analysis: unknown correlation method");
    a.correlation.method = *method;
    if (!c.at("value").is_null()) a.correlation.value = c["value"].get<double>();
    a.correlation.undefined_reason = c.at("undefined_reason").get<std::string>();
    a.num_sentences = j.at("num_sentences").get<size_t>();
    a.num_names = j.at("num_names").get<size_t>();
    a.failed_cells = j.at("failed_cells").get<size_t>();
    a.failed_base = j.at("failed_base").get<size_t>();
    a.excluded_cells = j.at("excluded_cells").get<size_t>();
    a.warnings = j.at("warnings").get<std::vector<std::string>>();
    return a;
  } catch (const Json::exception& e) {
    throw InputError(std::string("analysis.json: ") + e.what());
  }
}

}  // namespace psa
