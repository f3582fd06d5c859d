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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "psa/config.h"
#include "psa/errors.h"
#include "psa/report.h"
#include "testing/demo_bundle.h"

namespace psa {
namespace {

namespace fs = std::filesystem;

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("psa_pipeline_" + std::string(::testing::UnitTest::GetInstance()
                                               ->current_test_info()
                                               ->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  static nlohmann::json SubprocessScorer(const std::string& flags) {
    return {{"kind", "subprocess"},
            {"scorer_id", "fake"},
            {"command", std::string(PSA_FAKE_SCORER) + " " + flags},
            {"retry_limit", 1},
            {"backoff_base_ms", 1}};
  }

  // Runs the CLI and returns its exit code.
  static int Cli(const std::string& args, const std::string& env = "") {
    const std::string cmd =
        env + " " + std::string(PSA_AUDIT_BIN) + " -q " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path root_;
};

TEST_F(PipelineTest, DemoRunWritesEveryArtifact) {
  const AuditConfig config = LoadConfig(testing::MakeDemoCopy(root_ / "a"));
  RunAll(config);
  for (const char* f : {kSentencesFile, kExtractMetaFile, kGridFile, kMatrixFile,
                        kManifestFile, kAnalysisFile, kReportFile, "per_name.csv",
                        "threshold_curve.csv", "sentence_stats.csv",
                        "aggregates.csv"}) {
    EXPECT_TRUE(fs::exists(config.output_dir / f)) << f;
  }
  const auto report = nlohmann::json::parse(ReadFile(config.output_dir / kReportFile));
  EXPECT_EQ(report["schema_version"], "1");
  EXPECT_EQ(report["aggregates"]["n_sentences"], 30);
  EXPECT_EQ(report["aggregates"]["n_names"], 10);
}

TEST_F(PipelineTest, TwoRunsAreByteIdentical) {
  const AuditConfig a = LoadConfig(testing::MakeDemoCopy(root_ / "a"));
  const AuditConfig b = LoadConfig(testing::MakeDemoCopy(root_ / "b"));
  RunAll(a);
  RunAll(b);
  EXPECT_EQ(ReadFile(a.output_dir / kReportFile), ReadFile(b.output_dir / kReportFile));
  for (const char* f : {"per_name.csv", "sentence_stats.csv", "aggregates.csv",
                        "threshold_curve.csv", kSentencesFile, kGridFile}) {
    EXPECT_EQ(ReadFile(a.output_dir / f), ReadFile(b.output_dir / f)) << f;
  }
}

TEST_F(PipelineTest, RegeneratingAStageReproducesDownstreamBytes) {
  const AuditConfig config = LoadConfig(testing::MakeDemoCopy(root_ / "a"));
  RunAll(config);
  const std::string report = ReadFile(config.output_dir / kReportFile);
  const std::string matrix = ReadFile(config.output_dir / kMatrixFile);
  fs::remove(config.output_dir / kSentencesFile);
  fs::remove(config.output_dir / kGridFile);
  fs::remove(config.output_dir / kAnalysisFile);
  fs::remove(config.output_dir / kReportFile);
  EXPECT_THROW(RunPerturb(config), InputError);
  RunExtract(config);
  RunPerturb(config);
  RunScore(config);
  EXPECT_EQ(ReadFile(config.output_dir / kMatrixFile), matrix);
  RunAnalyze(config);
  RunReport(config);
  EXPECT_EQ(ReadFile(config.output_dir / kReportFile), report);
}

TEST_F(PipelineTest, SeedChangesSample) {
  AuditConfig a = LoadConfig(testing::MakeDemoCopy(root_ / "a"));
  RunExtract(a);
  const std::string first = ReadFile(a.output_dir / kSentencesFile);
  a.extraction.seed = 43;
  RunExtract(a);
  EXPECT_NE(ReadFile(a.output_dir / kSentencesFile), first);
}

TEST_F(PipelineTest, PartialMatrixWrittenThenReported) {
  const nlohmann::json scorer = SubprocessScorer("--fail-marker Hanks");
  AuditConfig config = LoadConfig(testing::MakeDemoCopy(root_ / "a", &scorer));
  RunExtract(config);
  RunPerturb(config);
  try {
    RunScore(config);
    FAIL() << "expected PartialMatrixError";
  } catch (const PartialMatrixError& e) {
    EXPECT_EQ(e.cells().size(), 30u);
    EXPECT_NE(e.cells()[0].find("Hanks"), std::string::npos);
  }
  EXPECT_TRUE(fs::exists(config.output_dir / kMatrixFile));
  EXPECT_THROW(RunAnalyze(config), PartialMatrixError);
  config.flags.allow_partial = true;
  RunAnalyze(config);
  RunReport(config);
  const auto report = nlohmann::json::parse(ReadFile(config.output_dir / kReportFile));
  EXPECT_EQ(report["provenance"]["failed_cells"], 30);
}

TEST_F(PipelineTest, InjectedBackendIsUsed) {
  const AuditConfig config = LoadConfig(testing::MakeDemoCopy(root_ / "a"));
  RunExtract(config);
  RunPerturb(config);
  StageOptions options;
  options.backend = std::make_shared<LexiconBackend>(LexiconConfig{.intercept = 0.5});
  options.cache_dir = root_ / "other_cache";
  const ScoreManifest m = RunScore(config, options);
  EXPECT_EQ(m.total_cells, 330u);
  EXPECT_EQ(m.cached + m.requested, 330u);
  EXPECT_TRUE(fs::exists(root_ / "other_cache" / "demo-lexicon-v1.jsonl"));
}

TEST_F(PipelineTest, CliExitCodes) {
  const fs::path ok = testing::MakeDemoCopy(root_ / "ok");
  EXPECT_EQ(Cli("--config " + ok.string() + " run"), 0);
  EXPECT_TRUE(fs::exists(root_ / "ok" / "out" / kReportFile));
  EXPECT_EQ(Cli("--config " + ok.string() + " analyze"), 0);

  EXPECT_EQ(Cli("run"), 2);
  EXPECT_EQ(Cli("--config /nonexistent.json run"), 2);
  EXPECT_EQ(Cli("--print-config"), 0);

  nlohmann::json bad_thresholds = nlohmann::json::parse(ReadFile(ok));
  bad_thresholds["thresholds"] = {0.5, 2.0};
  WriteFileAtomic(root_ / "ok" / "bad.json", bad_thresholds.dump());
  EXPECT_EQ(Cli("--config " + (root_ / "ok" / "bad.json").string() + " analyze"), 2);

  nlohmann::json missing_corpus = nlohmann::json::parse(ReadFile(ok));
  missing_corpus["corpus"]["path"] = "absent.txt";
  WriteFileAtomic(root_ / "ok" / "missing.json", missing_corpus.dump());
  EXPECT_EQ(Cli("--config " + (root_ / "ok" / "missing.json").string() + " extract"), 1);

  const nlohmann::json failing = SubprocessScorer("--fail-marker Hanks");
  const fs::path partial = testing::MakeDemoCopy(root_ / "partial", &failing);
  EXPECT_EQ(Cli("--config " + partial.string() + " run"), 4);
  EXPECT_EQ(Cli("--config " + partial.string() + " --allow-partial run"), 0);

  const nlohmann::json out_of_range = SubprocessScorer("--fixed 1.7");
  const fs::path protocol = testing::MakeDemoCopy(root_ / "protocol", &out_of_range);
  EXPECT_EQ(Cli("--config " + protocol.string() + " run"), 5);

  const nlohmann::json unreachable = {{"kind", "remote-http"},
                                      {"scorer_id", "remote"},
                                      {"endpoint", "http://127.0.0.1:1/score"},
                                      {"retry_limit", 1},
                                      {"backoff_base_ms", 1},
                                      {"timeout_ms", 500}};
  const fs::path transport = testing::MakeDemoCopy(root_ / "transport", &unreachable);
  EXPECT_EQ(Cli("--config " + transport.string() + " run"), 3);
}

TEST_F(PipelineTest, CliCacheDirFromEnvironment) {
  const fs::path config = testing::MakeDemoCopy(root_ / "a");
  const fs::path cache = root_ / "env_cache";
  EXPECT_EQ(Cli("--config " + config.string() + " run", "PSA_CACHE_DIR=" + cache.string()),
            0);
  EXPECT_TRUE(fs::exists(cache / "demo-lexicon-v1.jsonl"));
  EXPECT_FALSE(fs::exists(root_ / "a" / "out" / "cache"));
}

TEST_F(PipelineTest, CliFlagsReachTheReport) {
  const fs::path config = testing::MakeDemoCopy(root_ / "a");
  EXPECT_EQ(Cli("--config " + config.string() + " --obfuscate-names --seed 7 run"), 0);
  const std::string text = ReadFile(root_ / "a" / "out" / kReportFile);
  const auto report = nlohmann::json::parse(text);
  EXPECT_EQ(report["provenance"]["seed"], 7);
  EXPECT_TRUE(report["provenance"]["names_obfuscated"].get<bool>());
  EXPECT_EQ(text.find("Katy Perry"), std::string::npos);
}

}  // namespace
}  // namespace psa
