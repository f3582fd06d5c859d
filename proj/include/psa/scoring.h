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

// Scorer backends and the matrix builder. A scorer is any black box from
// text to a scalar in [score_min, score_max]; three transports are supported
// (HTTP, a long-lived subprocess speaking NDJSON, and the builtin lexicon).

#ifndef PSA_SCORING_H_
#define PSA_SCORING_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "psa/corpus.h"
#include "psa/lexicon.h"
#include "psa/perturbation.h"
#include "psa/score_matrix.h"

namespace psa {

enum class ScorerKind { kRemoteHttp, kSubprocess, kBuiltinLexicon };

std::string_view ToString(ScorerKind k);
std::optional<ScorerKind> ParseScorerKind(std::string_view s);

struct ScorerSpec {
  ScorerKind kind = ScorerKind::kBuiltinLexicon;
  std::string endpoint;  // remote-http: http://host:port/path
  std::string command;   // subprocess: run via /bin/sh -c
  double score_min = 0.0;
  double score_max = 1.0;
  std::string scorer_id;
  size_t max_in_flight = 4;
  size_t retry_limit = 3;  // retries after the first attempt
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff_base{250};
  size_t batch_size = 1;  // texts per backend request
  std::string bearer_token;  // sent as "Authorization: Bearer ..." if set
  LexiconConfig lexicon;     // builtin-lexicon only

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

// Result for one text of a batch: a score, or a per-item error message.
struct ScoreOutcome {
  std::optional<double> score;
  std::string error;
};

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;

  // Scores `texts` in order; the result has one outcome per text. A failure
  // of the whole request throws TransportError (retried by the caller) or
  // ProtocolError (fatal). Implementations must be safe to call from
  // several threads at once.
  virtual std::vector<ScoreOutcome> ScoreBatch(
      std::span<const std::string> texts) = 0;
};

class LexiconBackend : public ScorerBackend {
 public:
  explicit LexiconBackend(LexiconConfig config) : scorer_(std::move(config)) {}
  std::vector<ScoreOutcome> ScoreBatch(
      std::span<const std::string> texts) override;

 private:
  LexiconScorer scorer_;
};

// POST <endpoint> {"texts": [...]} -> {"scores": [...]}. 429 and 5xx are
// transport errors (retryable); other non-2xx statuses are protocol errors.
class HttpBackend : public ScorerBackend {
 public:
  HttpBackend(std::string endpoint, std::chrono::milliseconds timeout,
              std::string bearer_token);
  std::vector<ScoreOutcome> ScoreBatch(
      std::span<const std::string> texts) override;

 private:
  std::string base_url_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::string bearer_token_;
};

// Launches `command` once. Requests {"id":k,"text":...} go to its stdin one
// per line; replies {"id":k,"score":s} or {"id":k,"error":"..."} may come
// back in any order.
class SubprocessBackend : public ScorerBackend {
 public:
  SubprocessBackend(const std::string& command,
                    std::chrono::milliseconds timeout);
  ~SubprocessBackend() override;
  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  std::vector<ScoreOutcome> ScoreBatch(
      std::span<const std::string> texts) override;

 private:
  struct State;
  std::shared_ptr<State> state_;
  std::chrono::milliseconds timeout_;
};

std::unique_ptr<ScorerBackend> MakeBackend(const ScorerSpec& spec);

// Append-only score cache, one JSONL file per scorer id with lines
// {"h":"<sha256 of text>","s":score}. The last line for a hash wins when
// reloading; a torn final line (from a killed process) is ignored.
// Lookups may run concurrently; inserts are serialized.
class ScoreCache {
 public:
  // In-memory only.
  ScoreCache() = default;
  // Persistent under `dir`. Creates the directory if needed.
  ScoreCache(const std::filesystem::path& dir, std::string_view scorer_id);

  std::optional<double> Lookup(const std::string& hash) const;
  void Insert(const std::string& hash, double score);
  void Flush();
  size_t size() const;

  const std::filesystem::path& path() const { return path_; }

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, double> entries_;
  std::filesystem::path path_;
  std::ofstream out_;
};

struct ScoreManifest {
  size_t total_cells = 0;     // base + perturbed cells requested
  size_t cached = 0;          // cells answered from cache at start
  size_t requested = 0;       // distinct texts sent to the backend
  size_t backend_calls = 0;   // backend requests, retries included
  size_t failed = 0;          // cells that failed permanently
  size_t excluded = 0;        // grid cells never requested
  size_t batch_size = 1;
  size_t max_in_flight = 1;
  size_t max_observed_in_flight = 0;

  nlohmann::json ToJson() const;
};

// Scoring front end: cache, batching, bounded concurrency, retries with
// exponential backoff (factor 2, +-20% jitter) and range checking.
class Scorer {
 public:
  Scorer(ScorerSpec spec, std::unique_ptr<ScorerBackend> backend,
         std::shared_ptr<ScoreCache> cache);

  // Cached single-text score. Throws TransportError after retries are
  // exhausted and ProtocolError for out-of-range or malformed replies.
  double ScoreText(const std::string& text);

  // Scores many texts. Returned vector is aligned with `texts`; entries are
  // nullopt for texts that failed permanently (their last error is stored
  // in `errors` if non-null). Duplicate texts are requested once.
  std::vector<std::optional<double>> ScoreTexts(
      std::span<const std::string> texts, ScoreManifest* manifest = nullptr,
      std::vector<std::string>* errors = nullptr);

  const ScorerSpec& spec() const { return spec_; }
  ScoreCache& cache() { return *cache_; }

 private:
  double CheckRange(double score) const;

  ScorerSpec spec_;
  std::unique_ptr<ScorerBackend> backend_;
  std::shared_ptr<ScoreCache> cache_;
  std::atomic<uint64_t> jitter_counter_{0};
};

struct MatrixBuild {
  ScoreMatrix matrix;
  ScoreManifest manifest;
  std::string first_error;  // error of the first failed cell, if any
};

// Fills base scores for every sentence and perturbed scores for every grid
// cell. Cells absent from the grid are marked excluded; cells that fail
// permanently are marked failed (see ScoreMatrix::RequireComplete).
MatrixBuild BuildScoreMatrix(Scorer& scorer,
                             std::span<const AnchoredSentence> sentences,
                             std::span<const NameEntry> names,
                             std::span<const PerturbedSentence> grid);

}  // namespace psa

#endif  // PSA_SCORING_H_
