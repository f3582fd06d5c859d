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

// Perturbation sensitivity metrics over a ScoreMatrix.
//
// Notation: base[i] = f(x_i); M[i][j] = f(x_i with name j).
//
//   ScoreSens(j)  = mean_i (M[i][j] - base[i])
//   ScoreDev      = mean_i popstddev_j M[i][j]
//   ScoreRange    = mean_i (max_j M[i][j] - min_j M[i][j])
//   LabelDist(c)  = mean_j Jaccard({i : base[i] >= c}, {i : M[i][j] >= c})
//
// Missing cells (failed or excluded) are dropped pairwise: a cell counts
// only when both base[i] and M[i][j] are scored. Callers decide whether a
// partial matrix is acceptable (see Analyze).

#ifndef PSA_METRICS_H_
#define PSA_METRICS_H_

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psa/score_matrix.h"

namespace psa {

struct NameSensitivity {
  std::string name;
  double score_sens = 0.0;
  size_t n_sentences = 0;
};

struct SentenceStats {
  std::string sentence_id;
  double base_score = 0.0;
  double std_dev = 0.0;
  double range = 0.0;
  double mean_abs_delta = 0.0;
  double mitigated_score = 0.0;
  size_t n_names = 0;
};

struct ThresholdPoint {
  double threshold = 0.0;
  double label_dist = 0.0;
  size_t flips_to_positive = 0;  // summed over names
  size_t flips_to_negative = 0;
};

enum class CorrelationMethod { kPearson, kSpearman };
std::string_view ToString(CorrelationMethod m);
std::optional<CorrelationMethod> ParseCorrelationMethod(std::string_view s);

// Correlation that may be undefined (zero variance); never NaN.
struct Correlation {
  CorrelationMethod method = CorrelationMethod::kPearson;
  std::optional<double> value;
  std::string undefined_reason;
  bool defined() const { return value.has_value(); }
};

double ScoreSens(const ScoreMatrix& m, size_t name);
std::vector<NameSensitivity> ScoreSensAll(const ScoreMatrix& m);

// Population standard deviation of a sample (divide by n).
double PopulationStdDev(std::span<const double> values);

std::vector<double> SentenceStdDevs(const ScoreMatrix& m);
double ScoreDev(const ScoreMatrix& m);
std::vector<double> SentenceRanges(const ScoreMatrix& m);
double ScoreRange(const ScoreMatrix& m);

// Indices i with scores[i] >= c.
std::set<size_t> LabelSet(std::span<const double> scores, double c);

// 1 - |A n B| / |A u B|, with Jaccard(empty, empty) = 0.
template <typename T>
double JaccardDistance(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t common = 0;
  for (const T& x : a) common += b.count(x);
  const size_t united = a.size() + b.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(united);
}

ThresholdPoint LabelDist(const ScoreMatrix& m, double c);

// 0.05 steps from score_min to score_max inclusive.
std::vector<double> DefaultThresholdGrid(double score_min, double score_max,
                                         double step = 0.05);

// Throws ConfigError("thresholds") unless strictly increasing and within
// [score_min, score_max].
void ValidateThresholds(std::span<const double> thresholds, double score_min,
                        double score_max);

std::vector<ThresholdPoint> ThresholdSweep(const ScoreMatrix& m,
                                           std::span<const double> thresholds);

// Per-sentence mean over names of |M[i][j] - base[i]|.
std::vector<double> MeanAbsDeltas(const ScoreMatrix& m);

double Pearson(std::span<const double> x, std::span<const double> y);

// Correlation between per-sentence mean |delta| and base score. Requires at
// least 3 sentences (PreconditionError otherwise).
Correlation SensitivityCorrelation(
    const ScoreMatrix& m, CorrelationMethod method = CorrelationMethod::kPearson);

// Per-sentence mean of the perturbed scores; with include_original the base
// score joins the average.
std::vector<double> MitigateByAveraging(const ScoreMatrix& m,
                                        bool include_original = false);

struct AnalysisOptions {
  bool allow_partial = false;
  bool include_original = false;
  CorrelationMethod correlation = CorrelationMethod::kPearson;
  // Empty means DefaultThresholdGrid over the matrix's score range.
  std::vector<double> thresholds;
};

struct Analysis {
  std::vector<NameSensitivity> per_name;  // matrix name order
  std::vector<SentenceStats> sentences;   // rows with at least one cell
  double score_dev = 0.0;
  double score_range = 0.0;
  std::vector<ThresholdPoint> threshold_curve;
  Correlation correlation;
  size_t num_sentences = 0;
  size_t num_names = 0;
  size_t failed_cells = 0;
  size_t failed_base = 0;
  size_t excluded_cells = 0;
  std::vector<std::string> warnings;
};

// Runs every metric. Throws PartialMatrixError when cells failed and
// allow_partial is off.
Analysis Analyze(const ScoreMatrix& m, const AnalysisOptions& options = {});

}  // namespace psa

#endif  // PSA_METRICS_H_
