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

#include "psa/metrics.h"

#include <cmath>
#include <numeric>

#include "psa/errors.h"

namespace psa {
namespace {

// Scored perturbed values of row i (requires a scored base).
std::vector<double> RowValues(const ScoreMatrix& m, size_t i) {
  std::vector<double> row;
  row.reserve(m.num_names());
  for (size_t j = 0; j < m.num_names(); ++j) {
    if (m.has(i, j)) row.push_back(m.at(i, j));
  }
  return row;
}

double Mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

bool NearlyConstant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double scale = std::max({1.0, std::fabs(*lo), std::fabs(*hi)});
  return *hi - *lo <= 1e-12 * scale;
}

std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (size_t k = 0; k < order.size();) {
    size_t end = k;
    while (end + 1 < order.size() && v[order[end + 1]] == v[order[k]]) ++end;
    const double rank = 0.5 * static_cast<double>(k + end) + 1.0;
    for (size_t t = k; t <= end; ++t) ranks[order[t]] = rank;
    k = end + 1;
  }
  return ranks;
}

}  // namespace

std::string_view ToString(CorrelationMethod m) {
  return m == CorrelationMethod::kSpearman ? "spearman" : "pearson";
}

std::optional<CorrelationMethod> ParseCorrelationMethod(std::string_view s) {
  if (s == "pearson") return CorrelationMethod::kPearson;
  if (s == "spearman") return CorrelationMethod::kSpearman;
  return std::nullopt;
}

double ScoreSens(const ScoreMatrix& m, size_t name) {
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    if (!m.has(i, name)) continue;
    sum += m.at(i, name) - m.base(i);
    ++n;
  }
  if (n == 0) {
    throw PreconditionError("ScoreSens: no scored sentences for name '" +
                            m.names()[name] + "'");
  }
  return sum / static_cast<double>(n);
}

std::vector<NameSensitivity> ScoreSensAll(const ScoreMatrix& m) {
  std::vector<NameSensitivity> out;
  out.reserve(m.num_names());
  for (size_t j = 0; j < m.num_names(); ++j) {
    size_t n = 0;
    for (size_t i = 0; i < m.num_sentences(); ++i) n += m.has(i, j);
    if (n == 0) continue;
    out.push_back({m.names()[j], ScoreSens(m, j), n});
  }
  return out;
}

double PopulationStdDev(std::span<const double> values) {
  if (values.empty()) return 0.0;
  // Shifting by the first value makes constant inputs yield exactly 0.
  const double pivot = values.front();
  double mean = 0.0;
  for (double x : values) mean += x - pivot;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - pivot - mean) * (x - pivot - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

std::vector<double> SentenceStdDevs(const ScoreMatrix& m) {
  std::vector<double> out;
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    const std::vector<double> row = RowValues(m, i);
    if (!row.empty()) out.push_back(PopulationStdDev(row));
  }
  return out;
}

double ScoreDev(const ScoreMatrix& m) {
  const std::vector<double> devs = SentenceStdDevs(m);
  if (devs.empty()) throw PreconditionError("ScoreDev: no scored cells");
  return Mean(devs);
}

std::vector<double> SentenceRanges(const ScoreMatrix& m) {
  std::vector<double> out;
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    const std::vector<double> row = RowValues(m, i);
    if (row.empty()) continue;
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    out.push_back(*hi - *lo);
  }
  return out;
}

double ScoreRange(const ScoreMatrix& m) {
  const std::vector<double> ranges = SentenceRanges(m);
  if (ranges.empty()) throw PreconditionError("ScoreRange: no scored cells");
  return Mean(ranges);
}

std::set<size_t> LabelSet(std::span<const double> scores, double c) {
  std::set<size_t> out;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= c) out.insert(i);
  }
  return out;
}

ThresholdPoint LabelDist(const ScoreMatrix& m, double c) {
  ThresholdPoint point;
  point.threshold = c;
  double sum = 0.0;
  size_t names_used = 0;
  for (size_t j = 0; j < m.num_names(); ++j) {
    std::set<size_t> before, after;
    bool any = false;
    for (size_t i = 0; i < m.num_sentences(); ++i) {
      if (!m.has(i, j)) continue;
      any = true;
      if (m.base(i) >= c) before.insert(i);
      if (m.at(i, j) >= c) after.insert(i);
    }
    if (!any) continue;
    for (size_t i : after) point.flips_to_positive += !before.count(i);
    for (size_t i : before) point.flips_to_negative += !after.count(i);
    sum += JaccardDistance(before, after);
    ++names_used;
  }
  if (names_used == 0) throw PreconditionError("LabelDist: no scored cells");
  point.label_dist = sum / static_cast<double>(names_used);
  return point;
}

std::vector<double> DefaultThresholdGrid(double score_min, double score_max,
                                         double step) {
  std::vector<double> grid;
  const auto steps =
      static_cast<long>(std::floor((score_max - score_min) / step + 1e-9));
  for (long k = 0; k <= steps; ++k) {
    grid.push_back(score_min + static_cast<double>(k) * step);
  }
  // Land exactly on the top of the range despite rounding.
  if (!grid.empty() && std::fabs(grid.back() - score_max) < 1e-9) {
    grid.back() = score_max;
  }
  return grid;
}

void ValidateThresholds(std::span<const double> thresholds, double score_min,
                        double score_max) {
  if (thresholds.empty()) throw ConfigError("thresholds", "empty grid");
  for (size_t k = 0; k < thresholds.size(); ++k) {
    const double c = thresholds[k];
    if (!std::isfinite(c) || c < score_min || c > score_max) {
      throw ConfigError("thresholds", "value " + std::to_string(c) +
                                          " outside the score range [" +
                                          std::to_string(score_min) + ", " +
                                          std::to_string(score_max) + "]");
    }
    if (k > 0 && !(c > thresholds[k - 1])) {
      throw ConfigError("thresholds", "values must be strictly increasing");
    }
  }
}

std::vector<ThresholdPoint> ThresholdSweep(const ScoreMatrix& m,
                                           std::span<const double> thresholds) {
  ValidateThresholds(thresholds, m.score_min, m.score_max);
  std::vector<ThresholdPoint> out;
  out.reserve(thresholds.size());
  for (double c : thresholds) out.push_back(LabelDist(m, c));
  return out;
}

std::vector<double> MeanAbsDeltas(const ScoreMatrix& m) {
  std::vector<double> out;
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    double sum = 0.0;
    size_t n = 0;
    for (size_t j = 0; j < m.num_names(); ++j) {
      if (!m.has(i, j)) continue;
      sum += std::fabs(m.at(i, j) - m.base(i));
      ++n;
    }
    if (n) out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation SensitivityCorrelation(const ScoreMatrix& m,
                                   CorrelationMethod method) {
  std::vector<double> base;
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    bool any = false;
    for (size_t j = 0; j < m.num_names() && !any; ++j) any = m.has(i, j);
    if (any) base.push_back(m.base(i));
  }
  const std::vector<double> deltas = MeanAbsDeltas(m);
  if (base.size() < 3) {
    throw PreconditionError("correlation needs at least 3 sentences, got " +
                            std::to_string(base.size()));
  }
  Correlation result;
  result.method = method;
  if (NearlyConstant(base)) {
    result.undefined_reason = "base scores have zero variance";
    return result;
  }
  if (NearlyConstant(deltas)) {
    result.undefined_reason = "mean |delta| has zero variance";
    return result;
  }
  if (method == CorrelationMethod::kSpearman) {
    result.value = Pearson(AverageRanks(deltas), AverageRanks(base));
  } else {
    result.value = Pearson(deltas, base);
  }
  return result;
}

std::vector<double> MitigateByAveraging(const ScoreMatrix& m,
                                        bool include_original) {
  std::vector<double> out(m.num_sentences());
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    std::vector<double> row = RowValues(m, i);
    if (row.empty()) {
      throw PreconditionError("mitigation: sentence '" + m.sentence_ids()[i] +
                              "' has no scored perturbations");
    }
    if (include_original) row.push_back(m.base(i));
    out[i] = Mean(row);
  }
  return out;
}

Analysis Analyze(const ScoreMatrix& m, const AnalysisOptions& options) {
  if (!options.allow_partial) m.RequireComplete();
  Analysis a;
  a.num_sentences = m.num_sentences();
  a.num_names = m.num_names();
  a.failed_cells = m.FailedCells().size();
  a.failed_base = m.NumFailedBase();
  a.excluded_cells = m.NumExcluded();
  if (a.failed_cells + a.failed_base > 0) {
    a.warnings.push_back(std::to_string(a.failed_cells + a.failed_base) +
                         " failed cell(s) excluded pairwise");
  }
  if (m.num_names() == 1) {
    a.warnings.push_back(
        "only one name: per-sentence standard deviation is 0 by the "
        "population convention");
  }

  a.per_name = ScoreSensAll(m);
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    std::vector<double> row = RowValues(m, i);
    if (row.empty()) continue;
    SentenceStats s;
    s.sentence_id = m.sentence_ids()[i];
    s.base_score = m.base(i);
    s.n_names = row.size();
    s.std_dev = PopulationStdDev(row);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    s.range = *hi - *lo;
    double abs_sum = 0.0;
    for (double v : row) abs_sum += std::fabs(v - s.base_score);
    s.mean_abs_delta = abs_sum / static_cast<double>(row.size());
    if (options.include_original) row.push_back(s.base_score);
    s.mitigated_score = Mean(row);
    a.sentences.push_back(std::move(s));
  }
  if (a.sentences.empty()) throw PreconditionError("no scored cells");
  double dev_sum = 0.0, range_sum = 0.0;
  for (const SentenceStats& s : a.sentences) {
    dev_sum += s.std_dev;
    range_sum += s.range;
  }
  a.score_dev = dev_sum / static_cast<double>(a.sentences.size());
  a.score_range = range_sum / static_cast<double>(a.sentences.size());

  const std::vector<double> grid =
      options.thresholds.empty()
          ? DefaultThresholdGrid(m.score_min, m.score_max)
          : options.thresholds;
  a.threshold_curve = ThresholdSweep(m, grid);

  if (a.sentences.size() >= 3) {
    a.correlation = SensitivityCorrelation(m, options.correlation);
  } else {
    a.correlation.method = options.correlation;
    a.correlation.undefined_reason = "fewer than 3 sentences";
  }
  return a;
}

}  // namespace psa
