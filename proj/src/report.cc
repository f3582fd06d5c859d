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

#include "psa/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psa/csv.h"
#include "psa/errors.h"
#include "psa/sha256.h"

namespace psa {
namespace {

using Json = nlohmann::json;

const char* const kCaveats[] = {
    "Scores are assumed to be ideally insensitive to the person named; "
    "names can carry legitimate meaning in some sentences, so trends are "
    "meaningful at corpus level rather than per sentence.",
    "Anchor genders are binary (female/male pronouns); non-binary "
    "references are not covered by the shipped inventory.",
};

std::string FormatShort(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite number in report");
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string FormatFull(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteCanonical(const Json& v, int indent, std::string& out) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      // nlohmann's default object_t is a std::map, so items are key-sorted.
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        out += Json(it.key()).dump(-1, ' ', false,
                                   Json::error_handler_t::replace);
        out += ": ";
        WriteCanonical(it.value(), indent + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (size_t k = 0; k < v.size(); ++k) {
        if (k) out += ",\n";
        out += inner;
        WriteCanonical(v[k], indent + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += FormatShort(v.get<double>());
      return;
    default:
      out += v.dump(-1, ' ', false, Json::error_handler_t::replace);
      return;
  }
}

Json CorrelationJson(const Correlation& c) {
  Json j = {{"method", ToString(c.method)}};
  if (c.value) {
    j["value"] = *c.value;
    j["defined"] = true;
  } else {
    j["value"] = nullptr;
    j["defined"] = false;
    j["undefined_reason"] = c.undefined_reason;
  }
  return j;
}

std::string CorrelationCell(const Correlation& c) {
  return c.value ? FormatFull(*c.value) : "";
}

}  // namespace

std::vector<NameSensitivity> RankNames(std::vector<NameSensitivity> per_name) {
  std::sort(per_name.begin(), per_name.end(),
            [](const NameSensitivity& a, const NameSensitivity& b) {
              if (a.score_sens != b.score_sens) {
                return a.score_sens > b.score_sens;
              }
              return a.name < b.name;
            });
  return per_name;
}

std::map<std::string, std::string> ObfuscationLabels(
    std::span<const std::string> names) {
  std::vector<std::pair<std::string, std::string>> keyed;
  for (const std::string& n : names) keyed.emplace_back(Sha256Hex(n), n);
  std::sort(keyed.begin(), keyed.end());
  const size_t width = std::max<size_t>(2, std::to_string(keyed.size()).size());
  std::map<std::string, std::string> labels;
  for (size_t k = 0; k < keyed.size(); ++k) {
    std::string num = std::to_string(k + 1);
    labels[keyed[k].second] = "P" + std::string(width - num.size(), '0') + num;
  }
  return labels;
}

AuditReport AssembleReport(const Analysis& analysis,
                           std::span<const NameEntry> names,
                           Provenance provenance, bool obfuscate_names,
                           bool include_original) {
  AuditReport report;
  report.provenance = std::move(provenance);
  report.analysis = analysis;
  report.names_obfuscated = obfuscate_names;
  report.include_original = include_original;

  std::map<std::string, const NameEntry*> meta;
  for (const NameEntry& n : names) meta[n.name] = &n;

  std::map<std::string, std::string> labels;
  if (obfuscate_names) {
    std::vector<std::string> all;
    for (const NameSensitivity& s : analysis.per_name) all.push_back(s.name);
    labels = ObfuscationLabels(all);
    for (NameSensitivity& s : report.analysis.per_name) s.name = labels[s.name];
  }

  // Rank on the published labels so ties order the same way readers see.
  std::vector<NameSensitivity> ranked = RankNames(report.analysis.per_name);
  std::map<std::string, std::string> original;
  for (const auto& [real, label] : labels) original[label] = real;
  for (size_t k = 0; k < ranked.size(); ++k) {
    RankedName r;
    r.rank = k + 1;
    r.name = ranked[k].name;
    r.score_sens = ranked[k].score_sens;
    r.n_sentences = ranked[k].n_sentences;
    const std::string key = obfuscate_names ? original[r.name] : r.name;
    if (auto it = meta.find(key); it != meta.end()) {
      r.gender = it->second->gender;
      r.category = it->second->category;
      r.entity_type = it->second->entity_type;
    }
    report.ranked_names.push_back(std::move(r));
  }
  return report;
}

Json ReportToJson(const AuditReport& report) {
  const Analysis& a = report.analysis;
  const Provenance& p = report.provenance;

  Json per_name = Json::array();
  for (const RankedName& r : report.ranked_names) {
    per_name.push_back({{"rank", r.rank},
                        {"name", r.name},
                        {"gender", ToString(r.gender)},
                        {"category", r.category},
                        {"entity_type", r.entity_type},
                        {"score_sens", r.score_sens},
                        {"n_sentences", r.n_sentences}});
  }
  Json curve = Json::array();
  for (const ThresholdPoint& t : a.threshold_curve) {
    curve.push_back({{"threshold", t.threshold},
                     {"label_dist", t.label_dist},
                     {"flips_to_positive", t.flips_to_positive},
                     {"flips_to_negative", t.flips_to_negative}});
  }
  Json mitigation = Json::array();
  for (const SentenceStats& s : a.sentences) {
    mitigation.push_back({{"sentence_id", s.sentence_id},
                          {"base_score", s.base_score},
                          {"mitigated_score", s.mitigated_score}});
  }
  Json caveats = Json::array();
  for (const char* c : kCaveats) caveats.push_back(c);

  return {
      {"schema_version", kReportSchemaVersion},
      {"provenance",
       {{"seed", p.seed},
        {"config_hash", p.config_hash},
        {"scorer_id", p.scorer_id},
        {"scorer_kind", p.scorer_kind},
        {"corpus", p.corpus_label},
        {"query_mode", p.batch_size > 1 ? "batched" : "per-sentence"},
        {"batch_size", p.batch_size},
        {"balance_warnings", p.extraction_warnings},
        {"failed_cells", a.failed_cells + a.failed_base},
        {"excluded_cells", a.excluded_cells},
        {"names_obfuscated", report.names_obfuscated}}},
      {"conventions",
       {{"std_dev", "population"},
        {"jaccard_of_two_empty_sets", 0},
        {"label_indicator", "score >= threshold"},
        {"correlation", ToString(a.correlation.method)},
        {"partial_cells", "pairwise deletion"},
        {"mitigation_includes_original", report.include_original}}},
      {"aggregates",
       {{"corpus", p.corpus_label},
        {"scorer_id", p.scorer_id},
        {"score_dev", a.score_dev},
        {"score_range", a.score_range},
        {"correlation", CorrelationJson(a.correlation)},
        {"n_sentences", a.sentences.size()},
        {"n_names", a.per_name.size()}}},
      {"per_name", std::move(per_name)},
      {"threshold_curve", std::move(curve)},
      {"mitigation", std::move(mitigation)},
      {"warnings", a.warnings},
      {"caveats", std::move(caveats)},
  };
}

std::string CanonicalJson(const Json& value) {
  std::string out;
  WriteCanonical(value, 0, out);
  out.push_back('\n');
  return out;
}

std::string PerNameCsv(const AuditReport& report) {
  std::string out = CsvLine(
      {"rank", "name", "gender", "category", "score_sens", "n_sentences"});
  for (const RankedName& r : report.ranked_names) {
    out += CsvLine({std::to_string(r.rank), r.name, std::string(ToString(r.gender)),
                    r.category, FormatFull(r.score_sens),
                    std::to_string(r.n_sentences)});
  }
  return out;
}

std::string ThresholdCurveCsv(const AuditReport& report) {
  std::string out = CsvLine(
      {"threshold", "label_dist", "flips_to_positive", "flips_to_negative"});
  for (const ThresholdPoint& t : report.analysis.threshold_curve) {
    out += CsvLine({FormatFull(t.threshold), FormatFull(t.label_dist),
                    std::to_string(t.flips_to_positive),
                    std::to_string(t.flips_to_negative)});
  }
  return out;
}

std::string SentenceStatsCsv(const AuditReport& report) {
  std::string out =
      CsvLine({"sentence_id", "base_score", "std_dev", "range",
               "mean_abs_delta", "mitigated_score", "n_names"});
  for (const SentenceStats& s : report.analysis.sentences) {
    out += CsvLine({s.sentence_id, FormatFull(s.base_score),
                    FormatFull(s.std_dev), FormatFull(s.range),
                    FormatFull(s.mean_abs_delta), FormatFull(s.mitigated_score),
                    std::to_string(s.n_names)});
  }
  return out;
}

std::string AggregatesCsv(const AuditReport& report) {
  const Analysis& a = report.analysis;
  std::string out =
      CsvLine({"corpus", "task", "score_dev", "score_range", "correlation",
               "correlation_method", "n_sentences", "n_names"});
  out += CsvLine({report.provenance.corpus_label, report.provenance.scorer_id,
                  FormatFull(a.score_dev), FormatFull(a.score_range),
                  CorrelationCell(a.correlation),
                  std::string(ToString(a.correlation.method)),
                  std::to_string(a.sentences.size()),
                  std::to_string(a.per_name.size())});
  return out;
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw InputError("cannot create directory " +
                       path.parent_path().string() + ": " + ec.message());
    }
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename into " + path.string());
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void EmitReport(const AuditReport& report, const std::filesystem::path& dir,
                ReportFormat format) {
  if (format == ReportFormat::kJson) {
    WriteFileAtomic(dir / "report.json", CanonicalJson(ReportToJson(report)));
    return;
  }
  WriteFileAtomic(dir / "per_name.csv", PerNameCsv(report));
  WriteFileAtomic(dir / "threshold_curve.csv", ThresholdCurveCsv(report));
  WriteFileAtomic(dir / "sentence_stats.csv", SentenceStatsCsv(report));
  WriteFileAtomic(dir / "aggregates.csv", AggregatesCsv(report));
}

}  // namespace psa
