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

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "psa/errors.h"
#include "psa/report.h"
#include "psa/sha256.h"

namespace psa {
namespace {

using Json = nlohmann::json;

void RejectUnknown(const Json& obj, const std::string& section,
                   const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(section.empty() ? key : section + "." + key,
                        "unknown setting");
    }
  }
}

const Json& RequireObject(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "must be an object");
  return j;
}

template <typename T>
T Get(const Json& obj, const char* key, const std::string& field,
      T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

size_t GetCount(const Json& obj, const char* key, const std::string& field,
                size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() || it->get<int64_t>() < 0) {
    throw ConfigError(field, "must be a non-negative integer");
  }
  return it->get<size_t>();
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string FileDigest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing:" + path.filename().string();
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Sha256Hex(buffer.str());
}

}  // namespace

void AuditConfig::Validate() const {
  if (corpus_path.empty()) throw ConfigError("corpus.path", "must be set");
  if (names_path.empty()) throw ConfigError("names_path", "must be set");
  if (output_dir.empty()) throw ConfigError("output_dir", "must be set");
  extraction.Validate();
  scorer.Validate();
  if (thresholds.values.empty()) {
    if (!(thresholds.step > 0.0) || !std::isfinite(thresholds.step)) {
      throw ConfigError("thresholds", "step must be positive");
    }
  }
  ValidateThresholds(ResolvedThresholds(), scorer.score_min, scorer.score_max);
}

std::vector<double> AuditConfig::ResolvedThresholds() const {
  if (!thresholds.values.empty()) return thresholds.values;
  return DefaultThresholdGrid(scorer.score_min, scorer.score_max,
                              thresholds.step);
}

AuditConfig ConfigFromJson(const Json& j,
                           const std::filesystem::path& base_dir) {
  RequireObject(j, "config");
  RejectUnknown(j, "",
                {"corpus", "extraction", "names_path", "scorer", "thresholds",
                 "correlation", "output_dir", "cache_dir", "flags"});
  AuditConfig c;

  if (!j.contains("corpus")) throw ConfigError("corpus", "must be set");
  const Json& corpus = RequireObject(j["corpus"], "corpus");
  RejectUnknown(corpus, "corpus", {"path", "format", "label"});
  const std::string corpus_path =
      Get<std::string>(corpus, "path", "corpus.path", "");
  if (corpus_path.empty()) throw ConfigError("corpus.path", "must be set");
  c.corpus_path = Resolve(base_dir, corpus_path);
  const std::string format =
      Get<std::string>(corpus, "format", "corpus.format", "plain-lines");
  auto parsed_format = ParseCorpusFormat(format);
  if (!parsed_format) {
    throw ConfigError("corpus.format",
                      "must be one of plain-lines, csv, jsonl");
  }
  c.corpus_format = *parsed_format;
  c.corpus_label = Get<std::string>(corpus, "label", "corpus.label",
                                    c.corpus_path.stem().string());

  if (j.contains("extraction")) {
    const Json& e = RequireObject(j["extraction"], "extraction");
    RejectUnknown(e, "extraction",
                  {"max_words", "sample_size", "seed", "anchor_inventory",
                   "gender_balance", "her_disambiguation"});
    ExtractionConfig& x = c.extraction;
    x.max_words = GetCount(e, "max_words", "extraction.max_words", x.max_words);
    x.sample_size =
        GetCount(e, "sample_size", "extraction.sample_size", x.sample_size);
    x.seed = Get<uint64_t>(e, "seed", "extraction.seed", x.seed);
    x.gender_balance =
        Get<bool>(e, "gender_balance", "extraction.gender_balance", true);
    const std::string her = Get<std::string>(
        e, "her_disambiguation", "extraction.her_disambiguation", "heuristic");
    if (her == "heuristic") {
      x.her_disambiguation = HerDisambiguation::kHeuristic;
    } else if (her == "exclude") {
      x.her_disambiguation = HerDisambiguation::kExclude;
    } else {
      throw ConfigError("extraction.her_disambiguation",
                        "must be heuristic or exclude");
    }
    if (e.contains("anchor_inventory")) {
      const std::string field = "extraction.anchor_inventory";
      if (!e["anchor_inventory"].is_array()) {
        throw ConfigError(field, "must be an array");
      }
      x.anchor_inventory.clear();
      for (const Json& entry : e["anchor_inventory"]) {
        RequireObject(entry, field);
        InventoryEntry inv;
        inv.surface = Get<std::string>(entry, "surface", field, "");
        auto form = ParseAnchorForm(Get<std::string>(entry, "form", field, ""));
        auto gender =
            ParseGender(Get<std::string>(entry, "gender", field, ""));
        if (!form) throw ConfigError(field, "unknown form for '" + inv.surface + "'");
        if (!gender) throw ConfigError(field, "unknown gender for '" + inv.surface + "'");
        inv.form = *form;
        inv.gender = *gender;
        x.anchor_inventory.push_back(std::move(inv));
      }
    }
  }

  const std::string names = Get<std::string>(j, "names_path", "names_path", "");
  if (names.empty()) throw ConfigError("names_path", "must be set");
  c.names_path = Resolve(base_dir, names);

  if (!j.contains("scorer")) throw ConfigError("scorer", "must be set");
  const Json& s = RequireObject(j["scorer"], "scorer");
  RejectUnknown(s, "scorer",
                {"kind", "endpoint", "command", "score_min", "score_max",
                 "scorer_id", "max_in_flight", "retry_limit", "timeout_ms",
                 "backoff_base_ms", "batch_size", "bearer_token_env",
                 "lexicon", "lexicon_path"});
  ScorerSpec& spec = c.scorer;
  const std::string kind =
      Get<std::string>(s, "kind", "scorer.kind", "builtin-lexicon");
  auto parsed_kind = ParseScorerKind(kind);
  if (!parsed_kind) {
    throw ConfigError("scorer.kind",
                      "must be remote-http, subprocess or builtin-lexicon");
  }
  spec.kind = *parsed_kind;
  spec.endpoint = Get<std::string>(s, "endpoint", "scorer.endpoint", "");
  spec.command = Get<std::string>(s, "command", "scorer.command", "");
  spec.score_min = Get<double>(s, "score_min", "scorer.score_min", 0.0);
  spec.score_max = Get<double>(s, "score_max", "scorer.score_max", 1.0);
  spec.scorer_id = Get<std::string>(s, "scorer_id", "scorer.scorer_id", "");
  spec.max_in_flight =
      GetCount(s, "max_in_flight", "scorer.max_in_flight", spec.max_in_flight);
  spec.retry_limit =
      GetCount(s, "retry_limit", "scorer.retry_limit", spec.retry_limit);
  spec.timeout = std::chrono::milliseconds(
      GetCount(s, "timeout_ms", "scorer.timeout_ms", spec.timeout.count()));
  spec.backoff_base = std::chrono::milliseconds(GetCount(
      s, "backoff_base_ms", "scorer.backoff_base_ms", spec.backoff_base.count()));
  spec.batch_size = GetCount(s, "batch_size", "scorer.batch_size",
                             spec.kind == ScorerKind::kRemoteHttp ? 32 : 1);
  c.bearer_token_env =
      Get<std::string>(s, "bearer_token_env", "scorer.bearer_token_env", "");
  if (s.contains("lexicon") && s.contains("lexicon_path")) {
    throw ConfigError("scorer.lexicon", "give lexicon or lexicon_path, not both");
  }
  if (s.contains("lexicon")) {
    spec.lexicon = LexiconFromJson(RequireObject(s["lexicon"], "scorer.lexicon"));
  } else if (s.contains("lexicon_path")) {
    const auto path = Resolve(
        base_dir, Get<std::string>(s, "lexicon_path", "scorer.lexicon_path", ""));
    Json lex;
    try {
      lex = Json::parse(ReadFile(path));
    } catch (const Json::exception& e) {
      throw ConfigError("scorer.lexicon_path", e.what());
    } catch (const InputError& e) {
      throw ConfigError("scorer.lexicon_path", e.what());
    }
    spec.lexicon = LexiconFromJson(lex);
  } else if (spec.kind == ScorerKind::kBuiltinLexicon) {
    throw ConfigError("scorer.lexicon",
                      "builtin-lexicon needs lexicon or lexicon_path");
  }

  if (j.contains("thresholds")) {
    const Json& t = j["thresholds"];
    try {
      if (t.is_array()) {
        c.thresholds.values = t.get<std::vector<double>>();
      } else if (t.is_object()) {
        RejectUnknown(t, "thresholds", {"step", "values"});
        c.thresholds.step = t.value("step", 0.05);
        if (t.contains("values")) {
          c.thresholds.values = t["values"].get<std::vector<double>>();
        }
      } else {
        throw ConfigError("thresholds", "must be an array or an object");
      }
    } catch (const Json::exception&) {
      throw ConfigError("thresholds", "must contain numbers");
    }
  }

  const std::string corr =
      Get<std::string>(j, "correlation", "correlation", "pearson");
  auto method = ParseCorrelationMethod(corr);
  if (!method) throw ConfigError("correlation", "must be pearson or spearman");
  c.correlation = *method;

  c.output_dir =
      Resolve(base_dir, Get<std::string>(j, "output_dir", "output_dir", "psa_out"));
  c.cache_dir =
      Resolve(base_dir, Get<std::string>(j, "cache_dir", "cache_dir", ".psa_cache"));

  if (j.contains("flags")) {
    const Json& f = RequireObject(j["flags"], "flags");
    RejectUnknown(f, "flags",
                  {"allow_partial", "match_gender", "include_original",
                   "obfuscate_names", "skip_malformed"});
    c.flags.allow_partial = Get<bool>(f, "allow_partial", "flags.allow_partial", false);
    c.flags.match_gender = Get<bool>(f, "match_gender", "flags.match_gender", false);
    c.flags.include_original =
        Get<bool>(f, "include_original", "flags.include_original", false);
    c.flags.obfuscate_names =
        Get<bool>(f, "obfuscate_names", "flags.obfuscate_names", false);
    c.flags.skip_malformed =
        Get<bool>(f, "skip_malformed", "flags.skip_malformed", false);
  }
  return c;
}

AuditConfig LoadConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const InputError& e) {
    throw ConfigError("config", e.what());
  }
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config", "not valid JSON: " + path.string());
  return ConfigFromJson(j, path.has_parent_path() ? path.parent_path()
                                                  : std::filesystem::path("."));
}

Json ConfigToJson(const AuditConfig& c) {
  Json inventory = Json::array();
  for (const InventoryEntry& e : c.extraction.anchor_inventory) {
    inventory.push_back({{"surface", e.surface},
                         {"form", ToString(e.form)},
                         {"gender", ToString(e.gender)}});
  }
  Json thresholds = {{"step", c.thresholds.step},
                     {"values", c.thresholds.values}};
  return {
      {"corpus",
       {{"path", c.corpus_path.string()},
        {"format", c.corpus_format == CorpusFormat::kCsv     ? "csv"
                   : c.corpus_format == CorpusFormat::kJsonl ? "jsonl"
                                                             : "plain-lines"},
        {"label", c.corpus_label}}},
      {"extraction",
       {{"max_words", c.extraction.max_words},
        {"sample_size", c.extraction.sample_size},
        {"seed", c.extraction.seed},
        {"gender_balance", c.extraction.gender_balance},
        {"her_disambiguation",
         c.extraction.her_disambiguation == HerDisambiguation::kExclude
             ? "exclude"
             : "heuristic"},
        {"anchor_inventory", inventory}}},
      {"names_path", c.names_path.string()},
      {"scorer",
       {{"kind", ToString(c.scorer.kind)},
        {"endpoint", c.scorer.endpoint},
        {"command", c.scorer.command},
        {"score_min", c.scorer.score_min},
        {"score_max", c.scorer.score_max},
        {"scorer_id", c.scorer.scorer_id},
        {"max_in_flight", c.scorer.max_in_flight},
        {"retry_limit", c.scorer.retry_limit},
        {"timeout_ms", c.scorer.timeout.count()},
        {"backoff_base_ms", c.scorer.backoff_base.count()},
        {"batch_size", c.scorer.batch_size},
        {"bearer_token_env", c.bearer_token_env},
        {"lexicon", LexiconToJson(c.scorer.lexicon)}}},
      {"thresholds", thresholds},
      {"correlation", ToString(c.correlation)},
      {"output_dir", c.output_dir.string()},
      {"cache_dir", c.cache_dir.string()},
      {"flags",
       {{"allow_partial", c.flags.allow_partial},
        {"match_gender", c.flags.match_gender},
        {"include_original", c.flags.include_original},
        {"obfuscate_names", c.flags.obfuscate_names},
        {"skip_malformed", c.flags.skip_malformed}}},
  };
}

std::string ConfigHash(const AuditConfig& config) {
  Json j = ConfigToJson(config);
  j.erase("output_dir");
  j.erase("cache_dir");
  j["corpus"]["path"] = FileDigest(config.corpus_path);
  j["names_path"] = FileDigest(config.names_path);
  j["scorer"].erase("max_in_flight");
  j["scorer"].erase("timeout_ms");
  j["scorer"].erase("backoff_base_ms");
  j["scorer"].erase("bearer_token_env");
  return Sha256Hex(j.dump());
}

}  // namespace psa
