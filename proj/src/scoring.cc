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

#include "psa/scoring.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "psa/errors.h"
#include "psa/random.h"
#include "psa/sha256.h"

namespace psa {
namespace {

using Json = nlohmann::json;

std::string SanitizeId(std::string_view id) {
  std::string out(id);
  for (char& ch : out) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' ||
                    ch == '.';
    if (!ok) ch = '_';
  }
  return out;
}

}  // namespace

std::string_view ToString(ScorerKind k) {
  switch (k) {
    case ScorerKind::kRemoteHttp:
      return "remote-http";
    case ScorerKind::kSubprocess:
      return "subprocess";
    case ScorerKind::kBuiltinLexicon:
      return "builtin-lexicon";
  }
  return "builtin-lexicon";
}

std::optional<ScorerKind> ParseScorerKind(std::string_view s) {
  if (s == "remote-http") return ScorerKind::kRemoteHttp;
  if (s == "subprocess") return ScorerKind::kSubprocess;
  if (s == "builtin-lexicon") return ScorerKind::kBuiltinLexicon;
  return std::nullopt;
}

void ScorerSpec::Validate() const {
  if (!std::isfinite(score_min) || !std::isfinite(score_max) ||
      !(score_min < score_max)) {
    throw ConfigError("scorer.score_min",
                      "score_min must be finite and below score_max");
  }
  if (max_in_flight < 1) {
    throw ConfigError("scorer.max_in_flight", "must be >= 1");
  }
  if (batch_size < 1) throw ConfigError("scorer.batch_size", "must be >= 1");
  if (scorer_id.empty()) throw ConfigError("scorer.scorer_id", "must be set");
  if (timeout.count() <= 0) throw ConfigError("scorer.timeout_ms", "must be > 0");
  if (backoff_base.count() < 0) {
    throw ConfigError("scorer.backoff_base_ms", "must be >= 0");
  }
  if (kind == ScorerKind::kRemoteHttp &&
      endpoint.rfind("http://", 0) != 0) {
    throw ConfigError("scorer.endpoint",
                      "remote-http needs an http://host[:port]/path endpoint");
  }
  if (kind == ScorerKind::kSubprocess && command.empty()) {
    throw ConfigError("scorer.command", "subprocess scorer needs a command");
  }
}

// ---------------------------------------------------------------------------
// Backends

std::vector<ScoreOutcome> LexiconBackend::ScoreBatch(
    std::span<const std::string> texts) {
  std::vector<ScoreOutcome> out(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    out[i].score = scorer_.Score(texts[i]);
  }
  return out;
}

HttpBackend::HttpBackend(std::string endpoint,
                         std::chrono::milliseconds timeout,
                         std::string bearer_token)
    : timeout_(timeout), bearer_token_(std::move(bearer_token)) {
  const std::string scheme = "http://";
  if (endpoint.rfind(scheme, 0) != 0) {
    throw ConfigError("scorer.endpoint", "only http:// endpoints are supported");
  }
  const size_t slash = endpoint.find('/', scheme.size());
  if (slash == std::string::npos) {
    base_url_ = endpoint;
    path_ = "/";
  } else {
    base_url_ = endpoint.substr(0, slash);
    path_ = endpoint.substr(slash);
  }
}

std::vector<ScoreOutcome> HttpBackend::ScoreBatch(
    std::span<const std::string> texts) {
  httplib::Client client(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!bearer_token_.empty()) {
    headers.emplace("Authorization", "Bearer " + bearer_token_);
  }
  Json body = {{"texts", Json::array()}};
  for (const std::string& t : texts) body["texts"].push_back(t);
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + base_url_ + path_ + ": " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("POST " + base_url_ + path_ + ": HTTP " +
                         std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProtocolError("POST " + base_url_ + path_ + ": HTTP " +
                        std::to_string(res->status));
  }
  Json reply = Json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("scores") ||
      !reply["scores"].is_array()) {
    throw ProtocolError("reply is not {\"scores\": [...]}");
  }
  const Json& scores = reply["scores"];
  if (scores.size() != texts.size()) {
    throw ProtocolError("reply has " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(texts.size()) +
                        " texts");
  }
  std::vector<ScoreOutcome> out(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    if (scores[i].is_number()) {
      out[i].score = scores[i].get<double>();
    } else if (scores[i].is_null()) {
      out[i].error = "backend returned null";
    } else {
      throw ProtocolError("non-numeric score at position " + std::to_string(i));
    }
  }
  return out;
}

std::unique_ptr<ScorerBackend> MakeBackend(const ScorerSpec& spec) {
  spec.Validate();
  switch (spec.kind) {
    case ScorerKind::kBuiltinLexicon: {
      LexiconConfig config = spec.lexicon;
      config.clip_min = spec.score_min;
      config.clip_max = spec.score_max;
      return std::make_unique<LexiconBackend>(std::move(config));
    }
    case ScorerKind::kRemoteHttp:
      return std::make_unique<HttpBackend>(spec.endpoint, spec.timeout,
                                           spec.bearer_token);
    case ScorerKind::kSubprocess:
      return std::make_unique<SubprocessBackend>(spec.command, spec.timeout);
  }
  throw ConfigError("scorer.kind", "unknown kind");
}

// ---------------------------------------------------------------------------
// Cache

ScoreCache::ScoreCache(const std::filesystem::path& dir,
                       std::string_view scorer_id) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create cache dir " + dir.string());
  path_ = dir / (SanitizeId(scorer_id) + ".jsonl");
  bool needs_newline = false;
  {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      needs_newline = in.eof();
      Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.is_object()) continue;
      auto h = j.find("h");
      auto s = j.find("s");
      if (h == j.end() || s == j.end() || !h->is_string() || !s->is_number()) {
        continue;
      }
      entries_[h->get<std::string>()] = s->get<double>();
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw InputError("cannot open cache file " + path_.string());
  if (needs_newline) out_ << '\n';
}

std::optional<double> ScoreCache::Lookup(const std::string& hash) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::Insert(const std::string& hash, double score) {
  std::unique_lock lock(mu_);
  entries_[hash] = score;
  if (out_.is_open()) {
    out_ << Json{{"h", hash}, {"s", score}}.dump() << '\n';
    out_.flush();
  }
}

void ScoreCache::Flush() {
  std::unique_lock lock(mu_);
  if (out_.is_open()) out_.flush();
}

size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Scorer

Json ScoreManifest::ToJson() const {
  return {{"total_cells", total_cells},
          {"cached", cached},
          {"requested", requested},
          {"backend_calls", backend_calls},
          {"failed", failed},
          {"excluded", excluded},
          {"batch_size", batch_size},
          {"max_in_flight", max_in_flight},
          {"max_observed_in_flight", max_observed_in_flight}};
}

Scorer::Scorer(ScorerSpec spec, std::unique_ptr<ScorerBackend> backend,
               std::shared_ptr<ScoreCache> cache)
    : spec_(std::move(spec)),
      backend_(std::move(backend)),
      cache_(cache ? std::move(cache) : std::make_shared<ScoreCache>()) {
  spec_.Validate();
}

double Scorer::CheckRange(double score) const {
  if (!std::isfinite(score) || score < spec_.score_min ||
      score > spec_.score_max) {
    std::ostringstream msg;
    msg << "scorer '" << spec_.scorer_id << "' returned " << score
        << ", outside its declared range [" << spec_.score_min << ", "
        << spec_.score_max << "]";
    throw ProtocolError(msg.str());
  }
  return score;
}

double Scorer::ScoreText(const std::string& text) {
  std::vector<std::string> errors;
  auto result = ScoreTexts(std::span<const std::string>(&text, 1), nullptr,
                           &errors);
  if (!result[0]) throw TransportError(errors[0]);
  return *result[0];
}

std::vector<std::optional<double>> Scorer::ScoreTexts(
    std::span<const std::string> texts, ScoreManifest* manifest,
    std::vector<std::string>* errors) {
  std::vector<std::optional<double>> results(texts.size());
  std::vector<std::string> last_error(texts.size());

  // Distinct texts that need the backend, by first position.
  std::vector<std::string> hashes(texts.size());
  std::unordered_map<std::string, size_t> first_by_hash;
  std::vector<size_t> pending;
  std::vector<size_t> alias(texts.size());
  size_t cached_cells = 0;
  for (size_t i = 0; i < texts.size(); ++i) {
    hashes[i] = Sha256Hex(texts[i]);
    auto [it, inserted] = first_by_hash.emplace(hashes[i], i);
    alias[i] = it->second;
    if (!inserted) {
      if (results[it->second]) ++cached_cells;
      continue;
    }
    if (auto hit = cache_->Lookup(hashes[i])) {
      results[i] = CheckRange(*hit);
      ++cached_cells;
    } else {
      pending.push_back(i);
    }
  }

  std::vector<std::vector<size_t>> batches;
  for (size_t k = 0; k < pending.size(); k += spec_.batch_size) {
    const size_t end = std::min(pending.size(), k + spec_.batch_size);
    batches.emplace_back(pending.begin() + k, pending.begin() + end);
  }

  std::atomic<size_t> next_batch{0};
  std::atomic<size_t> in_flight{0};
  std::atomic<size_t> max_in_flight{0};
  std::atomic<size_t> calls{0};
  std::atomic<bool> abort{false};
  std::mutex error_mu;
  std::exception_ptr fatal;

  auto run_batch = [&](const std::vector<size_t>& batch) {
    std::vector<size_t> todo = batch;
    for (size_t attempt = 0; attempt <= spec_.retry_limit && !todo.empty();
         ++attempt) {
      if (abort.load()) return;
      if (attempt > 0 && spec_.backoff_base.count() > 0) {
        SplitMix64 rng(jitter_counter_.fetch_add(1) ^ 0x5eedULL);
        const double jitter = 1.0 + (rng.Uniform() * 0.4 - 0.2);
        const double ms = static_cast<double>(spec_.backoff_base.count()) *
                          std::ldexp(1.0, static_cast<int>(attempt) - 1) *
                          jitter;
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
      }
      std::vector<std::string> batch_texts;
      batch_texts.reserve(todo.size());
      for (size_t idx : todo) batch_texts.push_back(texts[idx]);

      const size_t now = in_flight.fetch_add(1) + 1;
      size_t seen = max_in_flight.load();
      while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
      }
      calls.fetch_add(1);
      std::vector<ScoreOutcome> outcomes;
      try {
        outcomes = backend_->ScoreBatch(batch_texts);
      } catch (const TransportError& e) {
        in_flight.fetch_sub(1);
        for (size_t idx : todo) last_error[idx] = e.what();
        continue;
      } catch (...) {
        in_flight.fetch_sub(1);
        throw;
      }
      in_flight.fetch_sub(1);
      if (outcomes.size() != todo.size()) {
        throw ProtocolError("backend returned " +
                            std::to_string(outcomes.size()) + " results for " +
                            std::to_string(todo.size()) + " texts");
      }
      std::vector<size_t> retry;
      for (size_t k = 0; k < todo.size(); ++k) {
        const size_t idx = todo[k];
        if (outcomes[k].score) {
          const double v = CheckRange(*outcomes[k].score);
          results[idx] = v;
          cache_->Insert(hashes[idx], v);
        } else {
          last_error[idx] = outcomes[k].error.empty() ? "scoring failed"
                                                      : outcomes[k].error;
          retry.push_back(idx);
        }
      }
      todo = std::move(retry);
    }
  };

  auto worker = [&] {
    try {
      for (size_t b; !abort.load() && (b = next_batch.fetch_add(1)) < batches.size();) {
        run_batch(batches[b]);
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!fatal) fatal = std::current_exception();
      abort.store(true);
    }
  };

  const size_t n_workers = std::min(spec_.max_in_flight, batches.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n_workers);
    for (size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  }
  cache_->Flush();
  if (fatal) std::rethrow_exception(fatal);

  for (size_t i = 0; i < texts.size(); ++i) {
    if (alias[i] != i) {
      results[i] = results[alias[i]];
      last_error[i] = last_error[alias[i]];
    }
  }
  if (manifest) {
    manifest->cached += cached_cells;
    manifest->requested += pending.size();
    manifest->backend_calls += calls.load();
    manifest->batch_size = spec_.batch_size;
    manifest->max_in_flight = spec_.max_in_flight;
    manifest->max_observed_in_flight =
        std::max(manifest->max_observed_in_flight, max_in_flight.load());
  }
  if (errors) *errors = std::move(last_error);
  return results;
}

MatrixBuild BuildScoreMatrix(Scorer& scorer,
                             std::span<const AnchoredSentence> sentences,
                             std::span<const NameEntry> names,
                             std::span<const PerturbedSentence> grid) {
  std::vector<std::string> ids, name_labels;
  ids.reserve(sentences.size());
  for (const AnchoredSentence& s : sentences) ids.push_back(s.source_id);
  for (const NameEntry& n : names) name_labels.push_back(n.name);

  MatrixBuild build{ScoreMatrix(std::move(ids), std::move(name_labels)), {}, {}};
  ScoreMatrix& m = build.matrix;
  m.scorer_id = scorer.spec().scorer_id;
  m.score_min = scorer.spec().score_min;
  m.score_max = scorer.spec().score_max;

  std::vector<std::string> texts;
  texts.reserve(sentences.size() + grid.size());
  for (const AnchoredSentence& s : sentences) texts.push_back(s.text);
  for (const PerturbedSentence& p : grid) {
    if (p.sentence >= sentences.size() || p.name >= names.size()) {
      throw InputError("grid cell refers to an unknown sentence or name");
    }
    texts.push_back(p.text);
  }

  build.manifest.total_cells = texts.size();
  std::vector<std::string> errors;
  const auto scores = scorer.ScoreTexts(texts, &build.manifest, &errors);
  for (size_t k = 0; k < scores.size() && build.first_error.empty(); ++k) {
    if (!scores[k]) build.first_error = errors[k];
  }

  for (size_t i = 0; i < m.num_sentences(); ++i) {
    for (size_t j = 0; j < m.num_names(); ++j) {
      m.SetState(i, j, CellState::kExcluded);
    }
  }
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (scores[i]) {
      m.SetBase(i, *scores[i]);
    } else {
      m.SetBaseState(i, CellState::kFailed);
      ++build.manifest.failed;
    }
  }
  for (size_t k = 0; k < grid.size(); ++k) {
    const auto& v = scores[sentences.size() + k];
    if (v) {
      m.Set(grid[k].sentence, grid[k].name, *v);
    } else {
      m.SetState(grid[k].sentence, grid[k].name, CellState::kFailed);
      ++build.manifest.failed;
    }
  }
  build.manifest.excluded = m.NumExcluded();
  return build;
}

}  // namespace psa
