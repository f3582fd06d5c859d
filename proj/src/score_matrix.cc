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

#include "psa/score_matrix.h"

#include <cmath>
#include <limits>

namespace psa {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view StateName(CellState s) {
  switch (s) {
    case CellState::kScored:
      return "scored";
    case CellState::kFailed:
      return "failed";
    case CellState::kExcluded:
      return "excluded";
  }
  return "scored";
}

CellState ParseState(const std::string& s) {
  if (s == "failed") return CellState::kFailed;
  if (s == "excluded") return CellState::kExcluded;
  if (s == "scored") return CellState::kScored;
  throw InputError("matrix: unknown cell state '" + s + "'");
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::vector<std::string> sentence_ids,
                         std::vector<std::string> names)
    : sentence_ids_(std::move(sentence_ids)),
      names_(std::move(names)),
      base_(sentence_ids_.size(), kNaN),
      base_state_(sentence_ids_.size(), CellState::kFailed),
      cells_(sentence_ids_.size() * names_.size(), kNaN),
      states_(sentence_ids_.size() * names_.size(), CellState::kFailed) {}

ScoreMatrix ScoreMatrix::FromDense(
    const std::vector<double>& base,
    const std::vector<std::vector<double>>& rows) {
  if (rows.size() != base.size()) {
    throw std::invalid_argument("FromDense: row count != base size");
  }
  const size_t n_names = rows.empty() ? 0 : rows.front().size();
  std::vector<std::string> ids, names;
  for (size_t i = 0; i < base.size(); ++i) ids.push_back("s" + std::to_string(i));
  for (size_t j = 0; j < n_names; ++j) names.push_back("n" + std::to_string(j));
  ScoreMatrix m(std::move(ids), std::move(names));
  for (size_t i = 0; i < base.size(); ++i) {
    if (rows[i].size() != n_names) {
      throw std::invalid_argument("FromDense: ragged rows");
    }
    m.SetBase(i, base[i]);
    for (size_t j = 0; j < n_names; ++j) m.Set(i, j, rows[i][j]);
  }
  return m;
}

void ScoreMatrix::SetBase(size_t i, double v) {
  base_[i] = v;
  base_state_[i] = CellState::kScored;
}

void ScoreMatrix::SetBaseState(size_t i, CellState s) {
  base_state_[i] = s;
  if (s != CellState::kScored) base_[i] = kNaN;
}

void ScoreMatrix::Set(size_t i, size_t j, double v) {
  cells_[i * num_names() + j] = v;
  states_[i * num_names() + j] = CellState::kScored;
}

void ScoreMatrix::SetState(size_t i, size_t j, CellState s) {
  states_[i * num_names() + j] = s;
  if (s != CellState::kScored) cells_[i * num_names() + j] = kNaN;
}

std::vector<CellRef> ScoreMatrix::FailedCells() const {
  std::vector<CellRef> out;
  for (size_t i = 0; i < num_sentences(); ++i) {
    for (size_t j = 0; j < num_names(); ++j) {
      if (state(i, j) == CellState::kFailed) out.push_back({i, j});
    }
  }
  return out;
}

size_t ScoreMatrix::NumFailedBase() const {
  size_t n = 0;
  for (CellState s : base_state_) n += s == CellState::kFailed;
  return n;
}

size_t ScoreMatrix::NumExcluded() const {
  size_t n = 0;
  for (CellState s : states_) n += s == CellState::kExcluded;
  return n;
}

bool ScoreMatrix::Complete() const {
  return NumFailedBase() == 0 && FailedCells().empty();
}

void ScoreMatrix::RequireComplete() const {
  std::vector<std::string> labels;
  for (size_t i = 0; i < num_sentences(); ++i) {
    if (base_state_[i] == CellState::kFailed) {
      labels.push_back("(" + sentence_ids_[i] + ", <base>)");
    }
  }
  for (const CellRef& c : FailedCells()) {
    labels.push_back("(" + sentence_ids_[c.sentence] + ", " + names_[c.name] +
                     ")");
  }
  if (labels.empty()) return;
  std::string message = std::to_string(labels.size()) +
                        " cell(s) failed permanently:";
  const size_t shown = std::min<size_t>(labels.size(), 20);
  for (size_t k = 0; k < shown; ++k) message += " " + labels[k];
  if (shown < labels.size()) message += " ...";
  throw PartialMatrixError(message, std::move(labels));
}

nlohmann::json MatrixToJson(const ScoreMatrix& m) {
  using Json = nlohmann::json;
  Json base = Json::array();
  Json rows = Json::array();
  Json special = Json::array();
  for (size_t i = 0; i < m.num_sentences(); ++i) {
    if (m.base_state(i) == CellState::kScored) {
      base.push_back(m.base(i));
    } else {
      base.push_back(nullptr);
      special.push_back({{"sentence", i},
                         {"name", nullptr},
                         {"state", StateName(m.base_state(i))}});
    }
    Json row = Json::array();
    for (size_t j = 0; j < m.num_names(); ++j) {
      if (m.state(i, j) == CellState::kScored) {
        row.push_back(m.at(i, j));
      } else {
        row.push_back(nullptr);
        special.push_back({{"sentence", i},
                           {"name", j},
                           {"state", StateName(m.state(i, j))}});
      }
    }
    rows.push_back(std::move(row));
  }
  return {{"format", "psa-score-matrix"},
          {"version", 1},
          {"scorer_id", m.scorer_id},
          {"score_min", m.score_min},
          {"score_max", m.score_max},
          {"sentence_ids", m.sentence_ids()},
          {"names", m.names()},
          {"base", std::move(base)},
          {"perturbed", std::move(rows)},
          {"unscored_cells", std::move(special)}};
}

ScoreMatrix MatrixFromJson(const nlohmann::json& j) {
  try {
    ScoreMatrix m(j.at("sentence_ids").get<std::vector<std::string>>(),
                  j.at("names").get<std::vector<std::string>>());
    m.scorer_id = j.at("scorer_id").get<std::string>();
    m.score_min = j.at("score_min").get<double>();
    m.score_max = j.at("score_max").get<double>();
    const auto& base = j.at("base");
    const auto& rows = j.at("perturbed");
    if (base.size() != m.num_sentences() || rows.size() != m.num_sentences()) {
      throw InputError("matrix: row count does not match sentence_ids");
    }
    for (size_t i = 0; i < m.num_sentences(); ++i) {
      if (!base[i].is_null()) m.SetBase(i, base[i].get<double>());
      if (rows[i].size() != m.num_names()) {
        throw InputError("matrix: row " + std::to_string(i) +
                         " does not match names");
      }
      for (size_t c = 0; c < m.num_names(); ++c) {
        if (!rows[i][c].is_null()) m.Set(i, c, rows[i][c].get<double>());
      }
    }
    for (const auto& cell : j.at("unscored_cells")) {
      const size_t i = cell.at("sentence").get<size_t>();
      const CellState s = ParseState(cell.at("state").get<std::string>());
      if (i >= m.num_sentences()) throw InputError("matrix: bad cell index");
      if (cell.at("name").is_null()) {
        m.SetBaseState(i, s);
      } else {
        const size_t c = cell.at("name").get<size_t>();
        if (c >= m.num_names()) throw InputError("matrix: bad cell index");
        m.SetState(i, c, s);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("matrix: ") + e.what());
  }
}

}  // namespace psa
