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

#ifndef PSA_SCORE_MATRIX_H_
#define PSA_SCORE_MATRIX_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "psa/errors.h"

namespace psa {

enum class CellState : uint8_t {
  kScored,
  kFailed,    // scoring failed permanently
  kExcluded,  // never requested (e.g. gender-matched grids)
};

// Base scores f(x) per sentence and perturbed scores f(x_n) per
// (sentence, name) cell, stored row-major (sentence-major).
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> sentence_ids,
              std::vector<std::string> names);

  // Complete matrix from dense values; ids/names default to s0.., n0...
  static ScoreMatrix FromDense(const std::vector<double>& base,
                               const std::vector<std::vector<double>>& rows);

  size_t num_sentences() const { return sentence_ids_.size(); }
  size_t num_names() const { return names_.size(); }
  const std::vector<std::string>& sentence_ids() const { return sentence_ids_; }
  const std::vector<std::string>& names() const { return names_; }

  double base(size_t i) const { return base_[i]; }
  CellState base_state(size_t i) const { return base_state_[i]; }
  double at(size_t i, size_t j) const { return cells_[i * num_names() + j]; }
  CellState state(size_t i, size_t j) const {
    return states_[i * num_names() + j];
  }
  // Both f(x_i) and f(x_i with name j) are available.
  bool has(size_t i, size_t j) const {
    return base_state_[i] == CellState::kScored &&
           states_[i * num_names() + j] == CellState::kScored;
  }

  void SetBase(size_t i, double v);
  void SetBaseState(size_t i, CellState s);
  void Set(size_t i, size_t j, double v);
  void SetState(size_t i, size_t j, CellState s);

  // Cells (including base cells, reported with name "<base>") that failed.
  std::vector<CellRef> FailedCells() const;
  size_t NumFailedBase() const;
  size_t NumExcluded() const;
  bool Complete() const;

  // Throws PartialMatrixError listing "(sentence_id, name)" for each
  // failed cell.
  void RequireComplete() const;

  std::string scorer_id;
  double score_min = 0.0;
  double score_max = 1.0;

 private:
  std::vector<std::string> sentence_ids_;
  std::vector<std::string> names_;
  std::vector<double> base_;
  std::vector<CellState> base_state_;
  std::vector<double> cells_;
  std::vector<CellState> states_;
};

// Lossless JSON form used as the matrix stage artifact. Missing cells are
// null; their states are listed separately.
nlohmann::json MatrixToJson(const ScoreMatrix& m);
ScoreMatrix MatrixFromJson(const nlohmann::json& j);

}  // namespace psa

#endif  // PSA_SCORE_MATRIX_H_
