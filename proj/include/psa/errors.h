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

#ifndef PSA_ERRORS_H_
#define PSA_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace psa {

// Base class of every error raised by the toolkit. The CLI maps each
// subclass onto a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: unreadable files, malformed corpus records, corrupt spans.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration. `field` names the offending config key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A scorer could not be reached, timed out, or exhausted its retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A scorer answered, but the answer violates the wire contract (e.g. a
// score outside the declared range, or a reply with the wrong arity).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A metric was requested on a precondition-violating input (e.g. fewer than
// three sentences for a correlation).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Cell of the evaluation grid: (sentence row, name column).
struct CellRef {
  size_t sentence = 0;
  size_t name = 0;
  bool operator==(const CellRef&) const = default;
};

// Scoring finished but some cells failed permanently.
class PartialMatrixError : public Error {
 public:
  PartialMatrixError(const std::string& message, std::vector<std::string> cells)
      : Error(message), cells_(std::move(cells)) {}
  // Human-readable "(sentence_id, name)" labels of the failed cells.
  const std::vector<std::string>& cells() const { return cells_; }

 private:
  std::vector<std::string> cells_;
};

}  // namespace psa

#endif  // PSA_ERRORS_H_
