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

#ifndef PSA_TESTS_TESTING_FIXTURES_H_
#define PSA_TESTS_TESTING_FIXTURES_H_

#include <vector>

#include "psa/random.h"

namespace psa::testing {

struct DenseMatrix {
  std::vector<double> base;
  std::vector<std::vector<double>> rows;
};

// Uniform scores in [0, 1); every tenth value is snapped to a 0.05 grid
// point so threshold ties occur.
inline DenseMatrix RandomDense(SplitMix64& rng, size_t sentences, size_t names) {
  auto draw = [&rng]() {
    const double v = rng.Uniform();
    return rng.Below(10) == 0 ? static_cast<int>(v * 20) * 0.05 : v;
  };
  DenseMatrix d;
  for (size_t i = 0; i < sentences; ++i) {
    d.base.push_back(draw());
    d.rows.emplace_back();
    for (size_t j = 0; j < names; ++j) d.rows.back().push_back(draw());
  }
  return d;
}

}  // namespace psa::testing

#endif  // PSA_TESTS_TESTING_FIXTURES_H_
