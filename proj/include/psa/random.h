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

#ifndef PSA_RANDOM_H_
#define PSA_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace psa {

// SplitMix64 (Steele, Lea & Flood 2014). Every sampling decision in an audit
// is drawn from one of these so that a seed fully determines the run.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t Next();

  // Uniform integer in [0, bound) using rejection sampling (no modulo bias).
  // `bound` must be > 0.
  uint64_t Below(uint64_t bound);

  // Uniform double in [0, 1) built from the top 53 bits.
  double Uniform();

 private:
  uint64_t state_;
};

// Chooses `k` distinct indices from [0, n) uniformly without replacement
// (partial Fisher-Yates). Returned indices are sorted ascending. Requires
// k <= n.
std::vector<size_t> SampleWithoutReplacement(size_t n, size_t k,
                                             SplitMix64& rng);

}  // namespace psa

#endif  // PSA_RANDOM_H_
