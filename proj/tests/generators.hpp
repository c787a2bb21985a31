/*
 * Copyright 2026 The tiltlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "tiltlab/random.hpp"
#include "tiltlab/simplex.hpp"

namespace tiltlab::test {

// Strictly positive law on k symbols with masses bounded below by floor / k.
inline Distribution random_positive_law(RandomStream& rng, std::size_t k, double floor = 0.05) {
  std::vector<double> w(k);
  for (auto& x : w) x = floor + rng.uniform();
  return Distribution::normalized(Alphabet::numbered(0, k), w);
}

inline std::vector<int> random_counts(RandomStream& rng, std::size_t k, int n) {
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) ++counts[rng() % k];
  return counts;
}

}  // namespace tiltlab::test
