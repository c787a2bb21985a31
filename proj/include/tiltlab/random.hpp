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

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

namespace tiltlab {

// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

//---------------------------------------------------------------------------//
/*!
 * Counter-based random stream keyed by (seed, stream id).
 *
 * The key holds the seed; the high counter words hold the stream id and the
 * low words count blocks within the stream. Two streams with different ids
 * never share a counter, so any partition of work across threads reproduces
 * the same draws as long as each unit of work owns a stream id.
 *
 * Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
 */
class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();

  // Index drawn from a cumulative table (last entry treated as 1).
  std::size_t categorical(std::span<double const> cdf);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  unsigned next_ = 4;
};

// Multinomial count vector of n draws from the law `probs`, by conditional
// binomials. Counts are written to `counts` (same length as probs).
void sample_multinomial(RandomStream& rng, std::uint64_t n, std::span<double const> probs,
                        std::span<int> counts);

// Stream id for unit `index` of experiment block `block`.
constexpr std::uint64_t stream_id(std::uint64_t block, std::uint64_t index) {
  return (block << 40) ^ index;
}

}  // namespace tiltlab
