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

#include "tiltlab/random.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace tiltlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t const product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline PhiloxCounter round(PhiloxCounter const& c, PhiloxKey const& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    counter = round(counter, key);
  }
  return counter;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

void RandomStream::refill() {
  PhiloxCounter const ctr{static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(stream_id_),
                          static_cast<std::uint32_t>(stream_id_ >> 32)};
  PhiloxKey const key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox4x32_10(ctr, key);
  ++block_;
  next_ = 0;
}

RandomStream::result_type RandomStream::operator()() {
  if (next_ == 4) refill();
  return buffer_[next_++];
}

double RandomStream::uniform() {
  std::uint64_t const a = (*this)() >> 5;  // 27 bits
  std::uint64_t const b = (*this)() >> 6;  // 26 bits
  std::uint64_t const bits = (a << 26) | b;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::size_t RandomStream::categorical(std::span<double const> cdf) {
  double const u = uniform();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return cdf.size() - 1;
  return static_cast<std::size_t>(it - cdf.begin());
}

void sample_multinomial(RandomStream& rng, std::uint64_t n, std::span<double const> probs,
                        std::span<int> counts) {
  if (counts.size() != probs.size()) {
    throw std::invalid_argument("sample_multinomial: length mismatch");
  }
  std::uint64_t remaining = n;
  double remaining_mass = 1.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (j + 1 == probs.size() || remaining == 0) {
      counts[j] = static_cast<int>(remaining);
      for (std::size_t r = j + 1; r < probs.size(); ++r) counts[r] = 0;
      return;
    }
    double const q = remaining_mass > 0.0 ? std::clamp(probs[j] / remaining_mass, 0.0, 1.0) : 0.0;
    std::uint64_t draw = 0;
    if (q >= 1.0) {
      draw = remaining;
    } else if (q > 0.0) {
      std::binomial_distribution<long long> binom(static_cast<long long>(remaining), q);
      draw = static_cast<std::uint64_t>(binom(rng));
    }
    counts[j] = static_cast<int>(draw);
    remaining -= draw;
    remaining_mass -= probs[j];
  }
}

}  // namespace tiltlab
