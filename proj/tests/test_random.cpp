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

#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "tiltlab/parallel.hpp"
#include "tiltlab/random.hpp"

using namespace tiltlab;

TEST_CASE("philox4x32-10 known answers") {
  auto r0 = philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(r0 == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  auto r1 = philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          {0xffffffff, 0xffffffff});
  CHECK(r1 == PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  auto r2 = philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          {0xa4093822, 0x299f31d0});
  CHECK(r2 == PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(7, stream_id(2, 5));
  RandomStream b(7, stream_id(2, 5));
  RandomStream c(7, stream_id(2, 6));
  RandomStream d(8, stream_id(2, 5));
  std::vector<std::uint32_t> xa, xb, xc, xd;
  for (int i = 0; i < 64; ++i) {
    xa.push_back(a());
    xb.push_back(b());
    xc.push_back(c());
    xd.push_back(d());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
  CHECK(stream_id(1, 0) != stream_id(0, 1));
}

TEST_CASE("uniform moments") {
  RandomStream rng(1, 0);
  double sum = 0.0, sq = 0.0;
  int const n = 200000;
  for (int i = 0; i < n; ++i) {
    double const u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  double const mean = sum / n;
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sq / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("categorical and multinomial") {
  RandomStream rng(3, 0);
  std::vector<double> cdf = {0.2, 0.5, 1.0};
  std::vector<int> hits(3, 0);
  int const n = 100000;
  for (int i = 0; i < n; ++i) ++hits[rng.categorical(cdf)];
  CHECK(std::abs(hits[0] / double(n) - 0.2) < 0.01);
  CHECK(std::abs(hits[2] / double(n) - 0.5) < 0.01);

  std::vector<double> probs = {0.1, 0.6, 0.3};
  std::vector<int> counts(3);
  double first = 0.0;
  for (int r = 0; r < 2000; ++r) {
    sample_multinomial(rng, 50, probs, counts);
    REQUIRE(counts[0] + counts[1] + counts[2] == 50);
    first += counts[1];
  }
  CHECK(std::abs(first / 2000.0 - 30.0) < 0.5);
}

TEST_CASE("chunked parallel reduction is thread-count invariant") {
  auto run = [](unsigned threads) {
    std::vector<double> slots(37);
    parallel_for_chunks(slots.size(), threads, [&](std::size_t c) {
      RandomStream rng(9, stream_id(0, c));
      for (int i = 0; i < 1000; ++i) slots[c] += rng.uniform();
    });
    double total = 0.0;
    for (double s : slots) total += s;
    return total;
  };
  double const one = run(1);
  CHECK(run(3) == one);
  CHECK(run(8) == one);
  CHECK_THROWS_AS(parallel_for_chunks(4, 2, [](std::size_t c) {
                    if (c == 2) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}
