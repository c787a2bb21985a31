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
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "tiltlab/error.hpp"
#include "tiltlab/tilt.hpp"

using namespace tiltlab;

namespace {

Distribution die() { return Distribution::uniform(Alphabet::numbered(1, 6)); }

}  // namespace

TEST_CASE("moment function validation") {
  auto a = Alphabet::numbered(1, 3);
  CHECK_THROWS_AS(MomentFunction::scalar(a, {2.0, 2.0, 2.0}), std::invalid_argument);
  // Second component is twice the first: rank deficient after centering.
  CHECK_THROWS_AS(MomentFunction(a, 2, {1, 2, 2, 4, 3, 6}), std::invalid_argument);
  auto h = MomentFunction::label_values(a);
  CHECK(h.integer_valued());
  CHECK(h.min() == 1.0);
  CHECK(h.max() == 3.0);
}

TEST_CASE("log partition and moment map closed forms") {
  auto p = Distribution::bernoulli(0.5);
  auto h = MomentFunction::label_values(p.alphabet());
  CHECK(log_partition(p, h, 1.0) == doctest::Approx(0.620114506958).epsilon(1e-12));
  CHECK(moment_map(p, h, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-14));
  auto t0 = tilt(p, h, 0.0);
  CHECK(t0[0] == p[0]);
  CHECK(t0[1] == p[1]);
  // Large multipliers stay finite.
  CHECK(std::isfinite(log_partition(p, h, 800.0)));
  CHECK(moment_map(p, h, 800.0) == doctest::Approx(1.0));
  CHECK(moment_map(p, h, -800.0) == doctest::Approx(0.0));
}

TEST_CASE("property: moment map is increasing and is the derivative of M") {
  RandomStream rng(5, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t const k = 2 + rng() % 5;
    auto p = test::random_positive_law(rng, k);
    std::vector<double> vals(k);
    for (auto& v : vals) v = 4.0 * rng.uniform() - 2.0;
    vals[0] = -3.0;
    vals[1] = 3.0;
    auto h = MomentFunction::scalar(p.alphabet(), vals);
    double const l = 4.0 * rng.uniform() - 2.0;
    double const eps = 1e-5;
    double const fd = (log_partition(p, h, l + eps) - log_partition(p, h, l - eps)) / (2 * eps);
    CHECK(moment_map(p, h, l) == doctest::Approx(fd).epsilon(1e-7));
    CHECK(moment_map(p, h, l + 0.1) > moment_map(p, h, l));
  }
}

TEST_CASE("dice tilt at mean 4.5") {
  auto p = die();
  auto h = MomentFunction::label_values(p.alphabet());
  auto sol = solve_moment_equality(p, h, 4.5);
  REQUIRE(sol.feasible());
  CHECK(sol.status == TiltStatus::active);
  CHECK(sol.multiplier[0] == doctest::Approx(0.371048938081).epsilon(1e-10));
  double const expected[6] = {0.0543531678265, 0.0787715456331, 0.114159977229,
                              0.16544680311,   0.239774440427,  0.347494065774};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK((*sol.law)[i] == doctest::Approx(expected[i]).epsilon(1e-10));
  }
  // Published p = (0.054, 0.078, 0.114, 0.165, 0.234, 0.347): five entries agree to
  // 1e-3; the fifth does not (those values sum to 0.992).
  CHECK(std::abs((*sol.law)[4] - 0.2398) < 1e-4);
  CHECK(entropy(*sol.law) == doctest::Approx(1.613581098154).epsilon(1e-11));
  CHECK(sol.divergence == doctest::Approx(0.178178371074).epsilon(1e-11));
  CHECK(sol.divergence == doctest::Approx(std::log(6.0) - entropy(*sol.law)).epsilon(1e-12));
  CHECK(tilted_cdf(p, h, sol.multiplier[0], 2) == doctest::Approx(0.247284690689).epsilon(1e-11));
  CHECK(sol.residual <= 1e-10);
}

TEST_CASE("dice degenerate targets") {
  auto p = die();
  auto h = MomentFunction::label_values(p.alphabet());
  auto mid = solve_moment_equality(p, h, 3.5);
  REQUIRE(mid.feasible());
  CHECK(mid.multiplier[0] == 0.0);
  CHECK(entropy(*mid.law) == doctest::Approx(std::log(6.0)).epsilon(1e-15));

  for (double bad : {6.5, 6.0, 1.0, 0.5}) {
    auto s = solve_moment_equality(p, h, bad);
    CHECK(s.status == TiltStatus::boundary_infeasible);
    CHECK_FALSE(s.law.has_value());
    CHECK(s.diagnostic.find("outside convex hull") != std::string::npos);
  }
}

TEST_CASE("two-dimensional statistic") {
  auto p = die();
  std::vector<double> table;
  for (int x = 1; x <= 6; ++x) {
    table.push_back(x);
    table.push_back(x * x);
  }
  MomentFunction h(p.alphabet(), 2, table);
  std::vector<double> alpha = {4.5, 22.0};
  auto sol = solve_moment_equality(p, h, alpha);
  REQUIRE(sol.feasible());
  CHECK(sol.multiplier[0] == doctest::Approx(1.35590562606).epsilon(1e-9));
  CHECK(sol.multiplier[1] == doctest::Approx(-0.123782264595).epsilon(1e-9));
  CHECK((*sol.law)[0] == doctest::Approx(0.0240550726760).epsilon(1e-9));
  CHECK((*sol.law)[5] == doctest::Approx(0.277964877526).epsilon(1e-9));
  CHECK(sol.log_partition == doctest::Approx(3.16777327483).epsilon(1e-10));

  // Second moment below (E X)^2 lies outside the hull.
  std::vector<double> outside = {4.5, 20.0};
  auto bad = solve_moment_equality(p, h, outside);
  CHECK(bad.status == TiltStatus::boundary_infeasible);
  CHECK(hull_interior(h, outside).interior == false);
  CHECK(hull_interior(h, alpha).interior == true);
}

TEST_CASE("property: solver round trip through the moment map") {
  RandomStream rng(17, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t const k = 2 + rng() % 6;
    auto p = test::random_positive_law(rng, k);
    auto h = MomentFunction::label_values(p.alphabet());
    double const lambda = 6.0 * rng.uniform() - 3.0;
    double const alpha = moment_map(p, h, lambda);
    auto sol = solve_moment_equality(p, h, alpha);
    REQUIRE(sol.feasible());
    CHECK(sol.multiplier[0] == doctest::Approx(lambda).epsilon(1e-7));
    CHECK(std::abs(mean_of(*sol.law, h)[0] - alpha) <= 1e-9);
    // Pythagorean identity D(Q||P) = D(Q||P*) + D(P*||P) for Q with the same mean.
    CHECK(sol.divergence >= 0.0);
  }
}

TEST_CASE("I-projection onto half-spaces and windows") {
  auto p = Distribution::bernoulli(0.5);
  auto h = MomentFunction::label_values(p.alphabet());

  auto active = i_project(p, MomentConstraint::at_least(h, 0.75));
  CHECK(active.status == TiltStatus::active);
  CHECK(active.multiplier[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK((*active.law)[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(active.divergence == doctest::Approx(0.130812035941).epsilon(1e-11));

  auto inside = i_project(Distribution::bernoulli(0.9), MomentConstraint::at_least(h, 0.75));
  CHECK(inside.status == TiltStatus::interior);
  CHECK(inside.multiplier[0] == 0.0);
  CHECK((*inside.law)[1] == doctest::Approx(0.9));
  CHECK(inside.divergence == 0.0);

  auto window = i_project(p, MomentConstraint::window(h, 0.75, 0.05));
  CHECK(window.status == TiltStatus::active);
  CHECK((*window.law)[1] == doctest::Approx(0.70).epsilon(1e-12));
  CHECK(window.multiplier[0] == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-12));

  auto above = i_project(Distribution::bernoulli(0.95), MomentConstraint::window(h, 0.75, 0.05));
  CHECK((*above.law)[1] == doctest::Approx(0.80).epsilon(1e-12));

  auto none = i_project(p, MomentConstraint::at_least(h, 1.0));
  CHECK(none.status == TiltStatus::boundary_infeasible);
}

TEST_CASE("property: I-projection minimizes divergence over feasible tilts") {
  RandomStream rng(23, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t const k = 3 + rng() % 4;
    auto p = test::random_positive_law(rng, k);
    auto h = MomentFunction::label_values(p.alphabet());
    double const target = 0.5 + (static_cast<double>(k) - 2.0) * rng.uniform();
    auto c = MomentConstraint::at_least(h, target);
    auto sol = i_project(p, c);
    REQUIRE(sol.feasible());
    CHECK(c.admits(*sol.law));
    // Any other feasible law built by mixing P* with a feasible point mass
    // has larger divergence.
    auto top = Distribution::point_mass(p.alphabet(), k - 1);
    for (double w : {0.01, 0.1, 0.5}) {
      std::vector<double> mix(k);
      for (std::size_t x = 0; x < k; ++x) mix[x] = (1 - w) * (*sol.law)[x] + w * top[x];
      Distribution q(p.alphabet(), mix);
      CHECK(kl_divergence(q, p) >= sol.divergence - 1e-12);
    }
  }
}

TEST_CASE("constraint admission uses open windows") {
  auto h = MomentFunction::label_values(Alphabet::numbered(0, 2));
  auto c = MomentConstraint::window(h, 0.75, 0.05);
  std::vector<double> on_edge = {70.0};
  std::vector<double> inside = {71.0};
  CHECK_FALSE(c.admits_sum(on_edge, 100));
  CHECK(c.admits_sum(inside, 100));
  CHECK_FALSE(window_admits(80.0, 100, 0.7, 0.8));
  auto ge = MomentConstraint::at_least(h, 0.75);
  std::vector<double> at = {75.0};
  CHECK(ge.admits_sum(at, 100));
}
