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
#include "tiltlab/error.hpp"
#include "tiltlab/gibbs_mc.hpp"
#include "tiltlab/types.hpp"

using namespace tiltlab;

namespace {

Distribution half() { return Distribution(Alphabet::numbered(0, 2), {0.5, 0.5}); }
MomentFunction bits() { return MomentFunction::label_values(Alphabet::numbered(0, 2)); }

constexpr double kOracleWindow100 = 0.716141380878;

}  // namespace

TEST_CASE("window schedule") {
  CHECK_THROWS_AS(WindowSchedule(0.5, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(WindowSchedule(0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(WindowSchedule(0.0, 0.25), std::invalid_argument);
  WindowSchedule s(0.5, 0.25);
  CHECK(s.half_width(16) == doctest::Approx(0.25));
  auto d = WindowSchedule::default_for(bits());
  CHECK(d.amplitude() == 0.5);
  CHECK(d.exponent() == 0.25);
  CHECK(parse_sampling_method("rejection") == SamplingMethod::rejection);
  CHECK(parse_sampling_method("tilt-importance") == SamplingMethod::tilt_importance);
  CHECK_THROWS_AS(parse_sampling_method("mcmc"), std::invalid_argument);
}

TEST_CASE("rate fit") {
  std::vector<std::pair<double, double>> power, logrt;
  for (double n = 50; n <= 5000; n *= 1.5) {
    power.emplace_back(n, std::pow(n, -1.0 / 3.0));
    logrt.emplace_back(n, std::sqrt(std::log(n) / n));
  }
  auto f = rate_fit(power);
  CHECK(std::abs(f.slope + 1.0 / 3.0) <= 1e-9);
  CHECK(std::abs(f.intercept) <= 1e-9);
  CHECK(f.residual_rms <= 1e-9);
  auto g = rate_fit(logrt);
  CHECK(g.slope > -0.5);
  CHECK(g.slope < -0.4);

  std::vector<std::pair<double, double>> few = {{1, 1}, {2, 0.5}, {3, 0.3}};
  CHECK_THROWS_AS(rate_fit(few), std::invalid_argument);
  std::vector<std::pair<double, double>> zero = {{1, 1}, {2, 0.5}, {3, 0.0}, {4, 0.2}};
  CHECK_THROWS_AS(rate_fit(zero), std::invalid_argument);
}

TEST_CASE("sampler preconditions") {
  SamplerOptions o;
  o.samples = 2000;
  CHECK_THROWS_AS(sample_conditional_blocks(half(), bits(), {0.0, 0.8}, 100, 1, o),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_conditional_blocks(half(), bits(), {0.8, 0.7}, 100, 1, o),
                  std::invalid_argument);
  o.samples = 999;
  CHECK_THROWS_AS(sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 1, o),
                  std::invalid_argument);
}

TEST_CASE("rejection with no acceptances advises importance sampling") {
  SamplerOptions o;
  o.samples = 2000;
  o.method = SamplingMethod::rejection;
  try {
    sample_conditional_blocks(half(), bits(), {0.9, 0.95}, 200, 1, o);
    FAIL("expected SamplingError");
  } catch (SamplingError const& e) {
    CHECK(std::string(e.what()).find("tilt-importance") != std::string::npos);
  }
}

TEST_CASE("determinism across runs and thread counts") {
  SamplerOptions o;
  o.samples = 50'000;
  o.seed = 12;
  o.threads = 1;
  auto a = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 2, o);
  auto b = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 2, o);
  o.threads = 4;
  auto c = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 2, o);
  CHECK(a.estimate.estimate == b.estimate.estimate);
  CHECK(a.estimate.estimate == c.estimate.estimate);
  CHECK(a.estimate.std_error == c.estimate.std_error);
  o.seed = 13;
  auto d = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 2, o);
  CHECK(a.estimate.estimate != d.estimate.estimate);
}

TEST_CASE("importance estimate matches the exact oracle") {
  SamplerOptions o;
  o.samples = 100'000;
  auto s = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 1, o);
  double sum = 0.0;
  for (double e : s.estimate.estimate) sum += e;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.estimate.effective_sample_size >= kMinPublishedEss);
  CHECK(s.estimate.effective_sample_size <= static_cast<double>(s.estimate.accepted) + 1e-6);
  CHECK(std::abs(s.estimate.estimate[1] - kOracleWindow100) <= 3.0 * s.estimate.std_error[1]);

  auto exact = conditional_block_law(half(), MomentConstraint::window(bits(), 0.75, 0.05), 100, 2);
  auto pair = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 2, o);
  for (std::size_t w = 0; w < 4; ++w) {
    CHECK(std::abs(pair.estimate.estimate[w] - exact.masses()[w]) <=
          3.0 * pair.estimate.std_error[w]);
  }
}

TEST_CASE("rejection and importance agree; importance accepts more often") {
  SamplerOptions imp;
  imp.samples = 100'000;
  imp.seed = 3;
  SamplerOptions rej = imp;
  rej.method = SamplingMethod::rejection;
  rej.samples = 4'000'000;
  auto a = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 1, imp);
  auto b = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 1, rej);
  REQUIRE(b.estimate.accepted >= 2);
  CHECK(b.estimate.effective_sample_size == doctest::Approx(b.estimate.accepted));
  double const se = std::hypot(a.estimate.std_error[1], b.estimate.std_error[1]);
  CHECK(std::abs(a.estimate.estimate[1] - b.estimate.estimate[1]) <= 3.0 * se);
  CHECK(std::abs(b.estimate.estimate[1] - kOracleWindow100) <= 3.0 * b.estimate.std_error[1]);
  CHECK(a.estimate.acceptance_rate > b.estimate.acceptance_rate);
}

TEST_CASE("vacuous window reproduces the baseline") {
  SamplerOptions o;
  o.samples = 20'000;
  o.method = SamplingMethod::rejection;
  auto s = sample_conditional_blocks(half(), bits(), {0.001, 0.999}, 50, 1, o);
  CHECK(s.estimate.acceptance_rate == doctest::Approx(1.0));
  CHECK(std::abs(s.estimate.estimate[1] - 0.5) <= 3.0 * s.estimate.std_error[1]);
  o.method = SamplingMethod::tilt_importance;
  auto t = sample_conditional_blocks(half(), bits(), {0.001, 0.999}, 50, 1, o);
  CHECK(std::abs(t.estimate.estimate[1] - 0.5) <= 3.0 * t.estimate.std_error[1]);
}

TEST_CASE("projection-centred proposal agrees with the oracle") {
  SamplerOptions o;
  o.samples = 100'000;
  o.proposal = ProposalCenter::projection;
  auto s = sample_conditional_blocks(half(), bits(), {0.7, 0.8}, 100, 1, o);
  CHECK(std::abs(s.estimate.estimate[1] - kOracleWindow100) <= 3.0 * s.estimate.std_error[1]);
  CHECK(parse_proposal_center("projection") == ProposalCenter::projection);
}

TEST_CASE("window sweep: shrinking windows converge, fixed windows plateau") {
  SamplerOptions o;
  o.samples = 50'000;
  o.proposal = ProposalCenter::projection;
  std::vector<int> grid = {50, 200, 800, 3200};
  auto rows = window_sweep(half(), bits(), 0.75, WindowSchedule(0.5, 0.25), grid, 1, o);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].epsilon < rows[i - 1].epsilon);
    CHECK(rows[i].tv_estimate < rows[i - 1].tv_estimate + rows[i].se);
    CHECK(rows[i].ess >= kMinPublishedEss);
  }
  CHECK(rows.back().tv_estimate < rows.front().tv_estimate);

  auto fixed = window_sweep(half(), bits(), 0.75, WindowSchedule(0.2, 1e-9), grid, 1, o);
  for (auto const& r : fixed) CHECK(r.tv_estimate > 0.15);
}
