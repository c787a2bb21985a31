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
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "tiltlab/error.hpp"
#include "tiltlab/random.hpp"
#include "tiltlab/reports.hpp"

using namespace tiltlab;

namespace {

ExperimentConfig named(std::string const& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  return c;
}

double scalar_value(Report const& r, std::string const& name) {
  auto const* c = r.scalar(name);
  REQUIRE(c != nullptr);
  return std::get<double>(*c);
}

ExperimentConfig random_config(RandomStream& rng) {
  ExperimentConfig c;
  auto const& names = experiment_names();
  c.experiment = names[rng() % names.size()];
  if (rng() % 2) c.baseline = "probs:0.2,0.3,0.5";
  if (rng() % 2) c.target = rng.uniform() * 10 - 5;
  if (rng() % 2) c.constraint = "window";
  if (rng() % 2) c.half_width = rng.uniform();
  for (int i = 0, n = rng() % 5; i < n; ++i) c.n_grid.push_back(1 + rng() % 1000);
  if (rng() % 2) c.m = 1 + rng() % 4;
  for (int i = 0, n = rng() % 4; i < n; ++i) c.t_grid.push_back(rng.uniform() * 3);
  if (rng() % 2) c.samples = rng() % 1000000;
  if (rng() % 2) c.method = "rejection";
  if (rng() % 2) c.proposal = "projection";
  c.seed = (static_cast<std::uint64_t>(rng()) << 32) | rng();
  c.threads = rng() % 9;
  if (rng() % 2) c.mixing = "atoms:0.5:0:1;0.5:0:4";
  if (rng() % 2) c.target_variance = rng.uniform() + 0.1;
  if (rng() % 2) c.epsilon = rng.uniform() / 3;
  if (rng() % 2) c.window_amplitude = rng.uniform();
  if (rng() % 2) c.window_exponent = rng.uniform() / 2;
  if (rng() % 2) c.replicates = rng() % 1000;
  for (int i = 0, n = rng() % 5; i < n; ++i) c.recovery_grid.push_back(2 + rng() % 1000);
  if (rng() % 2) c.interval_lower = 1.0 + rng.uniform();
  if (rng() % 2) c.interval_upper = 2.0 + rng.uniform();
  c.format = rng() % 2 ? "json" : "csv";
  if (rng() % 2) c.out = "out dir/report.json";
  c.timing = rng() % 2;
  return c;
}

}  // namespace

TEST_CASE("property: config text round trips") {
  RandomStream rng(99, 0);
  for (int trial = 0; trial < 500; ++trial) {
    auto const c = random_config(rng);
    CHECK(parse_config(serialize(c)) == c);
  }
  for (auto const& name : experiment_names()) {
    auto const c = resolve_defaults(named(name));
    CHECK(parse_config(serialize(c)) == c);
  }
}

TEST_CASE("config defaults fill every grid") {
  for (auto const& name : experiment_names()) {
    auto const c = resolve_defaults(named(name));
    if (name == "bernoulli" || name == "theorem1" || name == "windows" || name == "gsm" ||
        name == "dice-concentration") {
      CHECK_FALSE(c.n_grid.empty());
    }
    if (name == "cf-check") CHECK_FALSE(c.t_grid.empty());
    if (name == "gsm") CHECK_FALSE(c.recovery_grid.empty());
    CHECK(c.seed == 0);
  }
  CHECK_THROWS_AS(resolve_defaults(named("nope")), std::invalid_argument);
}

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(parse_config("colour = red\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("target = abc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n_grid = 10, x\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("just words\n"), std::invalid_argument);
  auto c = parse_config("# comment\nexperiment = dice  # trailing\n\nsamples = 1e5\n");
  CHECK(c.experiment == "dice");
  CHECK(*c.samples == 100000u);
  CHECK_THROWS_AS(parse_baseline("gauss:1", 0), std::invalid_argument);
  CHECK_THROWS_AS(parse_mixing("atoms:0.5:0"), std::invalid_argument);
}

TEST_CASE("number and CSV formatting") {
  CHECK(format_number(0.1234567890123456) == "0.123456789012");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(12) == "12");
  CHECK(format_number(INFINITY) == "inf");
  Table t{"t", {"a", "b,c"}, {{std::string("x\"y"), 1.5}, {std::int64_t{3}, std::string("p\nq")}}};
  CHECK(to_csv(t) == "a,\"b,c\"\n\"x\"\"y\",1.5\n3,\"p\nq\"\n");
}

TEST_CASE("dice report") {
  auto r = run_experiment(named("dice"));
  CHECK(scalar_value(r, "lambda") == doctest::Approx(0.371048938081).epsilon(1e-10));
  CHECK(scalar_value(r, "lambda_opposite_sign") == doctest::Approx(-0.371048938081).epsilon(1e-10));
  CHECK(r.check("abs_lambda")->pass);
  CHECK(r.check("entropy")->pass);
  CHECK(r.check("entropy_max")->pass);
  for (auto const* name : {"p1", "p2", "p3", "p4", "p6"}) CHECK(r.check(name)->pass);
  // The reference 0.234 disagrees with the exact tilt 0.2398.
  CHECK_FALSE(r.check("p5")->pass);
  CHECK(exit_code(r) == 1);

  auto mid = named("dice");
  mid.target = 3.5;
  auto rm = run_experiment(mid);
  CHECK(scalar_value(rm, "lambda") == 0.0);
  CHECK(scalar_value(rm, "entropy") == doctest::Approx(std::log(6.0)).epsilon(1e-15));
  CHECK(exit_code(rm) == 0);

  auto out = named("dice");
  out.target = 6.5;
  try {
    run_experiment(out);
    FAIL("expected InfeasibleError");
  } catch (InfeasibleError const& e) {
    CHECK(std::string(e.what()).find("outside convex hull") != std::string::npos);
  }
}

TEST_CASE("bernoulli report") {
  auto r = run_experiment(named("bernoulli"));
  CHECK(exit_code(r) == 0);
  auto const* sweep = r.table("sweep");
  REQUIRE(sweep != nullptr);
  CHECK(sweep->columns[0] == "n");

  auto four = named("bernoulli");
  four.n_grid = {4};
  auto r4 = run_experiment(four);
  REQUIRE(r4.table("sweep")->rows.size() == 1);
  CHECK(std::get<double>(r4.table("sweep")->rows[0].back()) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r4.check("pr_x1_1_n4")->pass);

  auto interior = named("bernoulli");
  interior.baseline = "bernoulli:0.9";
  auto ri = run_experiment(interior);
  CHECK(scalar_value(ri, "lambda") == 0.0);
  CHECK(std::get<std::string>(*ri.scalar("status")) == "interior");
  CHECK(ri.check("interior_lambda")->pass);
}

TEST_CASE("theorem1 report") {
  auto r = run_experiment(named("theorem1"));
  CHECK(exit_code(r) == 0);
  auto const* sweep = r.table("sweep");
  std::vector<std::string> cols(sweep->columns.begin(), sweep->columns.begin() + 7);
  CHECK(cols == std::vector<std::string>{"n", "m", "tv", "envelope_thm", "envelope_alt",
                                         "bad_mass", "delta"});
  CHECK(r.check("rate_slope")->pass);
  CHECK(r.check("n0")->value <= 40);
}

TEST_CASE("reports are byte-identical and margins match the exit code") {
  for (auto const* name : {"dice", "bernoulli", "windows", "cf-check"}) {
    auto c = named(name);
    c.samples = name == std::string("windows") ? 20'000 : 10'000;
    auto a = to_json(run_experiment(c));
    c.threads = 3;
    auto r = run_experiment(c);
    c.threads = 0;
    auto b = to_json(run_experiment(c));
    CHECK(a == b);
    bool all_margins = true;
    for (auto const& ch : r.checks) {
      CHECK_FALSE(ch.invariant.empty());
      CHECK((ch.margin >= 0.0) == ch.pass);
      all_margins = all_margins && ch.margin >= 0.0;
    }
    CHECK((exit_code(r) == 0) == all_margins);
  }
}

TEST_CASE("json report layout") {
  auto r = run_experiment(named("bernoulli"));
  auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["schema_version"] == "1");
  CHECK(j["experiment"] == "bernoulli");
  CHECK(j["config"]["seed"] == "0");
  CHECK(j["tables"].is_array());
  CHECK(j["checks"][0].contains("margin"));
  CHECK_FALSE(j.contains("wall_clock_seconds"));
  r.wall_clock_seconds = 1.5;
  CHECK(nlohmann::json::parse(to_json(r))["wall_clock_seconds"] == 1.5);
}
