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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tiltlab/gaussian_mixtures.hpp"
#include "tiltlab/simplex.hpp"

namespace tiltlab {

inline constexpr char const* kReportSchemaVersion = "1";

std::vector<std::string> const& experiment_names();

//---------------------------------------------------------------------------//
/*!
 * Experiment configuration. Unset optionals and empty grids mean "use the
 * experiment default"; resolve_defaults() fills them in.
 *
 * Text form is one `key = value` per line, '#' starts a comment, lists are
 * comma separated. Baselines: `uniform:K`, `bernoulli:THETA`, `probs:p1,...`.
 * Mixings: `point:MEAN:VAR`, `atoms:W:MEAN:VAR;...`, `inverse-gamma:SHAPE:SCALE[:MEAN]`.
 */
struct ExperimentConfig {
  std::string experiment;
  std::string baseline;
  std::optional<double> target;
  // equality | at-least | window
  std::string constraint;
  std::optional<double> half_width;
  std::vector<int> n_grid;
  std::optional<int> m;
  std::vector<double> t_grid;
  std::optional<std::uint64_t> samples;
  std::string method;
  // midpoint | projection
  std::string proposal;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string mixing;
  std::optional<double> target_variance;
  std::optional<double> epsilon;
  std::optional<double> window_amplitude;
  std::optional<double> window_exponent;
  std::optional<std::uint64_t> replicates;
  std::vector<int> recovery_grid;
  std::optional<double> interval_lower;
  std::optional<double> interval_upper;
  // json | csv
  std::string format = "json";
  std::string out;
  bool timing = false;

  bool operator==(ExperimentConfig const&) const = default;
};

std::string serialize(ExperimentConfig const& config);
ExperimentConfig parse_config(std::string const& text);

// Fills every experiment default; throws std::invalid_argument on an unknown
// experiment or inconsistent settings.
ExperimentConfig resolve_defaults(ExperimentConfig config);

Distribution parse_baseline(std::string const& spec, int first_label);
MixingLaw parse_mixing(std::string const& spec);

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Check {
  std::string name;
  // Module invariant the check instantiates.
  std::string invariant;
  double value = 0.0;
  double threshold = 0.0;
  // Nonnegative iff the check passes.
  double margin = 0.0;
  bool pass = false;
};

// value <= threshold
Check check_at_most(std::string name, std::string invariant, double value, double threshold);
// value >= threshold
Check check_at_least(std::string name, std::string invariant, double value, double threshold);
// |value - reference| <= tolerance; reports the deviation as the value.
Check check_near(std::string name, std::string invariant, double value, double reference,
                 double tolerance);

struct Scalar {
  std::string name;
  Cell value;
};

struct Report {
  ExperimentConfig config;
  std::vector<Scalar> scalars;
  std::vector<Table> tables;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::optional<double> wall_clock_seconds;

  bool all_pass() const;
  Table const* table(std::string const& name) const;
  Check const* check(std::string const& name) const;
  Cell const* scalar(std::string const& name) const;
};

// 0 when every check passes, 1 otherwise.
int exit_code(Report const& report);

Report run_dice(ExperimentConfig const& config);
Report run_dice_concentration(ExperimentConfig const& config);
Report run_bernoulli(ExperimentConfig const& config);
Report run_theorem1(ExperimentConfig const& config);
Report run_windows(ExperimentConfig const& config);
Report run_gsm(ExperimentConfig const& config);
Report run_cf_check(ExperimentConfig const& config);

// Resolves defaults and dispatches on config.experiment.
Report run_experiment(ExperimentConfig const& config);

std::string format_number(double value);
std::string to_csv(Table const& table);
std::string to_json(Report const& report);

}  // namespace tiltlab
