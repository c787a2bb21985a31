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

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tiltlab/error.hpp"
#include "tiltlab/reports.hpp"

namespace {

constexpr int kExitConfig = 2;

std::string usage_names() {
  std::string s;
  for (auto const& n : tiltlab::experiment_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

std::string read_file(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(std::string const& path, std::string const& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << text;
}

void emit(tiltlab::Report const& report) {
  auto const& c = report.config;
  if (c.format == "json") {
    std::string const text = tiltlab::to_json(report);
    if (c.out.empty()) std::cout << text;
    else write_text(c.out, text);
    return;
  }
  if (c.out.empty()) {
    if (!report.tables.empty()) std::cout << tiltlab::to_csv(report.tables.front());
    return;
  }
  // Primary table at --out, the rest next to it as <stem>_<table>.csv.
  std::filesystem::path const out(c.out);
  auto sibling = [&](std::string const& suffix) {
    return (out.parent_path() / (out.stem().string() + "_" + suffix + ".csv")).string();
  };
  for (std::size_t i = 0; i < report.tables.size(); ++i) {
    auto const& t = report.tables[i];
    write_text(i == 0 ? c.out : sibling(t.name), tiltlab::to_csv(t));
  }
  tiltlab::Table checks{"checks", {"name", "invariant", "value", "threshold", "margin", "pass"}, {}};
  for (auto const& ch : report.checks) {
    checks.rows.push_back({ch.name, ch.invariant, ch.value, ch.threshold, ch.margin,
                           std::string(ch.pass ? "true" : "false")});
  }
  write_text(sibling("checks"), tiltlab::to_csv(checks));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential tilting, method-of-types oracles and conditioning experiments",
               "tiltlab"};
  app.set_version_flag("--version", std::string("tiltlab ") + TILTLAB_VERSION);

  std::string experiment;
  std::string config_path;
  struct Flag {
    char const* name;
    char const* key;
    char const* help;
  };
  static Flag const flags[] = {
      {"--baseline", "baseline", "uniform:K | bernoulli:THETA | probs:p1,p2,..."},
      {"--target", "target", "moment target (mean for gsm)"},
      {"--constraint", "constraint", "equality | at-least | window"},
      {"--half-width", "half_width", "window half-width for --constraint window"},
      {"--n-grid", "n_grid", "comma separated sample sizes"},
      {"--m", "m", "block length"},
      {"--t-grid", "t_grid", "comma separated characteristic function arguments"},
      {"--samples", "samples", "Monte Carlo proposals or samples"},
      {"--method", "method", "rejection | tilt-importance"},
      {"--proposal", "proposal", "tilt-importance proposal mean: midpoint | projection"},
      {"--seed", "seed", "random seed (default 0)"},
      {"--threads", "threads", "worker threads (0 = all cores)"},
      {"--mixing", "mixing", "point:M:V | atoms:W:M:V;... | inverse-gamma:A:B[:M]"},
      {"--target-variance", "target_variance", "variance target for gsm"},
      {"--epsilon", "epsilon", "fixed two-moment window half-width for gsm"},
      {"--window-amplitude", "window_amplitude", "window schedule amplitude c"},
      {"--window-exponent", "window_exponent", "window schedule exponent gamma"},
      {"--replicates", "replicates", "replicates per n in the variance recovery"},
      {"--recovery-grid", "recovery_grid", "n grid of the variance recovery"},
      {"--interval-lower", "interval_lower", "entropy interval lower end"},
      {"--interval-upper", "interval_upper", "entropy interval upper end"},
      {"--format", "format", "json | csv"},
  };
  std::vector<std::string> values(std::size(flags));
  app.add_option("experiment", experiment, "one of: " + usage_names());
  app.add_option("--config", config_path, "key = value configuration file");
  for (std::size_t i = 0; i < std::size(flags); ++i) {
    app.add_option(flags[i].name, values[i], flags[i].help);
  }
  std::string out;
  bool timing = false;
  bool print_config = false;
  app.add_option("--out", out, "output path (default stdout)");
  app.add_flag("--timing", timing, "include wall-clock seconds in the report");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const& e) {
    return app.exit(e);
  } catch (CLI::CallForVersion const& e) {
    return app.exit(e);
  } catch (CLI::ParseError const& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    std::string text = config_path.empty() ? "" : read_file(config_path) + "\n";
    if (!experiment.empty()) text += "experiment = " + experiment + "\n";
    for (std::size_t i = 0; i < std::size(flags); ++i) {
      if (app.count(flags[i].name) > 0) text += std::string(flags[i].key) + " = " + values[i] + "\n";
    }
    if (app.count("--out") > 0) text += "out = " + out + "\n";
    if (timing) text += "timing = true\n";

    auto config = tiltlab::parse_config(text);
    auto const& names = tiltlab::experiment_names();
    if (std::find(names.begin(), names.end(), config.experiment) == names.end()) {
      std::cerr << "error: unknown experiment '" << config.experiment << "'\n"
                << "usage: tiltlab <experiment> [options]\n"
                << "experiments: " << usage_names() << "\n\n"
                << app.help();
      return kExitConfig;
    }
    config = tiltlab::resolve_defaults(config);
    if (print_config) {
      std::cout << tiltlab::serialize(config);
      return 0;
    }

    auto const start = std::chrono::steady_clock::now();
    auto report = tiltlab::run_experiment(config);
    if (config.timing) {
      report.wall_clock_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    emit(report);
    for (auto const& c : report.checks) {
      std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << tiltlab::format_number(c.value)
                << " threshold=" << tiltlab::format_number(c.threshold)
                << " margin=" << tiltlab::format_number(c.margin) << "\n";
    }
    return tiltlab::exit_code(report);
  } catch (tiltlab::Error const& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (std::invalid_argument const& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
