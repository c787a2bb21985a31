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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiltlab/simplex.hpp"

namespace tiltlab {

//---------------------------------------------------------------------------//
/*!
 * Sufficient statistic h: alphabet -> R^d stored as a k x d table.
 *
 * Rejects tables whose centered rows do not span R^d: a constant statistic
 * (d = 1) or linearly dependent components make the tilted covariance
 * singular for every multiplier.
 */
class MomentFunction {
 public:
  MomentFunction(AlphabetPtr alphabet, std::size_t dim, std::vector<double> table);

  // d = 1 statistic from one value per symbol.
  static MomentFunction scalar(AlphabetPtr alphabet, std::vector<double> values);
  // d = 1 statistic that reads each label as a number (die faces, bits).
  static MomentFunction label_values(AlphabetPtr alphabet);

  AlphabetPtr const& alphabet() const { return alphabet_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return alphabet_->size(); }

  double operator()(std::size_t symbol, std::size_t component = 0) const {
    return table_[symbol * dim_ + component];
  }
  std::span<double const> row(std::size_t symbol) const {
    return {table_.data() + symbol * dim_, dim_};
  }
  std::span<double const> table() const { return table_; }

  bool integer_valued() const { return integer_valued_; }
  // Component-wise extremes over the alphabet.
  double min(std::size_t component = 0) const;
  double max(std::size_t component = 0) const;
  // Largest distance between two rows.
  double diameter() const;

 private:
  AlphabetPtr alphabet_;
  std::size_t dim_;
  std::vector<double> table_;
  bool integer_valued_ = false;
};

enum class ConstraintKind { equality, lower_halfspace };

//---------------------------------------------------------------------------//
/*!
 * Moment constraint on a law Q.
 *
 * - equality:         E_Q[h] = target (any d)
 * - lower_halfspace:  E_Q[h] >= target (d = 1)
 * - equality with a half-width eps (d = 1) is the window
 *   target - eps < mean < target + eps; its closure [a, b] is the set the
 *   I-projection targets.
 */
class MomentConstraint {
 public:
  MomentConstraint(MomentFunction h, ConstraintKind kind, std::vector<double> target,
                   std::optional<double> half_width = std::nullopt);

  static MomentConstraint equality(MomentFunction h, double target);
  static MomentConstraint at_least(MomentFunction h, double target);
  static MomentConstraint window(MomentFunction h, double target, double half_width);

  MomentFunction const& statistic() const { return h_; }
  ConstraintKind kind() const { return kind_; }
  std::vector<double> const& target() const { return target_; }
  std::optional<double> half_width() const { return half_width_; }
  bool is_window() const { return half_width_.has_value(); }

  // Window endpoints (a, b); only for windows.
  double lower() const;
  double upper() const;

  // Event test on the sums sum_i h(x_i) of a length-n sample. Types use this
  // with integer counts; the Monte Carlo samplers use the same call so both
  // see identical endpoint handling.
  bool admits_sum(std::span<double const> sums, double n) const;
  bool admits_counts(std::span<int const> counts) const;
  // Event test on an arbitrary law (means).
  bool admits(Distribution const& q) const;

  std::string describe() const;

 private:
  MomentFunction h_;
  ConstraintKind kind_;
  std::vector<double> target_;
  std::optional<double> half_width_;
};

// Frequency-scale tolerance for constraint membership of types.
inline constexpr double kTypeConstraintTol = 1e-12;

// Open-window membership a < sum/n < b with lattice endpoints excluded.
bool window_admits(double sum, double n, double lower, double upper);

//---------------------------------------------------------------------------//
// Tilting
//---------------------------------------------------------------------------//

enum class TiltStatus { interior, active, boundary_infeasible };

char const* to_string(TiltStatus status);

struct TiltSolution {
  std::vector<double> multiplier;
  double log_partition = 0.0;
  // Empty when status is boundary_infeasible.
  std::optional<Distribution> law;
  double divergence = 0.0;
  TiltStatus status = TiltStatus::interior;
  double residual = 0.0;
  int iterations = 0;
  std::string diagnostic;

  bool feasible() const { return status != TiltStatus::boundary_infeasible; }
};

struct SolverOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;
  // Relative margin of the strict hull-interior test.
  double hull_margin = 1e-9;
};

double log_partition(Distribution const& p, MomentFunction const& h,
                     std::span<double const> lambda);
double log_partition(Distribution const& p, MomentFunction const& h, double lambda);

Distribution tilt(Distribution const& p, MomentFunction const& h,
                  std::span<double const> lambda);
Distribution tilt(Distribution const& p, MomentFunction const& h, double lambda);

// E_{tilt(p, h, lambda)}[h], the gradient of log_partition.
std::vector<double> moment_map(Distribution const& p, MomentFunction const& h,
                               std::span<double const> lambda);
double moment_map(Distribution const& p, MomentFunction const& h, double lambda);

// E_q[h] for an arbitrary law.
std::vector<double> mean_of(Distribution const& q, MomentFunction const& h);

struct HullCheck {
  bool interior = false;
  std::string diagnostic;
};

// Strict interior of the convex hull of {h(x)}, with margin
// hull_margin * diameter from every facet.
HullCheck hull_interior(MomentFunction const& h, std::span<double const> alpha,
                        double relative_margin = 1e-9);

TiltSolution solve_moment_equality(Distribution const& p, MomentFunction const& h,
                                   std::span<double const> alpha,
                                   SolverOptions const& options = {});
TiltSolution solve_moment_equality(Distribution const& p, MomentFunction const& h,
                                   double alpha, SolverOptions const& options = {});

TiltSolution i_project(Distribution const& p, MomentConstraint const& c,
                       SolverOptions const& options = {});

// Cumulative tilted mass up to and including `symbol` (alphabet order).
double tilted_cdf(Distribution const& p, MomentFunction const& h, double lambda,
                  std::size_t symbol);

}  // namespace tiltlab
