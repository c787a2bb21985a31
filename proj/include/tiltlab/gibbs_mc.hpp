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
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiltlab/simplex.hpp"
#include "tiltlab/tilt.hpp"

namespace tiltlab {

//---------------------------------------------------------------------------//
/*!
 * Shrinking window half-widths eps_n = c n^{-gamma} with 0 < gamma < 1/2,
 * so that n eps_n^2 grows without bound.
 */
class WindowSchedule {
 public:
  WindowSchedule(double amplitude, double exponent);

  // Amplitude 0.5 * (max h - min h), exponent 0.25.
  static WindowSchedule default_for(MomentFunction const& h);

  double amplitude() const { return amplitude_; }
  double exponent() const { return exponent_; }
  double half_width(int n) const;

 private:
  double amplitude_;
  double exponent_;
};

// Open window a < mean < b on the empirical h-average.
struct Window {
  double lower = 0.0;
  double upper = 0.0;
};

enum class SamplingMethod { rejection, tilt_importance };

char const* to_string(SamplingMethod method);
SamplingMethod parse_sampling_method(std::string const& name);

// Mean of the tilted proposal: the window midpoint, or the point of the
// closed window nearest E_p[h] (the I-projection onto [a, b]). The second
// keeps the weights flat when n eps is large.
enum class ProposalCenter { midpoint, projection };

char const* to_string(ProposalCenter center);
ProposalCenter parse_proposal_center(std::string const& name);

struct McEstimate {
  // One entry per block word (dense base-k order), with standard errors.
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate = 0.0;
  // (sum w)^2 / sum w^2; equals `accepted` for rejection.
  double effective_sample_size = 0.0;
  std::uint64_t seed = 0;
  SamplingMethod method = SamplingMethod::rejection;
  // Per word: sum of squared normalized weights of the accepted draws that
  // landed on it. Enough to recover the standard error of any linear
  // functional of the block law.
  std::vector<double> squared_weight;

  // Standard error of sum_w g(w) * estimate(w).
  double functional_se(std::span<double const> g) const;
};

struct ConditionalSample {
  McEstimate estimate;
  BlockLaw law;
};

struct SamplerOptions {
  std::uint64_t samples = 100'000;
  SamplingMethod method = SamplingMethod::tilt_importance;
  ProposalCenter proposal = ProposalCenter::midpoint;
  std::uint64_t seed = 0;
  // Separates the random streams of independent calls sharing a seed.
  std::uint64_t stream_block = 0;
  unsigned threads = 0;
};

// Minimum effective sample size for a published estimate.
inline constexpr double kMinPublishedEss = 50.0;

/*!
 * Law of X_{1:m} given a < (1/n) sum h(X_i) < b, by simulation.
 *
 * Rejection draws length-n sequences from p. Tilt-importance draws them
 * from a tilt of p (mean set by options.proposal) and reweights each
 * accepted sequence by prod_i exp(-lambda h(x_i) + M(lambda)), self-normalized.
 *
 * Only the first m symbols and the h-sum of the sequence matter, so the
 * remaining n - m symbols are drawn as a multinomial count vector; the
 * accepted blocks have exactly the law of the sequence-level procedure.
 */
ConditionalSample sample_conditional_blocks(Distribution const& p, MomentFunction const& h,
                                            Window window, int n, std::size_t m,
                                            SamplerOptions const& options);

struct WindowSweepRow {
  int n = 0;
  double epsilon = 0.0;
  // Plug-in TV between the empirical block law and (P*)^{m}; biased upward
  // by sampling noise.
  double tv_estimate = 0.0;
  double se = 0.0;
  double acceptance_rate = 0.0;
  double ess = 0.0;
  SamplingMethod method = SamplingMethod::tilt_importance;
  std::uint64_t seed = 0;
  McEstimate mc;
};

std::vector<WindowSweepRow> window_sweep(Distribution const& p, MomentFunction const& h,
                                         double target, WindowSchedule const& schedule,
                                         std::span<int const> n_grid, std::size_t m,
                                         SamplerOptions const& options);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::vector<std::pair<double, double>> grid;
};

// Least squares of ln tv on ln n; needs >= 4 points with tv > 0.
RateFit rate_fit(std::span<std::pair<double, double> const> records);

}  // namespace tiltlab
