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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiltlab/gibbs_mc.hpp"

namespace tiltlab {

class RandomStream;

struct MixtureAtom {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 1.0;
};

struct Latent {
  double mean = 0.0;
  double variance = 1.0;
};

//---------------------------------------------------------------------------//
/*!
 * Mixing law G for the pair (M, V) of a Gaussian location-scale mixture
 * X_i | (M, V) ~ N(M, V).
 *
 * Three kinds: a point mass, a finite set of atoms, and an inverse-gamma
 * variance V ~ IG(shape, scale) with a fixed mean. The inverse-gamma case
 * gives Student-t marginals.
 */
class MixingLaw {
 public:
  enum class Kind { point, discrete, inverse_gamma };

  static MixingLaw point(double mean, double variance);
  static MixingLaw discrete(std::vector<MixtureAtom> atoms);
  static MixingLaw inverse_gamma(double shape, double scale, double mean = 0.0);

  Kind kind() const { return kind_; }
  std::span<MixtureAtom const> atoms() const { return atoms_; }
  double shape() const { return shape_; }
  double scale() const { return scale_; }
  double mean() const { return mean_; }

  Latent draw(RandomStream& rng) const;

  // E[exp(i t X)] for one coordinate. Exact for atoms; the inverse-gamma
  // Laplace transform is integrated numerically.
  std::complex<double> characteristic_function(double t) const;

  std::string describe() const;

 private:
  MixingLaw() = default;

  Kind kind_ = Kind::point;
  std::vector<MixtureAtom> atoms_;
  std::vector<double> cdf_;
  double shape_ = 0.0;
  double scale_ = 0.0;
  double mean_ = 0.0;
};

// E[exp(-s V)] for V ~ IG(shape, scale) by exp-sinh quadrature.
double inverse_gamma_laplace(double shape, double scale, double s);

struct RealSample {
  std::vector<double> values;
  Latent latent;
  std::uint64_t seed = 0;
};

// One latent draw, then n conditionally i.i.d. Gaussians. `stream` picks
// one of many independent sequences under the same seed.
RealSample sample_gsm(MixingLaw const& g, int n, std::uint64_t seed, std::uint64_t stream = 0);

// (mean, (1/n) sum (x_i - mean)^2); needs n >= 2.
std::pair<double, double> empirical_limits(std::span<double const> values);
std::pair<double, double> empirical_limits(RealSample const& s);

// sup_x |F_n(x) - Phi((x - mean) / sqrt(variance))|; sorts a copy.
double ks_statistic_normal(std::span<double const> values, double mean, double variance);

struct CfRow {
  double t = 0.0;
  std::complex<double> empirical;
  std::complex<double> exact;
  double deviation = 0.0;
};

struct CfCheck {
  std::vector<CfRow> rows;
  double max_deviation = 0.0;
  std::uint64_t samples = 0;
  // 4 / sqrt(samples) + quadrature tolerance
  double tolerance = 0.0;
};

inline constexpr double kCfQuadratureTol = 1e-3;

CfCheck radial_cf_check(MixingLaw const& g, std::span<double const> t_grid,
                        std::uint64_t samples, std::uint64_t seed, unsigned threads = 0);

struct TwoMomentOptions {
  std::uint64_t samples = 20'000;
  std::uint64_t seed = 0;
  std::uint64_t stream_block = 0;
  // Block length (number of leading coordinates kept per accepted sequence).
  std::size_t block = 2;
  unsigned threads = 0;
};

struct TwoMomentResult {
  std::vector<double> pooled;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate = 0.0;
  double ks = 0.0;
  // Asymptotic standard deviation of the KS statistic, 0.26 / sqrt(pooled).
  double ks_se = 0.0;
};

/*!
 * Keeps sequences whose empirical mean lies in (m - eps, m + eps) and whose
 * empirical variance lies in (v - eps, v + eps), pools their first `block`
 * coordinates, and measures the KS distance of the pool to N(m, v).
 */
TwoMomentResult condition_two_moments(MixingLaw const& g, double target_mean,
                                      double target_variance, double epsilon, int n,
                                      TwoMomentOptions const& options = {});

struct TwoMomentRow {
  int n = 0;
  double epsilon = 0.0;
  double ks = 0.0;
  double ks_se = 0.0;
  std::uint64_t accepted = 0;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
};

std::vector<TwoMomentRow> two_moment_sweep(MixingLaw const& g, double target_mean,
                                           double target_variance,
                                           WindowSchedule const& schedule,
                                           std::span<int const> n_grid,
                                           TwoMomentOptions const& options = {});

struct VarianceRecoveryRow {
  int n = 0;
  // Mean over replicates of |empirical variance - latent variance|.
  double mean_abs_error = 0.0;
  // Mean over replicates of |empirical mean - latent mean|.
  double mean_abs_mean_error = 0.0;
  std::uint64_t replicates = 0;
};

struct VarianceRecovery {
  std::vector<VarianceRecoveryRow> rows;
  RateFit fit;
};

VarianceRecovery variance_recovery(MixingLaw const& g, std::span<int const> n_grid,
                                   std::uint64_t replicates, std::uint64_t seed,
                                   unsigned threads = 0);

}  // namespace tiltlab
