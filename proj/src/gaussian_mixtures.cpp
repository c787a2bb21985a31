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

#include "tiltlab/gaussian_mixtures.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tiltlab/error.hpp"
#include "tiltlab/parallel.hpp"
#include "tiltlab/random.hpp"
#include "tiltlab/simplex.hpp"

namespace tiltlab {

namespace {

void check_latent(double mean, double variance) {
  if (!std::isfinite(mean)) throw std::invalid_argument("mixture mean must be finite");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("mixture variances must be strictly positive");
  }
}

}  // namespace

//---------------------------------------------------------------------------//
// MixingLaw
//---------------------------------------------------------------------------//

MixingLaw MixingLaw::point(double mean, double variance) {
  check_latent(mean, variance);
  MixingLaw g;
  g.kind_ = Kind::point;
  g.atoms_ = {{1.0, mean, variance}};
  g.cdf_ = {1.0};
  return g;
}

MixingLaw MixingLaw::discrete(std::vector<MixtureAtom> atoms) {
  if (atoms.empty()) throw std::invalid_argument("discrete mixing law needs at least one atom");
  double total = 0.0;
  for (auto const& a : atoms) {
    check_latent(a.mean, a.variance);
    if (!(a.weight >= 0.0)) throw std::invalid_argument("mixture weights must be nonnegative");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kSimplexExactTol) {
    std::ostringstream os;
    os << "mixture weights sum to " << total << ", not 1";
    throw std::invalid_argument(os.str());
  }
  MixingLaw g;
  g.kind_ = Kind::discrete;
  g.atoms_ = std::move(atoms);
  g.cdf_.resize(g.atoms_.size());
  double run = 0.0;
  for (std::size_t i = 0; i < g.atoms_.size(); ++i) {
    run += g.atoms_[i].weight;
    g.cdf_[i] = run;
  }
  return g;
}

MixingLaw MixingLaw::inverse_gamma(double shape, double scale, double mean) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw std::invalid_argument("inverse-gamma shape and scale must be positive");
  }
  if (!std::isfinite(mean)) throw std::invalid_argument("mixture mean must be finite");
  MixingLaw g;
  g.kind_ = Kind::inverse_gamma;
  g.shape_ = shape;
  g.scale_ = scale;
  g.mean_ = mean;
  return g;
}

Latent MixingLaw::draw(RandomStream& rng) const {
  switch (kind_) {
    case Kind::point:
      return {atoms_[0].mean, atoms_[0].variance};
    case Kind::discrete: {
      auto const& a = atoms_[rng.categorical(cdf_)];
      return {a.mean, a.variance};
    }
    case Kind::inverse_gamma: {
      std::gamma_distribution<double> gamma(shape_, 1.0);
      double g = 0.0;
      while (!(g > 0.0)) g = gamma(rng);
      return {mean_, scale_ / g};
    }
  }
  throw std::logic_error("unreachable mixing kind");
}

double inverse_gamma_laplace(double shape, double scale, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("Laplace argument must be nonnegative");
  if (s == 0.0) return 1.0;
  double const log_norm = shape * std::log(scale) - std::lgamma(shape);
  auto integrand = [&](double v) {
    if (!(v > 0.0)) return 0.0;
    return std::exp(log_norm - (shape + 1.0) * std::log(v) - scale / v - s * v);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
}

std::complex<double> MixingLaw::characteristic_function(double t) const {
  if (!std::isfinite(t)) throw std::invalid_argument("characteristic function needs finite t");
  double const s = 0.5 * t * t;
  if (kind_ == Kind::inverse_gamma) {
    return std::polar(inverse_gamma_laplace(shape_, scale_, s), t * mean_);
  }
  std::complex<double> phi = 0.0;
  for (auto const& a : atoms_) phi += a.weight * std::polar(std::exp(-s * a.variance), t * a.mean);
  return phi;
}

std::string MixingLaw::describe() const {
  std::ostringstream os;
  os.precision(12);
  switch (kind_) {
    case Kind::point:
      os << "point(mean=" << atoms_[0].mean << ", variance=" << atoms_[0].variance << ")";
      break;
    case Kind::discrete:
      os << "discrete(";
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i) os << "; ";
        os << atoms_[i].weight << ":" << atoms_[i].mean << ":" << atoms_[i].variance;
      }
      os << ")";
      break;
    case Kind::inverse_gamma:
      os << "inverse-gamma(shape=" << shape_ << ", scale=" << scale_ << ", mean=" << mean_ << ")";
      break;
  }
  return os.str();
}

//---------------------------------------------------------------------------//
// Sampling and empirical functionals
//---------------------------------------------------------------------------//

namespace {

Latent fill_sequence(MixingLaw const& g, RandomStream& rng, std::span<double> out) {
  Latent const latent = g.draw(rng);
  std::normal_distribution<double> normal(latent.mean, std::sqrt(latent.variance));
  for (double& x : out) x = normal(rng);
  return latent;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

RealSample sample_gsm(MixingLaw const& g, int n, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1) throw std::invalid_argument("sample_gsm needs n >= 1");
  RealSample s;
  s.seed = seed;
  s.values.resize(static_cast<std::size_t>(n));
  RandomStream rng(seed, stream);
  s.latent = fill_sequence(g, rng, s.values);
  return s;
}

std::pair<double, double> empirical_limits(std::span<double const> values) {
  if (values.size() < 2) throw std::invalid_argument("empirical_limits needs n >= 2");
  double const n = static_cast<double>(values.size());
  double const mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return {mean, ss / n};
}

std::pair<double, double> empirical_limits(RealSample const& s) {
  return empirical_limits(std::span<double const>(s.values));
}

double ks_statistic_normal(std::span<double const> values, double mean, double variance) {
  if (values.empty()) throw std::invalid_argument("KS statistic needs a nonempty sample");
  if (!(variance > 0.0)) throw std::invalid_argument("KS reference variance must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double const sd = std::sqrt(variance);
  double const n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double const f = normal_cdf((sorted[i] - mean) / sd);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

//---------------------------------------------------------------------------//
// Characteristic function check
//---------------------------------------------------------------------------//

CfCheck radial_cf_check(MixingLaw const& g, std::span<double const> t_grid,
                        std::uint64_t samples, std::uint64_t seed, unsigned threads) {
  if (t_grid.empty()) throw std::invalid_argument("radial_cf_check needs a nonempty t grid");
  for (double t : t_grid) {
    if (!std::isfinite(t)) throw std::invalid_argument("t grid must be finite");
  }
  if (samples < 1) throw std::invalid_argument("radial_cf_check needs samples >= 1");

  constexpr std::uint64_t kChunk = 4096;
  std::size_t const chunks = static_cast<std::size_t>((samples + kChunk - 1) / kChunk);
  std::size_t const nt = t_grid.size();
  std::vector<std::vector<double>> re(chunks, std::vector<double>(nt, 0.0));
  std::vector<std::vector<double>> im(chunks, std::vector<double>(nt, 0.0));

  parallel_for_chunks(chunks, threads, [&](std::size_t c) {
    std::uint64_t const begin = c * kChunk;
    std::uint64_t const end = std::min<std::uint64_t>(samples, begin + kChunk);
    double x = 0.0;
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(seed, stream_id(0, i));
      fill_sequence(g, rng, std::span<double>(&x, 1));
      for (std::size_t j = 0; j < nt; ++j) {
        re[c][j] += std::cos(t_grid[j] * x);
        im[c][j] += std::sin(t_grid[j] * x);
      }
    }
  });

  CfCheck check;
  check.samples = samples;
  check.tolerance = 4.0 / std::sqrt(static_cast<double>(samples)) + kCfQuadratureTol;
  for (std::size_t j = 0; j < nt; ++j) {
    double sr = 0.0, si = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
      sr += re[c][j];
      si += im[c][j];
    }
    CfRow row;
    row.t = t_grid[j];
    row.empirical = {sr / static_cast<double>(samples), si / static_cast<double>(samples)};
    row.exact = g.characteristic_function(t_grid[j]);
    row.deviation = std::abs(row.empirical - row.exact);
    check.max_deviation = std::max(check.max_deviation, row.deviation);
    check.rows.push_back(row);
  }
  return check;
}

//---------------------------------------------------------------------------//
// Two-moment conditioning
//---------------------------------------------------------------------------//

TwoMomentResult condition_two_moments(MixingLaw const& g, double target_mean,
                                      double target_variance, double epsilon, int n,
                                      TwoMomentOptions const& options) {
  if (!(target_variance > 0.0)) throw std::invalid_argument("target variance must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("window half-width must be positive");
  if (n < 2) throw std::invalid_argument("two-moment conditioning needs n >= 2");
  if (options.block < 1 || options.block > static_cast<std::size_t>(n)) {
    throw std::invalid_argument("block length must lie in [1, n]");
  }
  if (options.samples < 1) throw std::invalid_argument("need at least one proposal");

  constexpr std::uint64_t kChunk = 1024;
  std::size_t const chunks = static_cast<std::size_t>((options.samples + kChunk - 1) / kChunk);
  std::vector<std::vector<double>> kept(chunks);
  std::size_t const b = options.block;

  parallel_for_chunks(chunks, options.threads, [&](std::size_t c) {
    std::vector<double> x(static_cast<std::size_t>(n));
    std::uint64_t const begin = c * kChunk;
    std::uint64_t const end = std::min<std::uint64_t>(options.samples, begin + kChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(options.seed, stream_id(options.stream_block, i));
      fill_sequence(g, rng, x);
      auto const [mean, var] = empirical_limits(std::span<double const>(x));
      if (!(std::abs(mean - target_mean) < epsilon && std::abs(var - target_variance) < epsilon)) {
        continue;
      }
      kept[c].insert(kept[c].end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(b));
    }
  });

  TwoMomentResult r;
  r.proposals = options.samples;
  for (auto const& k : kept) r.pooled.insert(r.pooled.end(), k.begin(), k.end());
  r.accepted = r.pooled.size() / b;
  r.acceptance_rate = static_cast<double>(r.accepted) / static_cast<double>(r.proposals);
  if (r.accepted == 0) {
    std::ostringstream os;
    os << "no sequence out of " << options.samples << " had mean in (" << target_mean - epsilon
       << ", " << target_mean + epsilon << ") and variance in (" << target_variance - epsilon
       << ", " << target_variance + epsilon << ") at n = " << n
       << "; acceptance probability is below " << 1.0 / static_cast<double>(options.samples)
       << " for " << g.describe() << "; widen the window or add proposals";
    throw SamplingError(os.str());
  }
  r.ks = ks_statistic_normal(r.pooled, target_mean, target_variance);
  r.ks_se = 0.26 / std::sqrt(static_cast<double>(r.pooled.size()));
  return r;
}

std::vector<TwoMomentRow> two_moment_sweep(MixingLaw const& g, double target_mean,
                                           double target_variance,
                                           WindowSchedule const& schedule,
                                           std::span<int const> n_grid,
                                           TwoMomentOptions const& options) {
  if (n_grid.empty()) throw std::invalid_argument("two_moment_sweep needs a nonempty n grid");
  std::vector<TwoMomentRow> rows;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    TwoMomentOptions opts = options;
    opts.stream_block = (options.stream_block << 16) + i;
    double const eps = schedule.half_width(n_grid[i]);
    auto const r = condition_two_moments(g, target_mean, target_variance, eps, n_grid[i], opts);
    rows.push_back({n_grid[i], eps, r.ks, r.ks_se, r.accepted, r.acceptance_rate, options.seed});
  }
  return rows;
}

//---------------------------------------------------------------------------//
// Variance recovery
//---------------------------------------------------------------------------//

VarianceRecovery variance_recovery(MixingLaw const& g, std::span<int const> n_grid,
                                   std::uint64_t replicates, std::uint64_t seed,
                                   unsigned threads) {
  if (n_grid.size() < 4) throw std::invalid_argument("variance_recovery needs >= 4 grid points");
  if (replicates < 1) throw std::invalid_argument("variance_recovery needs replicates >= 1");
  VarianceRecovery out;
  std::vector<std::pair<double, double>> points;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    int const n = n_grid[gi];
    if (n < 2) throw std::invalid_argument("variance_recovery needs n >= 2");
    std::vector<double> var_err(replicates), mean_err(replicates);
    parallel_for_chunks(replicates, threads, [&](std::size_t r) {
      RealSample const s = sample_gsm(g, n, seed, stream_id(gi + 1, r));
      auto const [mean, var] = empirical_limits(s);
      var_err[r] = std::abs(var - s.latent.variance);
      mean_err[r] = std::abs(mean - s.latent.mean);
    });
    VarianceRecoveryRow row;
    row.n = n;
    row.replicates = replicates;
    row.mean_abs_error =
        std::accumulate(var_err.begin(), var_err.end(), 0.0) / static_cast<double>(replicates);
    row.mean_abs_mean_error =
        std::accumulate(mean_err.begin(), mean_err.end(), 0.0) / static_cast<double>(replicates);
    out.rows.push_back(row);
    points.emplace_back(static_cast<double>(n), row.mean_abs_error);
  }
  out.fit = rate_fit(points);
  return out;
}

}  // namespace tiltlab
