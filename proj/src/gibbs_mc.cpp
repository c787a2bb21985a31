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

#include "tiltlab/gibbs_mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tiltlab/error.hpp"
#include "tiltlab/parallel.hpp"
#include "tiltlab/random.hpp"

namespace tiltlab {

//---------------------------------------------------------------------------//
// WindowSchedule
//---------------------------------------------------------------------------//

WindowSchedule::WindowSchedule(double amplitude, double exponent)
    : amplitude_(amplitude), exponent_(exponent) {
  if (!(amplitude_ > 0.0) || !std::isfinite(amplitude_)) {
    throw std::invalid_argument("window amplitude must be positive");
  }
  // n eps_n^2 = c^2 n^{1 - 2 gamma} diverges iff 1 - 2 gamma > 0.
  if (!(exponent_ > 0.0) || !(1.0 - 2.0 * exponent_ > 0.0)) {
    std::ostringstream os;
    os << "window exponent " << exponent_
       << " must lie in (0, 1/2) so that n eps_n^2 grows without bound";
    throw std::invalid_argument(os.str());
  }
}

WindowSchedule WindowSchedule::default_for(MomentFunction const& h) {
  return WindowSchedule(0.5 * (h.max() - h.min()), 0.25);
}

double WindowSchedule::half_width(int n) const {
  if (n < 1) throw std::invalid_argument("window schedule needs n >= 1");
  return amplitude_ * std::pow(static_cast<double>(n), -exponent_);
}

char const* to_string(SamplingMethod method) {
  return method == SamplingMethod::rejection ? "rejection" : "tilt-importance";
}

SamplingMethod parse_sampling_method(std::string const& name) {
  if (name == "rejection") return SamplingMethod::rejection;
  if (name == "tilt-importance" || name == "importance") return SamplingMethod::tilt_importance;
  throw std::invalid_argument("unknown sampling method '" + name +
                              "' (expected rejection or tilt-importance)");
}

char const* to_string(ProposalCenter center) {
  return center == ProposalCenter::midpoint ? "midpoint" : "projection";
}

ProposalCenter parse_proposal_center(std::string const& name) {
  if (name == "midpoint") return ProposalCenter::midpoint;
  if (name == "projection") return ProposalCenter::projection;
  throw std::invalid_argument("unknown proposal center '" + name +
                              "' (expected midpoint or projection)");
}

double McEstimate::functional_se(std::span<double const> g) const {
  if (g.size() != estimate.size()) throw std::invalid_argument("functional length mismatch");
  if (accepted < 2) return std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) mean += g[j] * estimate[j];
  double var = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) var += squared_weight[j] * (g[j] - mean) * (g[j] - mean);
  if (method == SamplingMethod::rejection) {
    double const a = static_cast<double>(accepted);
    var *= a / (a - 1.0);
  }
  return std::sqrt(std::max(var, 0.0));
}

//---------------------------------------------------------------------------//
// Sampling
//---------------------------------------------------------------------------//

namespace {

struct Draw {
  std::size_t word;
  double log_weight;
};

// Multinomial count vector for the n - m symbols after the block. The first
// conditional binomial has fixed parameters, so its inverse CDF is tabulated
// once and each draw costs one uniform.
class RemainderSampler {
 public:
  static constexpr std::uint64_t kMaxTable = 1u << 20;

  RemainderSampler(std::uint64_t trials, std::span<double const> probs)
      : trials_(trials), probs_(probs.begin(), probs.end()),
        first_(static_cast<long long>(trials), std::clamp(probs[0], 0.0, 1.0)) {
    double const q = std::clamp(probs[0], 0.0, 1.0);
    if (trials_ > kMaxTable || q <= 0.0 || q >= 1.0) return;
    double const nt = static_cast<double>(trials_);
    std::vector<double> logpmf(trials_ + 1);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::uint64_t c = 0; c <= trials_; ++c) {
      double const dc = static_cast<double>(c);
      logpmf[c] = std::lgamma(nt + 1.0) - std::lgamma(dc + 1.0) - std::lgamma(nt - dc + 1.0) +
                  dc * std::log(q) + (nt - dc) * std::log1p(-q);
      hi = std::max(hi, logpmf[c]);
    }
    cdf_.resize(trials_ + 1);
    double acc = 0.0;
    for (std::uint64_t c = 0; c <= trials_; ++c) cdf_[c] = acc += std::exp(logpmf[c] - hi);
    for (double& x : cdf_) x /= acc;
    cdf_.back() = 1.0;
  }

  void operator()(RandomStream& rng, std::span<int> counts) {
    int c0 = 0;
    if (!cdf_.empty()) {
      c0 = static_cast<int>(rng.categorical(cdf_));
    } else {
      first_.reset();
      c0 = static_cast<int>(first_(rng));
    }
    counts[0] = c0;
    std::size_t const k = probs_.size();
    if (k == 2) {
      counts[1] = static_cast<int>(trials_) - c0;
      return;
    }
    double const rest = 1.0 - probs_[0];
    std::vector<double> tail(probs_.begin() + 1, probs_.end());
    for (double& t : tail) t = rest > 0.0 ? t / rest : 0.0;
    sample_multinomial(rng, trials_ - static_cast<std::uint64_t>(c0), tail, counts.subspan(1));
  }

 private:
  std::uint64_t trials_;
  std::vector<double> probs_;
  std::binomial_distribution<long long> first_;
  std::vector<double> cdf_;
};

}  // namespace

ConditionalSample sample_conditional_blocks(Distribution const& p, MomentFunction const& h,
                                            Window window, int n, std::size_t m,
                                            SamplerOptions const& options) {
  if (!same_alphabet(p.alphabet(), h.alphabet())) {
    throw std::invalid_argument("baseline and statistic use different alphabets");
  }
  if (h.dim() != 1) throw std::invalid_argument("window sampling needs a scalar statistic");
  if (!p.strictly_positive()) throw std::invalid_argument("baseline must be strictly positive");
  if (!(h.min() < window.lower && window.lower < window.upper && window.upper < h.max())) {
    std::ostringstream os;
    os << "window (" << window.lower << ", " << window.upper << ") must satisfy inf h = "
       << h.min() << " < a < b < sup h = " << h.max();
    throw std::invalid_argument(os.str());
  }
  if (n < 1 || m < 1 || m > static_cast<std::size_t>(n)) {
    throw std::invalid_argument("sampler needs 1 <= m <= n");
  }
  if (options.samples < 1000) throw std::invalid_argument("sampler needs at least 1000 proposals");

  std::size_t const k = p.size();
  std::size_t const words = checked_word_count(k, m, kDefaultWordCap);

  double lambda = 0.0;
  double log_z = 0.0;
  Distribution proposal = p;
  if (options.method == SamplingMethod::tilt_importance) {
    double center = 0.5 * (window.lower + window.upper);
    if (options.proposal == ProposalCenter::projection) {
      center = std::clamp(mean_of(p, h)[0], window.lower, window.upper);
    }
    auto const sol = solve_moment_equality(p, h, center);
    if (!sol.feasible()) throw InfeasibleError(sol.diagnostic);
    lambda = sol.multiplier[0];
    log_z = sol.log_partition;
    proposal = *sol.law;
  }
  std::vector<double> cdf(k);
  std::partial_sum(proposal.masses().begin(), proposal.masses().end(), cdf.begin());
  std::vector<double> values(k);
  for (std::size_t x = 0; x < k; ++x) values[x] = h(x);

  constexpr std::uint64_t kChunk = 8192;
  std::size_t const chunks = static_cast<std::size_t>((options.samples + kChunk - 1) / kChunk);
  std::vector<std::vector<Draw>> accepted(chunks);
  std::uint64_t const rest = static_cast<std::uint64_t>(n) - m;

  parallel_for_chunks(chunks, options.threads, [&](std::size_t chunk) {
    RemainderSampler remainder(rest, proposal.masses());
    std::vector<int> counts(k);
    auto& out = accepted[chunk];
    std::uint64_t const begin = chunk * kChunk;
    std::uint64_t const end = std::min<std::uint64_t>(options.samples, begin + kChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(options.seed, stream_id(options.stream_block, i));
      std::size_t word = 0;
      double sum = 0.0;
      for (std::size_t pos = 0; pos < m; ++pos) {
        std::size_t const x = rng.categorical(cdf);
        word = word * k + x;
        sum += values[x];
      }
      if (rest > 0) {
        remainder(rng, counts);
        for (std::size_t x = 0; x < k; ++x) sum += counts[x] * values[x];
      }
      if (!window_admits(sum, n, window.lower, window.upper)) continue;
      out.push_back({word, -lambda * sum + n * log_z});
    }
  });

  std::uint64_t total_accepted = 0;
  double max_lw = -std::numeric_limits<double>::infinity();
  for (auto const& c : accepted) {
    total_accepted += c.size();
    for (auto const& d : c) max_lw = std::max(max_lw, d.log_weight);
  }
  if (total_accepted == 0) {
    std::ostringstream os;
    os << "no proposal out of " << options.samples << " landed in the window ("
       << window.lower << ", " << window.upper << ") at n = " << n
       << "; use the tilt-importance method or a wider window";
    throw SamplingError(os.str());
  }

  std::vector<double> weight_sum(words, 0.0);
  std::vector<double> weight_sq(words, 0.0);
  double w_total = 0.0;
  for (auto const& c : accepted) {
    for (auto const& d : c) {
      double const w = std::exp(d.log_weight - max_lw);
      weight_sum[d.word] += w;
      weight_sq[d.word] += w * w;
      w_total += w;
    }
  }

  McEstimate est;
  est.proposals = options.samples;
  est.accepted = total_accepted;
  est.acceptance_rate = static_cast<double>(total_accepted) / static_cast<double>(options.samples);
  est.seed = options.seed;
  est.method = options.method;
  est.estimate.resize(words);
  est.squared_weight.resize(words);
  double sq_total = 0.0;
  for (std::size_t j = 0; j < words; ++j) {
    est.estimate[j] = weight_sum[j] / w_total;
    est.squared_weight[j] = weight_sq[j] / (w_total * w_total);
    sq_total += est.squared_weight[j];
  }
  est.effective_sample_size = 1.0 / sq_total;
  est.std_error.resize(words);
  std::vector<double> indicator(words, 0.0);
  for (std::size_t j = 0; j < words; ++j) {
    indicator[j] = 1.0;
    est.std_error[j] = est.functional_se(indicator);
    indicator[j] = 0.0;
  }
  BlockLaw law(p.alphabet(), m, est.estimate);
  return {std::move(est), std::move(law)};
}

std::vector<WindowSweepRow> window_sweep(Distribution const& p, MomentFunction const& h,
                                         double target, WindowSchedule const& schedule,
                                         std::span<int const> n_grid, std::size_t m,
                                         SamplerOptions const& options) {
  if (n_grid.empty()) throw std::invalid_argument("window_sweep needs a nonempty n grid");
  auto const limit = solve_moment_equality(p, h, target);
  if (!limit.feasible()) throw InfeasibleError(limit.diagnostic);
  auto const product = product_block_law(*limit.law, m);

  std::vector<WindowSweepRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    int const n = n_grid[g];
    double const eps = schedule.half_width(n);
    SamplerOptions opts = options;
    opts.stream_block = (options.stream_block << 16) + g;
    auto const sample =
        sample_conditional_blocks(p, h, Window{target - eps, target + eps}, n, m, opts);
    auto const est = sample.law.masses();
    auto const ref = product.masses();
    std::vector<double> sign(est.size());
    for (std::size_t j = 0; j < est.size(); ++j) {
      sign[j] = est[j] > ref[j] ? 0.5 : (est[j] < ref[j] ? -0.5 : 0.0);
    }
    WindowSweepRow row;
    row.n = n;
    row.epsilon = eps;
    row.tv_estimate = tv_distance(sample.law, product);
    row.se = sample.estimate.functional_se(sign);
    row.acceptance_rate = sample.estimate.acceptance_rate;
    row.ess = sample.estimate.effective_sample_size;
    row.method = options.method;
    row.seed = options.seed;
    row.mc = sample.estimate;
    rows.push_back(std::move(row));
  }
  return rows;
}

RateFit rate_fit(std::span<std::pair<double, double> const> records) {
  if (records.size() < 4) throw std::invalid_argument("rate_fit needs at least 4 points");
  RateFit fit;
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs, ys;
  for (auto const& [n, tv] : records) {
    if (!(n > 0.0)) throw std::invalid_argument("rate_fit needs positive n");
    if (!(tv > 0.0)) {
      throw std::invalid_argument(
          "rate_fit needs tv > 0 at every point; increase the sample budget");
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(tv));
    sx += xs.back();
    sy += ys.back();
    fit.grid.emplace_back(n, tv);
  }
  double const count = static_cast<double>(xs.size());
  double const mx = sx / count;
  double const my = sy / count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("rate_fit needs at least two distinct n");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double const r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / count);
  return fit;
}

}  // namespace tiltlab
