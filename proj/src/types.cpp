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

#include "tiltlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "tiltlab/error.hpp"
#include "tiltlab/parallel.hpp"
#include "tiltlab/random.hpp"

namespace tiltlab {

//---------------------------------------------------------------------------//
// Types and enumeration
//---------------------------------------------------------------------------//

TypeClass::TypeClass(AlphabetPtr alphabet, std::vector<int> counts)
    : alphabet_(std::move(alphabet)), counts_(std::move(counts)) {
  if (!alphabet_) throw std::invalid_argument("type without alphabet");
  if (counts_.size() != alphabet_->size()) {
    throw std::invalid_argument("type count vector does not match alphabet");
  }
  for (int c : counts_) {
    if (c < 0) throw std::invalid_argument("type counts must be nonnegative");
    n_ += c;
  }
  if (n_ < 1) throw std::invalid_argument("type must have n >= 1");
}

Distribution TypeClass::frequencies() const {
  std::vector<double> f(counts_.size());
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    f[j] = static_cast<double>(counts_[j]) / static_cast<double>(n_);
  }
  return Distribution::normalized(alphabet_, std::move(f));
}

double type_count(std::size_t k, int n) {
  double c = 1.0;
  for (std::size_t i = 1; i < k; ++i) {
    c = c * (static_cast<double>(n) + static_cast<double>(i)) / static_cast<double>(i);
  }
  return std::round(c);
}

TypeEnumerator::TypeEnumerator(std::size_t k, int n, double cap) : counts_(k, 0), n_(n) {
  if (k < 2) throw std::invalid_argument("type enumeration needs k >= 2");
  if (n < 1) throw std::invalid_argument("type enumeration needs n >= 1");
  total_ = type_count(k, n);
  if (total_ > cap) {
    std::ostringstream os;
    os << "enumerating " << total_ << " types (k = " << k << ", n = " << n
       << ") exceeds the cap of " << cap;
    throw CapExceeded(os.str());
  }
  counts_.back() = n;
}

bool TypeEnumerator::next() {
  if (!started_) {
    started_ = true;
    return true;
  }
  std::size_t const k = counts_.size();
  int tail = counts_[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) {
    if (tail > 0) {
      ++counts_[i];
      for (std::size_t j = i + 1; j + 1 < k; ++j) counts_[j] = 0;
      counts_[k - 1] = tail - 1;
      return true;
    }
    tail += counts_[i];
  }
  return false;
}

std::vector<TypeClass> enumerate_types(AlphabetPtr alphabet, int n, double cap) {
  TypeEnumerator it(alphabet->size(), n, cap);
  std::vector<TypeClass> out;
  out.reserve(static_cast<std::size_t>(it.total()));
  while (it.next()) {
    out.emplace_back(alphabet, std::vector<int>(it.counts().begin(), it.counts().end()));
  }
  return out;
}

double type_log_prob(std::span<int const> counts, Distribution const& p) {
  if (counts.size() != p.size()) throw std::invalid_argument("type/law length mismatch");
  int n = 0;
  double lp = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    int const c = counts[j];
    n += c;
    if (c == 0) continue;
    if (p[j] <= 0.0) return -std::numeric_limits<double>::infinity();
    lp += c * std::log(p[j]) - std::lgamma(static_cast<double>(c) + 1.0);
  }
  return lp + std::lgamma(static_cast<double>(n) + 1.0);
}

double type_log_prob(TypeClass const& t, Distribution const& p) {
  if (!same_alphabet(t.alphabet(), p.alphabet())) {
    throw std::invalid_argument("type and law use different alphabets");
  }
  return type_log_prob(t.counts(), p);
}

SanovCheck sanov_bounds_check(TypeClass const& t, Distribution const& p) {
  if (!p.strictly_positive()) throw std::invalid_argument("baseline must be strictly positive");
  SanovCheck out;
  double const n = t.n();
  double const k = static_cast<double>(p.size());
  out.log_prob = type_log_prob(t, p);
  out.divergence = kl_divergence(t.frequencies(), p);
  out.upper_slack = -n * out.divergence - out.log_prob;
  out.lower_slack = out.log_prob - (-k * std::log(n + 1.0) - n * out.divergence);
  out.pass = out.upper_slack >= -1e-9 && out.lower_slack >= -1e-9;
  return out;
}

//---------------------------------------------------------------------------//
// Conditioning
//---------------------------------------------------------------------------//

namespace {

void require_oracle_inputs(Distribution const& p, MomentConstraint const& c) {
  if (!same_alphabet(p.alphabet(), c.statistic().alphabet())) {
    throw std::invalid_argument("baseline and constraint use different alphabets");
  }
  if (!p.strictly_positive()) throw std::invalid_argument("baseline must be strictly positive");
}

std::optional<int> smallest_feasible_n(std::size_t k, MomentConstraint const& c, int from,
                                       OracleOptions const& options) {
  for (int n = from; n <= options.probe_limit; ++n) {
    if (type_count(k, n) > options.type_cap) break;
    TypeEnumerator it(k, n, options.type_cap);
    while (it.next()) {
      if (c.admits_counts(it.counts())) return n;
    }
  }
  return std::nullopt;
}

// ln Pr(P_n in E); throws InfeasibleError when E has no type of size n.
double log_event_probability(Distribution const& p, MomentConstraint const& c, int n,
                             OracleOptions const& options) {
  LogSumAccumulator acc;
  TypeEnumerator it(p.size(), n, options.type_cap);
  while (it.next()) {
    if (c.admits_counts(it.counts())) acc.add(type_log_prob(it.counts(), p));
  }
  if (acc.empty()) {
    std::ostringstream os;
    os << "no type with n = " << n << " satisfies " << c.describe();
    if (auto next = smallest_feasible_n(p.size(), c, n + 1, options)) {
      os << "; smallest feasible n above it is " << *next;
    } else {
      os << "; none found up to n = " << options.probe_limit;
    }
    throw InfeasibleError(os.str());
  }
  return acc.value();
}

// Visits every admitted type with its conditional weight.
template <class F>
double for_each_conditioned(Distribution const& p, MomentConstraint const& c, int n,
                            OracleOptions const& options, F&& f) {
  double const log_z = log_event_probability(p, c, n, options);
  TypeEnumerator it(p.size(), n, options.type_cap);
  while (it.next()) {
    if (!c.admits_counts(it.counts())) continue;
    f(it.counts(), std::exp(type_log_prob(it.counts(), p) - log_z));
  }
  return log_z;
}

// Adds scale * (hypergeometric law of `counts`) into `out`, drawing one
// symbol at a time without replacement.
void accumulate_hypergeometric(std::vector<int>& remaining, int left, std::size_t depth,
                               std::size_t m, std::size_t index, double prob,
                               std::span<double> out) {
  std::size_t const k = remaining.size();
  if (depth == m) {
    out[index] += prob;
    return;
  }
  for (std::size_t x = 0; x < k; ++x) {
    if (remaining[x] == 0) continue;
    double const step = static_cast<double>(remaining[x]) / static_cast<double>(left);
    --remaining[x];
    accumulate_hypergeometric(remaining, left - 1, depth + 1, m, index * k + x, prob * step, out);
    ++remaining[x];
  }
}

void add_hypergeometric(std::span<int const> counts, std::size_t m, double scale,
                        std::span<double> out) {
  std::vector<int> remaining(counts.begin(), counts.end());
  int const n = std::accumulate(counts.begin(), counts.end(), 0);
  accumulate_hypergeometric(remaining, n, 0, m, 0, scale, out);
}

double l1_to(std::span<int const> counts, int n, Distribution const& q) {
  double s = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    s += std::abs(static_cast<double>(counts[j]) / n - q[j]);
  }
  return s;
}

}  // namespace

ConditionalWeights conditional_weights(Distribution const& p, MomentConstraint const& c, int n,
                                       OracleOptions const& options) {
  require_oracle_inputs(p, c);
  ConditionalWeights out;
  out.constraint = c.describe();
  out.n = n;
  out.log_event_probability =
      for_each_conditioned(p, c, n, options, [&](std::span<int const> counts, double w) {
        out.entries.push_back(
            {TypeClass(p.alphabet(), std::vector<int>(counts.begin(), counts.end())), w});
        out.total += w;
      });
  return out;
}

BlockLaw hypergeometric_block_law(TypeClass const& t, std::size_t m, std::size_t cap) {
  if (m < 1) throw std::invalid_argument("block length must be >= 1");
  if (m > static_cast<std::size_t>(t.n())) {
    std::ostringstream os;
    os << "block length " << m << " exceeds type size n = " << t.n();
    throw std::invalid_argument(os.str());
  }
  std::size_t const words = checked_word_count(t.alphabet()->size(), m, cap);
  std::vector<double> masses(words, 0.0);
  add_hypergeometric(t.counts(), m, 1.0, masses);
  return BlockLaw(t.alphabet(), m, std::move(masses));
}

HypergeometricCheck hypergeometric_tv_check(TypeClass const& t, std::size_t m,
                                            std::size_t cap) {
  HypergeometricCheck out;
  auto const hyper = hypergeometric_block_law(t, m, cap);
  auto const product = product_block_law(t.frequencies(), m, cap);
  out.tv = tv_distance(hyper, product);
  out.bound = static_cast<double>(m) * static_cast<double>(m - 1) / (2.0 * t.n());
  out.pass = out.tv <= out.bound + 1e-12;
  return out;
}

BlockLaw conditional_block_law(Distribution const& p, MomentConstraint const& c, int n,
                               std::size_t m, OracleOptions const& options) {
  require_oracle_inputs(p, c);
  if (m < 1 || m > static_cast<std::size_t>(n)) {
    throw std::invalid_argument("conditional_block_law needs 1 <= m <= n");
  }
  std::size_t const words = checked_word_count(p.size(), m, options.word_cap);
  std::vector<double> masses(words, 0.0);
  for_each_conditioned(p, c, n, options, [&](std::span<int const> counts, double w) {
    add_hypergeometric(counts, m, w, masses);
  });
  double const total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (double& x : masses) x /= total;
  return BlockLaw(p.alphabet(), m, std::move(masses));
}

//---------------------------------------------------------------------------//
// Sweeps
//---------------------------------------------------------------------------//

double theorem_rate(int n, int m) {
  double const dn = n;
  double const dm = m;
  return dm / std::cbrt(dn) + dm * dm / dn;
}

double alternative_envelope(int n, int m) {
  double const dn = n;
  double const dm = m;
  return dm * std::sqrt(std::log(dn) / dn) + dm * (dm - 1.0) / (2.0 * dn);
}

Theorem1Sweep theorem1_sweep(Distribution const& p, MomentConstraint const& c, std::size_t m,
                             std::span<int const> n_grid, OracleOptions const& options) {
  require_oracle_inputs(p, c);
  if (n_grid.empty()) throw std::invalid_argument("theorem1_sweep needs a nonempty n grid");
  Theorem1Sweep out;
  out.projection = i_project(p, c);
  if (!out.projection.feasible()) {
    throw InfeasibleError("I-projection does not exist: " + out.projection.diagnostic);
  }
  Distribution const& pstar = *out.projection.law;
  auto const target = product_block_law(pstar, m, options.word_cap);
  std::size_t const words = target.word_count();

  for (int n : n_grid) {
    if (m > static_cast<std::size_t>(n)) throw std::invalid_argument("grid n below block length");
    ConvergenceRecord rec;
    rec.n = n;
    rec.m = static_cast<int>(m);
    rec.delta = 1.0 / std::cbrt(static_cast<double>(n));
    std::vector<double> masses(words, 0.0);
    for_each_conditioned(p, c, n, options, [&](std::span<int const> counts, double w) {
      add_hypergeometric(counts, m, w, masses);
      if (l1_to(counts, n, pstar) > rec.delta) rec.bad_mass += w;
    });
    double const total = std::accumulate(masses.begin(), masses.end(), 0.0);
    for (double& x : masses) x /= total;
    rec.tv = tv_distance(BlockLaw(p.alphabet(), m, std::move(masses)), target);
    rec.envelope_alt = alternative_envelope(n, rec.m);
    out.records.push_back(rec);
  }

  for (auto const& rec : out.records) {
    out.envelope_constant = std::max(out.envelope_constant, rec.tv / theorem_rate(rec.n, rec.m));
  }
  for (auto& rec : out.records) {
    rec.envelope_thm = out.envelope_constant * theorem_rate(rec.n, rec.m);
  }

  // Scan from the end: the suffix where both properties hold.
  std::size_t start = out.records.size();
  for (std::size_t i = out.records.size(); i-- > 0;) {
    auto const& rec = out.records[i];
    bool ok = rec.tv <= rec.envelope_alt + 2.0 * rec.bad_mass;
    if (i + 1 < out.records.size()) ok = ok && out.records[i + 1].bad_mass <= rec.bad_mass;
    if (!ok) break;
    start = i;
  }
  if (start < out.records.size()) out.n0 = out.records[start].n;
  return out;
}

KlGap kl_gap_scan(Distribution const& p, Distribution const& projection,
                  std::function<bool(Distribution const&)> const& feasible, double delta,
                  int grid_density, OracleOptions const& options) {
  if (grid_density < 100) throw std::invalid_argument("kl_gap needs grid_density >= 100");
  if (!(delta >= 0.0)) throw std::invalid_argument("kl_gap needs delta >= 0");
  double const base = kl_divergence(projection, p);
  KlGap out;
  double best = std::numeric_limits<double>::infinity();
  std::size_t const k = p.size();
  std::vector<double> q(k);
  std::vector<double> pulled(k);
  TypeEnumerator it(k, grid_density, options.type_cap);
  while (it.next()) {
    auto const counts = it.counts();
    for (std::size_t j = 0; j < k; ++j) q[j] = static_cast<double>(counts[j]) / grid_density;
    Distribution const lattice(p.alphabet(), q);
    if (!feasible(lattice)) continue;
    double const dist = l1_distance(lattice, projection);
    if (dist <= delta) continue;
    ++out.lattice_points;
    double const d_lattice = kl_divergence(lattice, p);
    if (d_lattice <= base + 1e-9) {
      std::ostringstream os;
      os.precision(12);
      os << "feasible law at L1 distance " << dist << " from the projection has divergence "
         << d_lattice << " <= " << base << " + 1e-9: the I-projection is not unique";
      throw NonUniqueProjection(os.str());
    }
    double const t = delta / dist;
    for (std::size_t j = 0; j < k; ++j) {
      pulled[j] = std::max(0.0, projection[j] + t * (q[j] - projection[j]));
    }
    auto sphere = Distribution::normalized(p.alphabet(), pulled);
    if (!feasible(sphere)) continue;
    double const gap = kl_divergence(sphere, p) - base;
    if (gap < best) {
      best = gap;
      out.witness = std::move(sphere);
    }
  }
  out.gap = std::max(best, 0.0);
  return out;
}

KlGap kl_gap(Distribution const& p, MomentConstraint const& c, double delta, int grid_density,
             OracleOptions const& options) {
  require_oracle_inputs(p, c);
  if (c.statistic().dim() > 2) throw std::invalid_argument("kl_gap supports d <= 2");
  auto const proj = i_project(p, c);
  if (!proj.feasible()) throw InfeasibleError("I-projection does not exist: " + proj.diagnostic);
  if (delta == 0.0) {
    KlGap out;
    out.witness = *proj.law;
    return out;
  }
  auto const& h = c.statistic();
  // Membership in the closed constraint set (windows use their closure).
  auto feasible = [&](Distribution const& q) {
    auto const mean = mean_of(q, h);
    double const tol = 1e-10;
    if (c.is_window()) return mean[0] >= c.lower() - tol && mean[0] <= c.upper() + tol;
    for (std::size_t j = 0; j < mean.size(); ++j) {
      double const t = c.target()[j];
      if (c.kind() == ConstraintKind::lower_halfspace) {
        if (mean[j] < t - tol) return false;
      } else if (std::abs(mean[j] - t) > tol) {
        return false;
      }
    }
    return true;
  };
  return kl_gap_scan(p, *proj.law, feasible, delta, grid_density, options);
}

double log_concentration_envelope(int n, std::size_t k, double eta) {
  return static_cast<double>(k) * std::log(n + 1.0) - n * eta;
}

//---------------------------------------------------------------------------//
// Entropy concentration
//---------------------------------------------------------------------------//

namespace {

double quantile(std::vector<double> const& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  double const pos = q * static_cast<double>(sorted.size() - 1);
  std::size_t const lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t const hi = std::min(lo + 1, sorted.size() - 1);
  double const frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

EntropyConcentration entropy_concentration(Distribution const& p, int sample_size,
                                           std::uint64_t samples, std::uint64_t seed,
                                           double interval_lower, double interval_upper,
                                           unsigned threads) {
  if (sample_size < 1) throw std::invalid_argument("sample size must be >= 1");
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  if (!p.strictly_positive()) throw std::invalid_argument("baseline must be strictly positive");
  std::size_t const k = p.size();
  std::vector<double> entropies(samples);
  std::vector<double> deviance(samples);
  constexpr std::uint64_t kChunk = 4096;
  std::size_t const chunks = static_cast<std::size_t>((samples + kChunk - 1) / kChunk);
  double const two_n = 2.0 * sample_size;

  parallel_for_chunks(chunks, threads, [&](std::size_t chunk) {
    std::vector<int> counts(k);
    std::uint64_t const begin = chunk * kChunk;
    std::uint64_t const end = std::min<std::uint64_t>(samples, begin + kChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(seed, stream_id(0, i));
      sample_multinomial(rng, static_cast<std::uint64_t>(sample_size), p.masses(), counts);
      double h = 0.0;
      double d = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) continue;
        double const f = static_cast<double>(counts[j]) / sample_size;
        h -= f * std::log(f);
        d += f * (std::log(f) - std::log(p[j]));
      }
      entropies[i] = h;
      deviance[i] = two_n * std::max(d, 0.0);
    }
  });

  EntropyConcentration out;
  out.sample_size = sample_size;
  out.samples = samples;
  out.interval_lower = interval_lower;
  out.interval_upper = interval_upper;
  std::uint64_t inside = 0;
  double h_sum = 0.0;
  for (double h : entropies) {
    h_sum += h;
    if (h >= interval_lower - 1e-12 && h <= interval_upper + 1e-12) ++inside;
  }
  out.coverage = static_cast<double>(inside) / static_cast<double>(samples);
  out.mean_entropy = h_sum / static_cast<double>(samples);
  std::sort(deviance.begin(), deviance.end());
  out.deviance_q50 = quantile(deviance, 0.50);
  out.deviance_q90 = quantile(deviance, 0.90);
  out.deviance_q95 = quantile(deviance, 0.95);
  out.deviance_q99 = quantile(deviance, 0.99);
  out.delta_h_q95 = out.deviance_q95 / two_n;
  return out;
}

}  // namespace tiltlab
