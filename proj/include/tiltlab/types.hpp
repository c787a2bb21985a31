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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiltlab/simplex.hpp"
#include "tiltlab/tilt.hpp"

namespace tiltlab {

inline constexpr double kDefaultTypeCap = 5e7;

//---------------------------------------------------------------------------//
/*!
 * Empirical type of a length-n sequence: counts (n_1, ..., n_k), n >= 1.
 */
class TypeClass {
 public:
  TypeClass(AlphabetPtr alphabet, std::vector<int> counts);

  AlphabetPtr const& alphabet() const { return alphabet_; }
  std::span<int const> counts() const { return counts_; }
  int n() const { return n_; }

  Distribution frequencies() const;

  bool operator==(TypeClass const& other) const {
    return counts_ == other.counts_ && same_alphabet(alphabet_, other.alphabet_);
  }

 private:
  AlphabetPtr alphabet_;
  std::vector<int> counts_;
  int n_ = 0;
};

// Number of types C(n + k - 1, k - 1), as a double so it can exceed 2^64.
double type_count(std::size_t k, int n);

//---------------------------------------------------------------------------//
/*!
 * Streams all compositions of n into k nonnegative parts in lexicographic
 * order, starting at (0, ..., 0, n). Holds O(k) state.
 *
 * \code
 *   TypeEnumerator types(3, 10);
 *   while (types.next()) use(types.counts());
 * \endcode
 */
class TypeEnumerator {
 public:
  TypeEnumerator(std::size_t k, int n, double cap = kDefaultTypeCap);

  bool next();
  std::span<int const> counts() const { return counts_; }
  double total() const { return total_; }

 private:
  std::vector<int> counts_;
  int n_;
  double total_;
  bool started_ = false;
};

std::vector<TypeClass> enumerate_types(AlphabetPtr alphabet, int n,
                                       double cap = kDefaultTypeCap);

// ln Pr(P_n = t) under i.i.d. draws from p (exact multinomial log-pmf).
double type_log_prob(std::span<int const> counts, Distribution const& p);
double type_log_prob(TypeClass const& t, Distribution const& p);

struct SanovCheck {
  bool pass = false;
  double log_prob = 0.0;
  double divergence = 0.0;
  // ln Pr - ln[(n+1)^{-k} e^{-nD}]
  double lower_slack = 0.0;
  // -nD - ln Pr
  double upper_slack = 0.0;
};

// Method-of-types sandwich (n+1)^{-k} e^{-nD} <= Pr(P_n = t) <= e^{-nD}.
SanovCheck sanov_bounds_check(TypeClass const& t, Distribution const& p);

//---------------------------------------------------------------------------//
// Conditioning on the type event
//---------------------------------------------------------------------------//

struct WeightedType {
  TypeClass type;
  double weight = 0.0;
};

struct ConditionalWeights {
  std::string constraint;
  int n = 0;
  std::vector<WeightedType> entries;
  // Sum of the weights (1 up to rounding).
  double total = 0.0;
  // ln Pr(P_n in E)
  double log_event_probability = 0.0;
};

struct OracleOptions {
  double type_cap = kDefaultTypeCap;
  std::size_t word_cap = kDefaultWordCap;
  // Largest n probed when reporting the smallest feasible sample size.
  int probe_limit = 1000;
};

ConditionalWeights conditional_weights(Distribution const& p, MomentConstraint const& c,
                                       int n, OracleOptions const& options = {});

// Law of the first m draws without replacement from an urn of type t.
BlockLaw hypergeometric_block_law(TypeClass const& t, std::size_t m,
                                  std::size_t cap = kDefaultWordCap);

struct HypergeometricCheck {
  bool pass = false;
  double tv = 0.0;
  double bound = 0.0;
};

// TV(hypergeometric, product of frequencies) <= m(m-1)/(2n).
HypergeometricCheck hypergeometric_tv_check(TypeClass const& t, std::size_t m,
                                            std::size_t cap = kDefaultWordCap);

// Exact predictive law of X_{1:m} given P_n in E: the type mixture of
// hypergeometric laws under conditional (Sanov) weights.
BlockLaw conditional_block_law(Distribution const& p, MomentConstraint const& c, int n,
                               std::size_t m, OracleOptions const& options = {});

//---------------------------------------------------------------------------//
// Convergence sweeps
//---------------------------------------------------------------------------//

struct ConvergenceRecord {
  int n = 0;
  int m = 0;
  double tv = 0.0;
  // C (m / n^{1/3} + m^2 / n) with C fitted over the sweep.
  double envelope_thm = 0.0;
  // m sqrt(ln n / n) + m (m - 1) / (2n)
  double envelope_alt = 0.0;
  // Conditional weight of types farther than delta (L1) from the projection.
  double bad_mass = 0.0;
  double delta = 0.0;
};

struct Theorem1Sweep {
  TiltSolution projection;
  std::vector<ConvergenceRecord> records;
  double envelope_constant = 0.0;
  // Smallest grid n from which tv <= envelope_alt + 2 bad_mass holds and
  // bad_mass is nonincreasing through the end of the grid.
  std::optional<int> n0;
};

double theorem_rate(int n, int m);
double alternative_envelope(int n, int m);

Theorem1Sweep theorem1_sweep(Distribution const& p, MomentConstraint const& c, std::size_t m,
                             std::span<int const> n_grid, OracleOptions const& options = {});

struct KlGap {
  double gap = 0.0;
  // Law on the sphere ||Q - P*||_1 = delta attaining the reported gap.
  std::optional<Distribution> witness;
  std::size_t lattice_points = 0;
};

// inf { D(Q||P) - D(P*||P) : Q in E, ||Q - P*||_1 > delta } over a type
// lattice of denominator grid_density, each lattice point pulled radially
// onto the sphere of radius delta around P*.
KlGap kl_gap(Distribution const& p, MomentConstraint const& c, double delta,
             int grid_density, OracleOptions const& options = {});

// Same scan against an arbitrary feasibility predicate and a claimed
// projection. Throws NonUniqueProjection when a lattice point farther than
// delta attains D(P*||P) within 1e-9, or undercuts it.
KlGap kl_gap_scan(Distribution const& p, Distribution const& projection,
                  std::function<bool(Distribution const&)> const& feasible, double delta,
                  int grid_density, OracleOptions const& options = {});

// ln[(n+1)^k e^{-n eta}], the concentration envelope on the bad mass.
double log_concentration_envelope(int n, std::size_t k, double eta);

//---------------------------------------------------------------------------//
// Entropy concentration
//---------------------------------------------------------------------------//

struct EntropyConcentration {
  int sample_size = 0;
  std::uint64_t samples = 0;
  double interval_lower = 0.0;
  double interval_upper = 0.0;
  // Fraction of sampled types whose entropy lies in the closed interval.
  double coverage = 0.0;
  // Quantiles of 2N * D(type || p); for uniform p this is 2N (ln k - H).
  double deviance_q50 = 0.0;
  double deviance_q90 = 0.0;
  double deviance_q95 = 0.0;
  double deviance_q99 = 0.0;
  // 95% quantile of the entropy shortfall, deviance_q95 / (2N).
  double delta_h_q95 = 0.0;
  double mean_entropy = 0.0;
};

EntropyConcentration entropy_concentration(Distribution const& p, int sample_size,
                                           std::uint64_t samples, std::uint64_t seed,
                                           double interval_lower, double interval_upper,
                                           unsigned threads = 0);

}  // namespace tiltlab
