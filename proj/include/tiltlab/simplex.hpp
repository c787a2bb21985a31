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
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tiltlab {

// Natural-log unit throughout. exp() arguments below this are clamped so
// that converted masses stay representable.
inline constexpr double kMinLogMass = -745.0;

// Simplex tolerances: accept silently, renormalize with a warning, reject.
inline constexpr double kSimplexExactTol = 1e-12;
inline constexpr double kSimplexRenormTol = 1e-8;
inline constexpr double kBlockLawTol = 1e-10;

inline constexpr std::size_t kDefaultWordCap = 1'000'000;

// Receives non-fatal diagnostics (renormalized inputs). Defaults to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

//---------------------------------------------------------------------------//
/*!
 * Finite, totally ordered symbol set. Symbols are addressed by index; the
 * order of the labels is the order used by cumulative functionals.
 */
class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> labels);

  // Labels "first", "first+1", ..., k symbols.
  static std::shared_ptr<const Alphabet> numbered(int first, std::size_t k);

  std::size_t size() const { return labels_.size(); }
  std::string const& label(std::size_t i) const { return labels_.at(i); }
  std::vector<std::string> const& labels() const { return labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(Alphabet const& other) const = default;

 private:
  std::vector<std::string> labels_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

bool same_alphabet(AlphabetPtr const& a, AlphabetPtr const& b);

//---------------------------------------------------------------------------//
/*!
 * Probability vector on an alphabet.
 *
 * Construction validates the simplex: entries must be finite and
 * nonnegative; a total within 1e-12 of one is accepted as is, within 1e-8
 * it is renormalized with a warning, anything further is rejected.
 */
class Distribution {
 public:
  Distribution(AlphabetPtr alphabet, std::vector<double> masses);

  static Distribution uniform(AlphabetPtr alphabet);
  static Distribution point_mass(AlphabetPtr alphabet, std::size_t symbol);
  // Law on {0, 1} with mass theta on symbol 1.
  static Distribution bernoulli(double theta);
  // Builds from nonnegative weights of arbitrary total (no tolerance check).
  static Distribution normalized(AlphabetPtr alphabet,
                                 std::vector<double> weights);

  AlphabetPtr const& alphabet() const { return alphabet_; }
  std::size_t size() const { return masses_.size(); }
  std::span<double const> masses() const { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }

  bool strictly_positive() const { return strictly_positive_; }

 private:
  AlphabetPtr alphabet_;
  std::vector<double> masses_;
  bool strictly_positive_ = false;
};

//---------------------------------------------------------------------------//
/*!
 * Law of a length-m word over an alphabet.
 *
 * Masses are stored densely in base-k order: word (x_1, ..., x_m) lives at
 * index x_1 k^{m-1} + ... + x_m.
 */
class BlockLaw {
 public:
  BlockLaw(AlphabetPtr alphabet, std::size_t block_length,
           std::vector<double> masses);

  AlphabetPtr const& alphabet() const { return alphabet_; }
  std::size_t block_length() const { return block_length_; }
  std::size_t word_count() const { return masses_.size(); }
  std::span<double const> masses() const { return masses_; }

  double mass(std::span<std::size_t const> word) const;
  std::size_t word_index(std::span<std::size_t const> word) const;
  std::vector<std::size_t> word(std::size_t index) const;

 private:
  AlphabetPtr alphabet_;
  std::size_t block_length_;
  std::vector<double> masses_;
};

// k^m, or throws CapExceeded when it exceeds the cap.
std::size_t checked_word_count(std::size_t k, std::size_t m, std::size_t cap);

//---------------------------------------------------------------------------//
// Functionals
//---------------------------------------------------------------------------//

// Shannon entropy in nats, 0 ln 0 := 0.
double entropy(Distribution const& p);

// D(q || p) in nats. Returns +infinity when q charges a symbol p does not.
double kl_divergence(Distribution const& q, Distribution const& p);

double tv_distance(Distribution const& p, Distribution const& q);
double tv_distance(BlockLaw const& p, BlockLaw const& q);

// ||p - q||_1 over symbols.
double l1_distance(Distribution const& p, Distribution const& q);

BlockLaw product_block_law(Distribution const& p, std::size_t m,
                           std::size_t cap = kDefaultWordCap);

// Law of one coordinate of a block.
Distribution marginal(BlockLaw const& law, std::size_t coordinate);
// Law of the first `length` coordinates.
BlockLaw prefix_law(BlockLaw const& law, std::size_t length);

//---------------------------------------------------------------------------//
// Log-domain helpers
//---------------------------------------------------------------------------//

double clamped_exp(double log_value);

// log(sum exp(x_i)); -inf for an empty range or all -inf.
double log_sum_exp(std::span<double const> values);

// Running log-sum-exp over a stream, rescaling when the maximum moves.
class LogSumAccumulator {
 public:
  void add(double log_value);
  double value() const;
  bool empty() const { return count_ == 0; }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double scaled_sum_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace tiltlab
