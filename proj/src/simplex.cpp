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

#include "tiltlab/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "tiltlab/error.hpp"

namespace tiltlab {

namespace {

std::mutex g_warning_mutex;
WarningHandler g_warning_handler;

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_warning_mutex);
  g_warning_handler = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard<std::mutex> lock(g_warning_mutex);
  if (g_warning_handler) {
    g_warning_handler(message);
  } else {
    std::cerr << "tiltlab warning: " << message << '\n';
  }
}

//---------------------------------------------------------------------------//
// Alphabet
//---------------------------------------------------------------------------//

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw std::invalid_argument("alphabet needs at least two symbols");
  }
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) {
    throw std::invalid_argument("alphabet labels must be distinct");
  }
}

std::shared_ptr<const Alphabet> Alphabet::numbered(int first, std::size_t k) {
  std::vector<std::string> labels;
  labels.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    labels.push_back(std::to_string(first + static_cast<int>(i)));
  }
  return std::make_shared<const Alphabet>(std::move(labels));
}

std::optional<std::size_t> Alphabet::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

bool same_alphabet(AlphabetPtr const& a, AlphabetPtr const& b) {
  return a == b || (a && b && *a == *b);
}

//---------------------------------------------------------------------------//
// Distribution
//---------------------------------------------------------------------------//

Distribution::Distribution(AlphabetPtr alphabet, std::vector<double> masses)
    : alphabet_(std::move(alphabet)), masses_(std::move(masses)) {
  if (!alphabet_) throw std::invalid_argument("distribution without alphabet");
  if (masses_.size() != alphabet_->size()) {
    throw std::invalid_argument("distribution length does not match alphabet");
  }
  double total = 0.0;
  for (double x : masses_) {
    if (!std::isfinite(x) || x < 0.0) {
      throw std::invalid_argument("distribution entries must be finite and >= 0");
    }
    total += x;
  }
  double const gap = std::abs(total - 1.0);
  if (gap > kSimplexRenormTol) {
    std::ostringstream os;
    os << "distribution sums to " << total << ", off the simplex by " << gap;
    throw std::invalid_argument(os.str());
  }
  if (gap > kSimplexExactTol) {
    std::ostringstream os;
    os << "renormalizing distribution with total " << total;
    warn(os.str());
    for (double& x : masses_) x /= total;
  }
  strictly_positive_ =
      std::all_of(masses_.begin(), masses_.end(), [](double x) { return x > 0.0; });
}

Distribution Distribution::uniform(AlphabetPtr alphabet) {
  std::size_t const k = alphabet->size();
  return Distribution(std::move(alphabet), std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Distribution Distribution::point_mass(AlphabetPtr alphabet, std::size_t symbol) {
  std::vector<double> masses(alphabet->size(), 0.0);
  masses.at(symbol) = 1.0;
  return Distribution(std::move(alphabet), std::move(masses));
}

Distribution Distribution::bernoulli(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("bernoulli parameter outside [0, 1]");
  }
  static AlphabetPtr const binary = Alphabet::numbered(0, 2);
  return Distribution(binary, {1.0 - theta, theta});
}

Distribution Distribution::normalized(AlphabetPtr alphabet, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("weights sum to zero");
  for (double& w : weights) w /= total;
  return Distribution(std::move(alphabet), std::move(weights));
}

//---------------------------------------------------------------------------//
// BlockLaw
//---------------------------------------------------------------------------//

std::size_t checked_word_count(std::size_t k, std::size_t m, std::size_t cap) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (count > cap / k) {
      std::ostringstream os;
      os << "block law with k = " << k << ", m = " << m << " exceeds the word cap of "
         << cap;
      throw CapExceeded(os.str());
    }
    count *= k;
  }
  if (count > cap) {
    std::ostringstream os;
    os << "block law with " << count << " words exceeds the word cap of " << cap;
    throw CapExceeded(os.str());
  }
  return count;
}

BlockLaw::BlockLaw(AlphabetPtr alphabet, std::size_t block_length, std::vector<double> masses)
    : alphabet_(std::move(alphabet)), block_length_(block_length), masses_(std::move(masses)) {
  if (!alphabet_) throw std::invalid_argument("block law without alphabet");
  if (block_length_ < 1) throw std::invalid_argument("block length must be >= 1");
  std::size_t expected = 1;
  for (std::size_t i = 0; i < block_length_; ++i) expected *= alphabet_->size();
  if (masses_.size() != expected) {
    throw std::invalid_argument("block law mass vector has wrong length");
  }
  double total = 0.0;
  for (double x : masses_) {
    if (!std::isfinite(x) || x < 0.0) {
      throw std::invalid_argument("block law masses must be finite and >= 0");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kBlockLawTol) {
    std::ostringstream os;
    os << "block law sums to " << total;
    throw std::invalid_argument(os.str());
  }
}

std::size_t BlockLaw::word_index(std::span<std::size_t const> word) const {
  if (word.size() != block_length_) {
    throw std::invalid_argument("word length does not match block length");
  }
  std::size_t const k = alphabet_->size();
  std::size_t index = 0;
  for (std::size_t x : word) {
    if (x >= k) throw std::out_of_range("symbol outside alphabet");
    index = index * k + x;
  }
  return index;
}

std::vector<std::size_t> BlockLaw::word(std::size_t index) const {
  std::size_t const k = alphabet_->size();
  std::vector<std::size_t> out(block_length_);
  for (std::size_t i = block_length_; i-- > 0;) {
    out[i] = index % k;
    index /= k;
  }
  return out;
}

double BlockLaw::mass(std::span<std::size_t const> word) const {
  return masses_[word_index(word)];
}

//---------------------------------------------------------------------------//
// Functionals
//---------------------------------------------------------------------------//

double entropy(Distribution const& p) {
  double h = 0.0;
  for (double x : p.masses()) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return std::max(h, 0.0);
}

double kl_divergence(Distribution const& q, Distribution const& p) {
  if (!same_alphabet(q.alphabet(), p.alphabet())) {
    throw std::invalid_argument("kl_divergence: alphabets differ");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double const qi = q[i];
    if (qi <= 0.0) continue;
    if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
    d += qi * (std::log(qi) - std::log(p[i]));
  }
  return std::max(d, 0.0);
}

namespace {

double half_l1(std::span<double const> a, std::span<double const> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

double tv_distance(Distribution const& p, Distribution const& q) {
  if (!same_alphabet(p.alphabet(), q.alphabet())) {
    throw std::invalid_argument("tv_distance: alphabets differ");
  }
  return std::min(1.0, half_l1(p.masses(), q.masses()));
}

double tv_distance(BlockLaw const& p, BlockLaw const& q) {
  if (!same_alphabet(p.alphabet(), q.alphabet())) {
    throw std::invalid_argument("tv_distance: alphabets differ");
  }
  if (p.block_length() != q.block_length()) {
    throw std::invalid_argument("tv_distance: block lengths differ");
  }
  return std::min(1.0, half_l1(p.masses(), q.masses()));
}

double l1_distance(Distribution const& p, Distribution const& q) {
  if (!same_alphabet(p.alphabet(), q.alphabet())) {
    throw std::invalid_argument("l1_distance: alphabets differ");
  }
  return 2.0 * half_l1(p.masses(), q.masses());
}

BlockLaw product_block_law(Distribution const& p, std::size_t m, std::size_t cap) {
  if (m < 1) throw std::invalid_argument("product_block_law: m must be >= 1");
  std::size_t const k = p.size();
  std::size_t const words = checked_word_count(k, m, cap);
  // Build by repeated outer product with the single-symbol law.
  std::vector<double> masses(p.masses().begin(), p.masses().end());
  masses.reserve(words);
  for (std::size_t len = 1; len < m; ++len) {
    std::vector<double> next(masses.size() * k);
    for (std::size_t w = 0; w < masses.size(); ++w) {
      for (std::size_t x = 0; x < k; ++x) next[w * k + x] = masses[w] * p[x];
    }
    masses = std::move(next);
  }
  double const total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (double& x : masses) x /= total;
  return BlockLaw(p.alphabet(), m, std::move(masses));
}

Distribution marginal(BlockLaw const& law, std::size_t coordinate) {
  std::size_t const m = law.block_length();
  if (coordinate >= m) throw std::out_of_range("marginal: coordinate out of range");
  std::size_t const k = law.alphabet()->size();
  std::size_t stride = 1;
  for (std::size_t i = coordinate + 1; i < m; ++i) stride *= k;
  std::vector<double> out(k, 0.0);
  auto masses = law.masses();
  for (std::size_t w = 0; w < masses.size(); ++w) out[(w / stride) % k] += masses[w];
  return Distribution::normalized(law.alphabet(), std::move(out));
}

BlockLaw prefix_law(BlockLaw const& law, std::size_t length) {
  std::size_t const m = law.block_length();
  if (length < 1 || length > m) throw std::out_of_range("prefix_law: bad length");
  std::size_t const k = law.alphabet()->size();
  std::size_t tail = 1;
  for (std::size_t i = length; i < m; ++i) tail *= k;
  auto masses = law.masses();
  std::vector<double> out(masses.size() / tail, 0.0);
  for (std::size_t w = 0; w < masses.size(); ++w) out[w / tail] += masses[w];
  return BlockLaw(law.alphabet(), length, std::move(out));
}

//---------------------------------------------------------------------------//
// Log-domain helpers
//---------------------------------------------------------------------------//

double clamped_exp(double log_value) { return std::exp(std::max(log_value, kMinLogMass)); }

double log_sum_exp(std::span<double const> values) {
  double const ninf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return ninf;
  double const hi = *std::max_element(values.begin(), values.end());
  if (hi == ninf) return ninf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

void LogSumAccumulator::add(double log_value) {
  ++count_;
  if (log_value == -std::numeric_limits<double>::infinity()) return;
  if (log_value <= max_) {
    scaled_sum_ += std::exp(log_value - max_);
  } else {
    scaled_sum_ = scaled_sum_ * std::exp(max_ - log_value) + 1.0;
    max_ = log_value;
  }
}

double LogSumAccumulator::value() const {
  if (scaled_sum_ <= 0.0) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(scaled_sum_);
}

}  // namespace tiltlab
