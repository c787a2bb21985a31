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

#include "tiltlab/tilt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "tiltlab/error.hpp"

namespace tiltlab {

//---------------------------------------------------------------------------//
// MomentFunction
//---------------------------------------------------------------------------//

MomentFunction::MomentFunction(AlphabetPtr alphabet, std::size_t dim,
                               std::vector<double> table)
    : alphabet_(std::move(alphabet)), dim_(dim), table_(std::move(table)) {
  if (!alphabet_) throw std::invalid_argument("moment function without alphabet");
  if (dim_ < 1) throw std::invalid_argument("moment function dimension must be >= 1");
  std::size_t const k = alphabet_->size();
  if (table_.size() != k * dim_) {
    throw std::invalid_argument("moment table must have k rows of d values");
  }
  for (double v : table_) {
    if (!std::isfinite(v)) throw std::invalid_argument("moment table entries must be finite");
  }
  integer_valued_ = std::all_of(table_.begin(), table_.end(),
                                [](double v) { return v == std::round(v) && std::abs(v) < 1e15; });

  Eigen::MatrixXd centered(k, dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    double mean = 0.0;
    for (std::size_t x = 0; x < k; ++x) mean += (*this)(x, j);
    mean /= static_cast<double>(k);
    for (std::size_t x = 0; x < k; ++x) centered(x, j) = (*this)(x, j) - mean;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(centered);
  lu.setThreshold(1e-12);
  if (static_cast<std::size_t>(lu.rank()) < dim_) {
    throw std::invalid_argument(
        dim_ == 1 ? "moment function is constant over the alphabet"
                  : "moment function components are affinely dependent");
  }
}

MomentFunction MomentFunction::scalar(AlphabetPtr alphabet, std::vector<double> values) {
  return MomentFunction(std::move(alphabet), 1, std::move(values));
}

MomentFunction MomentFunction::label_values(AlphabetPtr alphabet) {
  std::vector<double> values;
  for (auto const& label : alphabet->labels()) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(label, &used);
    } catch (std::exception const&) {
      used = 0;
    }
    if (used != label.size()) {
      throw std::invalid_argument("label '" + label + "' is not numeric");
    }
    values.push_back(v);
  }
  return scalar(std::move(alphabet), std::move(values));
}

double MomentFunction::min(std::size_t component) const {
  double m = (*this)(0, component);
  for (std::size_t x = 1; x < size(); ++x) m = std::min(m, (*this)(x, component));
  return m;
}

double MomentFunction::max(std::size_t component) const {
  double m = (*this)(0, component);
  for (std::size_t x = 1; x < size(); ++x) m = std::max(m, (*this)(x, component));
  return m;
}

double MomentFunction::diameter() const {
  double best = 0.0;
  for (std::size_t a = 0; a < size(); ++a) {
    for (std::size_t b = a + 1; b < size(); ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        double const d = (*this)(a, j) - (*this)(b, j);
        s += d * d;
      }
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

//---------------------------------------------------------------------------//
// MomentConstraint
//---------------------------------------------------------------------------//

MomentConstraint::MomentConstraint(MomentFunction h, ConstraintKind kind,
                                   std::vector<double> target,
                                   std::optional<double> half_width)
    : h_(std::move(h)), kind_(kind), target_(std::move(target)), half_width_(half_width) {
  if (target_.size() != h_.dim()) {
    throw std::invalid_argument("constraint target dimension does not match statistic");
  }
  for (double t : target_) {
    if (!std::isfinite(t)) throw std::invalid_argument("constraint target must be finite");
  }
  if (kind_ == ConstraintKind::lower_halfspace && h_.dim() != 1) {
    throw std::invalid_argument("halfspace constraints require d = 1");
  }
  if (half_width_) {
    if (kind_ != ConstraintKind::equality || h_.dim() != 1) {
      throw std::invalid_argument("windows apply to scalar equality constraints only");
    }
    if (!(*half_width_ > 0.0) || !std::isfinite(*half_width_)) {
      throw std::invalid_argument("window half-width must be positive");
    }
    if (!(h_.min() < lower() && upper() < h_.max())) {
      std::ostringstream os;
      os << "window (" << lower() << ", " << upper() << ") must lie strictly inside ("
         << h_.min() << ", " << h_.max() << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

MomentConstraint MomentConstraint::equality(MomentFunction h, double target) {
  return MomentConstraint(std::move(h), ConstraintKind::equality, {target});
}

MomentConstraint MomentConstraint::at_least(MomentFunction h, double target) {
  return MomentConstraint(std::move(h), ConstraintKind::lower_halfspace, {target});
}

MomentConstraint MomentConstraint::window(MomentFunction h, double target, double half_width) {
  return MomentConstraint(std::move(h), ConstraintKind::equality, {target}, half_width);
}

double MomentConstraint::lower() const {
  if (!half_width_) throw std::logic_error("constraint is not a window");
  return target_[0] - *half_width_;
}

double MomentConstraint::upper() const {
  if (!half_width_) throw std::logic_error("constraint is not a window");
  return target_[0] + *half_width_;
}

bool window_admits(double sum, double n, double lower, double upper) {
  double const mean = sum / n;
  double const tol = kTypeConstraintTol * std::max({1.0, std::abs(lower), std::abs(upper)});
  return mean - lower > tol && upper - mean > tol;
}

bool MomentConstraint::admits_sum(std::span<double const> sums, double n) const {
  if (sums.size() != h_.dim()) throw std::invalid_argument("sum dimension mismatch");
  if (half_width_) return window_admits(sums[0], n, lower(), upper());
  for (std::size_t j = 0; j < sums.size(); ++j) {
    double const mean = sums[j] / n;
    double const tol = kTypeConstraintTol * std::max(1.0, std::abs(target_[j]));
    if (kind_ == ConstraintKind::lower_halfspace) {
      if (mean - target_[j] < -tol) return false;
    } else if (std::abs(mean - target_[j]) > tol) {
      return false;
    }
  }
  return true;
}

bool MomentConstraint::admits_counts(std::span<int const> counts) const {
  if (counts.size() != h_.size()) throw std::invalid_argument("count vector length mismatch");
  std::vector<double> sums(h_.dim(), 0.0);
  double n = 0.0;
  for (std::size_t x = 0; x < counts.size(); ++x) {
    if (counts[x] == 0) continue;
    n += counts[x];
    for (std::size_t j = 0; j < h_.dim(); ++j) sums[j] += counts[x] * h_(x, j);
  }
  // Sums of integer statistics are exact here, so lattice endpoints compare
  // exactly against the target.
  return admits_sum(sums, n);
}

bool MomentConstraint::admits(Distribution const& q) const {
  auto const mean = mean_of(q, h_);
  return admits_sum(mean, 1.0);
}

std::string MomentConstraint::describe() const {
  std::ostringstream os;
  os.precision(12);
  if (half_width_) {
    os << lower() << " < mean(h) < " << upper();
  } else if (kind_ == ConstraintKind::lower_halfspace) {
    os << "mean(h) >= " << target_[0];
  } else {
    os << "mean(h) = (";
    for (std::size_t j = 0; j < target_.size(); ++j) os << (j ? ", " : "") << target_[j];
    os << ")";
  }
  return os.str();
}

//---------------------------------------------------------------------------//
// Tilting
//---------------------------------------------------------------------------//

char const* to_string(TiltStatus status) {
  switch (status) {
    case TiltStatus::interior:
      return "interior";
    case TiltStatus::active:
      return "active";
    case TiltStatus::boundary_infeasible:
      return "boundary-infeasible";
  }
  return "unknown";
}

namespace {

void require_compatible(Distribution const& p, MomentFunction const& h,
                        std::span<double const> lambda) {
  if (!same_alphabet(p.alphabet(), h.alphabet())) {
    throw std::invalid_argument("baseline and statistic use different alphabets");
  }
  if (!p.strictly_positive()) {
    throw std::invalid_argument("baseline law must be strictly positive");
  }
  if (lambda.size() != h.dim()) throw std::invalid_argument("multiplier dimension mismatch");
  for (double l : lambda) {
    if (!std::isfinite(l)) throw std::invalid_argument("multiplier must be finite");
  }
}

double dot_row(MomentFunction const& h, std::size_t x, std::span<double const> lambda) {
  double s = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) s += lambda[j] * h(x, j);
  return s;
}

std::vector<double> log_weights(Distribution const& p, MomentFunction const& h,
                                std::span<double const> lambda) {
  std::vector<double> lw(p.size());
  for (std::size_t x = 0; x < p.size(); ++x) lw[x] = std::log(p[x]) + dot_row(h, x, lambda);
  return lw;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

Moments tilted_moments(Distribution const& p, MomentFunction const& h,
                       std::span<double const> lambda) {
  auto const law = tilt(p, h, lambda);
  std::size_t const d = h.dim();
  Moments out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (std::size_t x = 0; x < p.size(); ++x) {
    for (std::size_t j = 0; j < d; ++j) out.mean(j) += law[x] * h(x, j);
  }
  for (std::size_t x = 0; x < p.size(); ++x) {
    Eigen::VectorXd dev(d);
    for (std::size_t j = 0; j < d; ++j) dev(j) = h(x, j) - out.mean(j);
    out.covariance += law[x] * dev * dev.transpose();
  }
  return out;
}

TiltSolution interior_solution(Distribution const& p, MomentFunction const& h, double residual) {
  TiltSolution s;
  s.multiplier.assign(h.dim(), 0.0);
  s.log_partition = 0.0;
  s.law = p;
  s.divergence = 0.0;
  s.status = TiltStatus::interior;
  s.residual = residual;
  s.diagnostic = "constraint already satisfied by the baseline";
  return s;
}

TiltSolution infeasible_solution(std::size_t dim, std::string diagnostic) {
  TiltSolution s;
  s.multiplier.assign(dim, 0.0);
  s.divergence = std::numeric_limits<double>::infinity();
  s.status = TiltStatus::boundary_infeasible;
  s.residual = std::numeric_limits<double>::infinity();
  s.diagnostic = std::move(diagnostic);
  return s;
}

TiltSolution finish(Distribution const& p, MomentFunction const& h,
                    std::vector<double> lambda, std::span<double const> alpha,
                    int iterations) {
  TiltSolution s;
  s.law = tilt(p, h, lambda);
  s.log_partition = log_partition(p, h, lambda);
  s.divergence = kl_divergence(*s.law, p);
  auto const mean = mean_of(*s.law, h);
  double r = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) r += (mean[j] - alpha[j]) * (mean[j] - alpha[j]);
  s.residual = std::sqrt(r);
  s.multiplier = std::move(lambda);
  s.iterations = iterations;
  s.status = TiltStatus::active;
  return s;
}

// Scalar solve: damped Newton, then bisection on the monotone moment map if
// Newton stalls.
TiltSolution solve_scalar(Distribution const& p, MomentFunction const& h, double alpha,
                          SolverOptions const& options) {
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  auto residual_at = [&](double l) { return moment_map(p, h, l) - alpha; };

  double g = residual_at(lambda);
  for (; iterations < options.max_iterations; ++iterations) {
    if (std::abs(g) <= options.tolerance) {
      converged = true;
      // One more full step drives the residual to rounding level.
      std::array<double, 1> const lam{lambda};
      double const var = tilted_moments(p, h, lam).covariance(0, 0);
      if (var > 1e-300) {
        double const trial = lambda - g / var;
        double const gt = residual_at(trial);
        if (std::isfinite(gt) && std::abs(gt) < std::abs(g)) {
          lambda = trial;
          g = gt;
        }
      }
      break;
    }
    std::array<double, 1> const lam{lambda};
    double const var = tilted_moments(p, h, lam).covariance(0, 0);
    if (!(var > 1e-300)) break;
    double const step = -g / var;
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      double const trial = lambda + t * step;
      double const gt = residual_at(trial);
      if (std::isfinite(gt) && std::abs(gt) < std::abs(g)) {
        lambda = trial;
        g = gt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  if (!converged) {
    double lo = lambda;
    double hi = lambda;
    double width = 1.0;
    if (g < 0.0) {
      hi = lambda + width;
      while (residual_at(hi) < 0.0) {
        lo = hi;
        width *= 2.0;
        hi = lambda + width;
        if (width > 1e12) throw SolverError("could not bracket the multiplier");
      }
    } else {
      lo = lambda - width;
      while (residual_at(lo) > 0.0) {
        hi = lo;
        width *= 2.0;
        lo = lambda - width;
        if (width > 1e12) throw SolverError("could not bracket the multiplier");
      }
    }
    for (int it = 0; it < 400; ++it, ++iterations) {
      double const mid = 0.5 * (lo + hi);
      double const gm = residual_at(mid);
      lambda = mid;
      g = gm;
      if (std::abs(gm) <= options.tolerance || mid == lo || mid == hi) break;
      (gm < 0.0 ? lo : hi) = mid;
    }
  }
  std::array<double, 1> const a{alpha};
  auto s = finish(p, h, {lambda}, a, iterations);
  if (s.residual > options.tolerance) {
    std::ostringstream os;
    os << "moment equation residual " << s.residual << " above tolerance";
    throw SolverError(os.str());
  }
  return s;
}

TiltSolution solve_vector(Distribution const& p, MomentFunction const& h,
                          std::span<double const> alpha, SolverOptions const& options) {
  std::size_t const d = h.dim();
  Eigen::Map<Eigen::VectorXd const> target(alpha.data(), static_cast<Eigen::Index>(d));
  std::vector<double> lambda(d, 0.0);
  auto mom = tilted_moments(p, h, lambda);
  Eigen::VectorXd g = mom.mean - target;
  int iterations = 0;
  for (; iterations < options.max_iterations && g.norm() > options.tolerance; ++iterations) {
    Eigen::VectorXd const step = mom.covariance.ldlt().solve(-g);
    if (!step.allFinite()) throw SolverError("singular tilted covariance");
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      std::vector<double> trial(d);
      for (std::size_t j = 0; j < d; ++j) trial[j] = lambda[j] + t * step(static_cast<Eigen::Index>(j));
      auto tm = tilted_moments(p, h, trial);
      Eigen::VectorXd const gt = tm.mean - target;
      if (gt.allFinite() && gt.norm() < g.norm()) {
        lambda = std::move(trial);
        mom = std::move(tm);
        g = gt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (g.norm() > options.tolerance) {
    std::ostringstream os;
    os << "Newton iteration stopped at residual " << g.norm() << " after " << iterations
       << " iterations";
    throw SolverError(os.str());
  }
  return finish(p, h, std::move(lambda), alpha, iterations);
}

// Every combination of `choose` indices out of `total`, in lexicographic order.
template <class F>
void for_each_combination(std::size_t total, std::size_t choose, F&& f) {
  if (choose > total) return;
  std::vector<std::size_t> idx(choose);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(std::span<std::size_t const>(idx));
    std::size_t i = choose;
    while (i > 0 && idx[i - 1] == total - choose + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < choose; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

double log_partition(Distribution const& p, MomentFunction const& h,
                     std::span<double const> lambda) {
  require_compatible(p, h, lambda);
  auto const lw = log_weights(p, h, lambda);
  return log_sum_exp(lw);
}

double log_partition(Distribution const& p, MomentFunction const& h, double lambda) {
  std::array<double, 1> const l{lambda};
  return log_partition(p, h, l);
}

Distribution tilt(Distribution const& p, MomentFunction const& h,
                  std::span<double const> lambda) {
  require_compatible(p, h, lambda);
  if (std::all_of(lambda.begin(), lambda.end(), [](double l) { return l == 0.0; })) {
    return p;
  }
  auto lw = log_weights(p, h, lambda);
  double const m = log_sum_exp(lw);
  std::vector<double> masses(lw.size());
  for (std::size_t x = 0; x < lw.size(); ++x) masses[x] = clamped_exp(lw[x] - m);
  return Distribution::normalized(p.alphabet(), std::move(masses));
}

Distribution tilt(Distribution const& p, MomentFunction const& h, double lambda) {
  std::array<double, 1> const l{lambda};
  return tilt(p, h, l);
}

std::vector<double> mean_of(Distribution const& q, MomentFunction const& h) {
  if (!same_alphabet(q.alphabet(), h.alphabet())) {
    throw std::invalid_argument("law and statistic use different alphabets");
  }
  std::vector<double> mean(h.dim(), 0.0);
  for (std::size_t x = 0; x < q.size(); ++x) {
    for (std::size_t j = 0; j < h.dim(); ++j) mean[j] += q[x] * h(x, j);
  }
  return mean;
}

std::vector<double> moment_map(Distribution const& p, MomentFunction const& h,
                               std::span<double const> lambda) {
  return mean_of(tilt(p, h, lambda), h);
}

double moment_map(Distribution const& p, MomentFunction const& h, double lambda) {
  std::array<double, 1> const l{lambda};
  return moment_map(p, h, l)[0];
}

HullCheck hull_interior(MomentFunction const& h, std::span<double const> alpha,
                        double relative_margin) {
  std::size_t const d = h.dim();
  if (alpha.size() != d) throw std::invalid_argument("target dimension mismatch");
  HullCheck out;
  std::ostringstream os;
  os.precision(12);
  if (d == 1) {
    double const lo = h.min();
    double const hi = h.max();
    double const margin = relative_margin * (hi - lo);
    out.interior = lo + margin < alpha[0] && alpha[0] < hi - margin;
    if (!out.interior) {
      os << "target " << alpha[0] << " is outside convex hull [" << lo << ", " << hi
         << "] (or on its boundary); no finite multiplier exists";
      out.diagnostic = os.str();
    }
    return out;
  }

  // Full-dimensional hull: every facet is spanned by d affinely independent
  // rows, so scanning all d-subsets finds all supporting hyperplanes.
  std::size_t const k = h.size();
  double const diam = h.diameter();
  double const margin = relative_margin * diam;
  double const side_tol = 1e-12 * std::max(1.0, diam);
  Eigen::VectorXd target(d);
  for (std::size_t j = 0; j < d; ++j) target(static_cast<Eigen::Index>(j)) = alpha[j];
  auto point = [&](std::size_t x) {
    Eigen::VectorXd v(d);
    for (std::size_t j = 0; j < d; ++j) v(static_cast<Eigen::Index>(j)) = h(x, j);
    return v;
  };

  bool any_facet = false;
  bool inside = true;
  double worst = std::numeric_limits<double>::infinity();
  for_each_combination(k, d, [&](std::span<std::size_t const> idx) {
    if (!inside) return;
    Eigen::VectorXd const base = point(idx[0]);
    Eigen::MatrixXd edges(static_cast<Eigen::Index>(d - 1), static_cast<Eigen::Index>(d));
    for (std::size_t r = 1; r < d; ++r) {
      edges.row(static_cast<Eigen::Index>(r - 1)) = (point(idx[r]) - base).transpose();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(edges);
    lu.setThreshold(1e-12);
    Eigen::MatrixXd const kernel = lu.kernel();
    if (kernel.cols() != 1) return;
    Eigen::VectorXd normal = kernel.col(0).normalized();
    double offset = normal.dot(base);
    bool all_below = true;
    bool all_above = true;
    for (std::size_t x = 0; x < k; ++x) {
      double const s = normal.dot(point(x)) - offset;
      all_below = all_below && s <= side_tol;
      all_above = all_above && s >= -side_tol;
    }
    if (!all_below && !all_above) return;
    if (!all_below) {
      normal = -normal;
      offset = -offset;
    }
    any_facet = true;
    double const slack = offset - normal.dot(target);
    worst = std::min(worst, slack);
    if (slack <= margin) inside = false;
  });
  out.interior = any_facet && inside;
  if (!out.interior) {
    os << "target lies outside the convex hull of h (or within " << margin
       << " of a facet; facet slack " << worst << "); no finite multiplier exists";
    out.diagnostic = os.str();
  }
  return out;
}

TiltSolution solve_moment_equality(Distribution const& p, MomentFunction const& h,
                                   std::span<double const> alpha,
                                   SolverOptions const& options) {
  std::vector<double> zero(h.dim(), 0.0);
  require_compatible(p, h, zero);
  if (alpha.size() != h.dim()) throw std::invalid_argument("target dimension mismatch");

  auto const hull = hull_interior(h, alpha, options.hull_margin);
  if (!hull.interior) return infeasible_solution(h.dim(), hull.diagnostic);

  auto const base_mean = mean_of(p, h);
  double r = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    r += (base_mean[j] - alpha[j]) * (base_mean[j] - alpha[j]);
  }
  if (std::sqrt(r) <= options.tolerance) return interior_solution(p, h, std::sqrt(r));

  if (h.dim() == 1) return solve_scalar(p, h, alpha[0], options);
  return solve_vector(p, h, alpha, options);
}

TiltSolution solve_moment_equality(Distribution const& p, MomentFunction const& h,
                                   double alpha, SolverOptions const& options) {
  std::array<double, 1> const a{alpha};
  return solve_moment_equality(p, h, a, options);
}

TiltSolution i_project(Distribution const& p, MomentConstraint const& c,
                       SolverOptions const& options) {
  auto const& h = c.statistic();
  if (c.kind() == ConstraintKind::equality && !c.is_window()) {
    return solve_moment_equality(p, h, c.target(), options);
  }

  std::vector<double> zero(1, 0.0);
  require_compatible(p, h, zero);
  double const mean = mean_of(p, h)[0];

  if (c.is_window()) {
    double const a = c.lower();
    double const b = c.upper();
    if (mean >= a && mean <= b) return interior_solution(p, h, 0.0);
    return solve_moment_equality(p, h, mean < a ? a : b, options);
  }

  double const alpha = c.target()[0];
  if (mean >= alpha) return interior_solution(p, h, 0.0);
  if (alpha > h.max()) {
    std::ostringstream os;
    os << "halfspace mean(h) >= " << alpha << " is empty: sup h = " << h.max()
       << " (outside convex hull)";
    return infeasible_solution(1, os.str());
  }
  // KKT active: the projection sits on the boundary mean(h) = alpha.
  return solve_moment_equality(p, h, alpha, options);
}

double tilted_cdf(Distribution const& p, MomentFunction const& h, double lambda,
                  std::size_t symbol) {
  if (h.dim() != 1) throw std::invalid_argument("tilted_cdf requires a scalar statistic");
  if (symbol >= p.size()) throw std::out_of_range("symbol outside alphabet");
  auto const law = tilt(p, h, lambda);
  if (symbol + 1 == p.size()) return 1.0;
  double s = 0.0;
  for (std::size_t x = 0; x <= symbol; ++x) s += law[x];
  return std::min(s, 1.0);
}

}  // namespace tiltlab
