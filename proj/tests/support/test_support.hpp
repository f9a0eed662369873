#ifndef SHIFTKIT_TEST_SUPPORT_HPP
#define SHIFTKIT_TEST_SUPPORT_HPP

// Brute-force oracles and seeded instance generators shared by the unit and
// acceptance suites. Every oracle works directly on raw weight tables and
// never calls the operation it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shiftkit/distribution.hpp"

namespace testsupport {

using shiftkit::ClassPriors;
using shiftkit::FeatureDensity;
using shiftkit::FiniteJointDistribution;
using shiftkit::Table;

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

inline std::vector<double> oracle_priors(const FiniteJointDistribution& d) {
  std::vector<double> p(d.num_classes(), 0.0);
  for (std::size_t x = 0; x < d.num_cells(); ++x)
    for (std::size_t i = 0; i < d.num_classes(); ++i) p[i] += d.weight(x, i);
  return p;
}

inline std::vector<double> oracle_feature_marginal(const FiniteJointDistribution& d) {
  std::vector<double> f(d.num_cells(), 0.0);
  for (std::size_t x = 0; x < d.num_cells(); ++x)
    for (std::size_t i = 0; i < d.num_classes(); ++i) f[x] += d.weight(x, i);
  return f;
}

// Conditional probability of class i given the cell, straight from the table.
inline Table oracle_posteriors(const FiniteJointDistribution& d) {
  Table post(d.num_cells(), d.num_classes(), 0.0);
  const auto feat = oracle_feature_marginal(d);
  for (std::size_t x = 0; x < d.num_cells(); ++x) {
    if (feat[x] <= 0.0) continue;
    for (std::size_t i = 0; i < d.num_classes(); ++i)
      post(x, i) = d.weight(x, i) / feat[x];
  }
  return post;
}

inline Table oracle_class_conditionals(const FiniteJointDistribution& d) {
  Table cond(d.num_cells(), d.num_classes(), 0.0);
  const auto p = oracle_priors(d);
  for (std::size_t x = 0; x < d.num_cells(); ++x)
    for (std::size_t i = 0; i < d.num_classes(); ++i) cond(x, i) = d.weight(x, i) / p[i];
  return cond;
}

inline Table oracle_joint_density(const FiniteJointDistribution& target,
                                  const FiniteJointDistribution& source) {
  Table h(source.num_cells(), source.num_classes(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i)
      if (source.weight(x, i) > 0.0) h(x, i) = target.weight(x, i) / source.weight(x, i);
  return h;
}

// Lemma-style generalized Bayes brute force: per cell,
// sum_i P f 1_{class} / sum_j P f, zero where the denominator vanishes.
inline std::vector<double> oracle_generalized_bayes(const FiniteJointDistribution& source,
                                                    const Table& f, std::size_t cls) {
  std::vector<double> out(source.num_cells(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    double num = source.weight(x, cls) * f(x, cls);
    double den = 0.0;
    for (std::size_t j = 0; j < source.num_classes(); ++j)
      den += source.weight(x, j) * f(x, j);
    if (den > 0.0) out[x] = num / den;
  }
  return out;
}

// Residual of the rho equation system, written out from scratch:
//   max_j |p_j - rho_j sum_x t(x) post_j(x) / D(x)|,
//   D(x) = sum_{i<d} rho_i (q_i/p_i) post_i(x) + (q_d/p_d) post_d(x),
// with t(x) = source feature marginal times h.
inline double oracle_system_residual(const FiniteJointDistribution& source,
                                     std::span<const double> h, std::span<const double> q,
                                     std::span<const double> rho) {
  const auto p = oracle_priors(source);
  const auto feat = oracle_feature_marginal(source);
  const Table post = oracle_posteriors(source);
  const std::size_t d = source.num_classes();
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < d; ++j) {
    double e = 0.0;
    for (std::size_t x = 0; x < source.num_cells(); ++x) {
      const double t = feat[x] * h[x];
      if (t == 0.0) continue;
      double den = (q[d - 1] / p[d - 1]) * post(x, d - 1);
      for (std::size_t i = 0; i + 1 < d; ++i) den += rho[i] * (q[i] / p[i]) * post(x, i);
      e += t * post(x, j) / den;
    }
    worst = std::max(worst, std::fabs(p[j] - rho[j] * e));
  }
  return worst;
}

// Log-spaced scan of the binary system over rho in [1e-6, 1e6]: returns the
// refined root and the number of sign changes of the monotone residual form
// f(rho) = sum_x t (rho R1 - R2) / (rho q R1 + (1-q) R2).
struct RhoScan {
  double root = 1.0;
  int sign_changes = 0;
};

inline RhoScan oracle_rho_gridsearch(const FiniteJointDistribution& source,
                                     std::span<const double> h, double q,
                                     int grid_points = 2401) {
  const auto p = oracle_priors(source);
  const auto feat = oracle_feature_marginal(source);
  const Table post = oracle_posteriors(source);

  auto f = [&](double rho) {
    double v = 0.0;
    for (std::size_t x = 0; x < source.num_cells(); ++x) {
      const double t = feat[x] * h[x];
      if (t == 0.0) continue;
      const double r1 = post(x, 0) / p[0];
      const double r2 = post(x, 1) / p[1];
      const double den = rho * q * r1 + (1.0 - q) * r2;
      if (den > 0.0) v += t * (rho * r1 - r2) / den;
    }
    return v;
  };

  RhoScan out;
  double prev_rho = 1e-6;
  double prev_val = f(prev_rho);
  double lo = 0.0, hi = 0.0;
  for (int k = 1; k < grid_points; ++k) {
    const double rho = 1e-6 * std::pow(1e12, static_cast<double>(k) / (grid_points - 1));
    const double val = f(rho);
    if ((prev_val < 0.0 && val >= 0.0) || (prev_val > 0.0 && val <= 0.0)) {
      ++out.sign_changes;
      lo = prev_rho;
      hi = rho;
    }
    prev_rho = rho;
    prev_val = val;
  }
  if (out.sign_changes >= 1) {
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (f(mid) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    out.root = std::sqrt(lo * hi);
  }
  return out;
}

// Prior-shift log-likelihood of a binary target marginal:
//   l(q) = sum_x t(x) log(q post_1(x)/p_1 + (1-q) post_2(x)/p_2).
// Grid search with the given step brackets the maximizer; golden-section
// inside the bracketing cell refines it.
inline double oracle_likelihood_gridsearch(const FiniteJointDistribution& source,
                                           std::span<const double> target_marginal,
                                           double step = 1e-4) {
  const auto p = oracle_priors(source);
  const Table post = oracle_posteriors(source);
  auto loglik = [&](double q) {
    double l = 0.0;
    for (std::size_t x = 0; x < source.num_cells(); ++x) {
      const double t = target_marginal[x];
      if (t == 0.0) continue;
      l += t * std::log(q * post(x, 0) / p[0] + (1.0 - q) * post(x, 1) / p[1]);
    }
    return l;
  };

  double best_q = step;
  double best_l = loglik(best_q);
  for (double q = step; q < 1.0 - step / 2; q += step) {
    const double l = loglik(q);
    if (l > best_l) {
      best_l = l;
      best_q = q;
    }
  }

  double lo = std::max(step / 2, best_q - step);
  double hi = std::min(1.0 - step / 2, best_q + step);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo);
  double b = lo + phi * (hi - lo);
  double fa = loglik(a);
  double fb = loglik(b);
  while (hi - lo > 1e-12) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = loglik(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = loglik(a);
    }
  }
  return (lo + hi) / 2;
}

// ---------------------------------------------------------------------------
// Fixtures and generators
// ---------------------------------------------------------------------------

inline std::vector<std::string> letter_labels(std::size_t n, char base) {
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < n; ++k) labels.push_back(std::string(1, base) + std::to_string(k));
  return labels;
}

inline FiniteJointDistribution make_dist(std::vector<std::vector<double>> rows,
                                         std::vector<std::string> features = {},
                                         std::vector<std::string> classes = {}) {
  const std::size_t m = rows.size();
  const std::size_t d = rows.front().size();
  Table w(m, d, 0.0);
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t i = 0; i < d; ++i) w(x, i) = rows[x][i];
  if (features.empty()) features = letter_labels(m, 'x');
  if (classes.empty()) classes = letter_labels(d, 'c');
  return FiniteJointDistribution(std::move(features), std::move(classes), std::move(w));
}

// The two-cell running example used across the suites.
inline FiniteJointDistribution d1() {
  return make_dist({{0.4, 0.1}, {0.1, 0.4}}, {"a", "b"}, {"1", "2"});
}
inline FiniteJointDistribution d1_prior_shift() {
  return make_dist({{0.56, 0.06}, {0.14, 0.24}}, {"a", "b"}, {"1", "2"});
}
inline FiniteJointDistribution d1_covariate_shift() {
  return make_dist({{0.56, 0.14}, {0.06, 0.24}}, {"a", "b"}, {"1", "2"});
}

// Strictly positive random table; the floor keeps posteriors away from {0,1}
// and density ratios moderate, so 1e-12 entrywise comparisons stay meaningful.
inline FiniteJointDistribution random_distribution(std::mt19937_64& rng, std::size_t m,
                                                   std::size_t d, double floor = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Table w(m, d, 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t i = 0; i < d; ++i) {
      w(x, i) = floor + u(rng);
      total += w(x, i);
    }
  for (double& v : w.data()) v /= total;
  return FiniteJointDistribution(letter_labels(m, 'x'), letter_labels(d, 'c'), std::move(w));
}

inline ClassPriors random_priors(std::mt19937_64& rng, std::size_t d, double floor = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ClassPriors q;
  q.values.resize(d);
  double total = 0.0;
  for (auto& v : q.values) {
    v = floor + u(rng);
    total += v;
  }
  for (auto& v : q.values) v /= total;
  return q;
}

// Random feature density w.r.t. a source distribution: positive values with
// source mean exactly one (up to rounding).
inline FeatureDensity random_density(std::mt19937_64& rng,
                                     const FiniteJointDistribution& source,
                                     double floor = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto feat = oracle_feature_marginal(source);
  FeatureDensity h;
  h.values.resize(source.num_cells());
  double mean = 0.0;
  for (std::size_t x = 0; x < h.values.size(); ++x) {
    h.values[x] = floor + u(rng);
    mean += feat[x] * h.values[x];
  }
  for (auto& v : h.values) v /= mean;
  return h;
}

// Random equivalent pair (same strictly positive support).
inline std::pair<FiniteJointDistribution, FiniteJointDistribution> random_equivalent_pair(
    std::mt19937_64& rng, std::size_t m, std::size_t d) {
  auto p = random_distribution(rng, m, d);
  auto q = random_distribution(rng, m, d);
  return {std::move(p), std::move(q)};
}

inline double max_abs_diff(const Table& a, const Table& b) {
  double worst = 0.0;
  for (std::size_t x = 0; x < a.rows(); ++x)
    for (std::size_t i = 0; i < a.cols(); ++i)
      worst = std::max(worst, std::fabs(a(x, i) - b(x, i)));
  return worst;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::fabs(a[k] - b[k]));
  return worst;
}

}  // namespace testsupport

#endif  // SHIFTKIT_TEST_SUPPORT_HPP
