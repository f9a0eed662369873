#include "shiftkit/fjs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "shiftkit/errors.hpp"

namespace shiftkit {

namespace {

constexpr double kConstancyTol = 1e-12;  // independence detection

void require_feature_density(const FiniteJointDistribution& source, const FeatureDensity& h) {
  if (h.values.size() != source.num_cells())
    throw std::invalid_argument("feature density length does not match cell count");
  const auto feat = source.weights().row_sums();
  double mean = 0.0;
  for (std::size_t x = 0; x < h.values.size(); ++x) {
    if (!(h.values[x] >= 0.0) || !std::isfinite(h.values[x]))
      throw std::invalid_argument("feature density entries must be finite and nonnegative");
    if (feat[x] == 0.0 && h.values[x] != 0.0)
      throw ShiftError(errors::kAbsoluteContinuityViolation,
                       "feature density positive on a source-null cell");
    mean += feat[x] * h.values[x];
  }
  if (std::fabs(mean - 1.0) > kDensityMeanTol) {
    std::ostringstream os;
    os << "feature density has source mean " << mean << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

// Precomputed state of the rho equation system
//   p_j = rho_j E[h post_j / D(rho)],  D = sum_{i<d} rho_i (q_i/p_i) post_i
//                                          + (q_d/p_d) post_d
// over the source support. Weights w[x] = feature_marginal[x] * h[x] are the
// target feature masses, so cells with h == 0 drop out automatically.
class RhoSystem {
 public:
  RhoSystem(const FiniteJointDistribution& source, const FeatureDensity& h,
            const ClassPriors& q)
      : post_(marginals_and_posteriors(source).posteriors.values),
        p_(source.weights().col_sums()),
        q_(q.values) {
    require_feature_density(source, h);
    require_priors(q, source.num_classes());
    const auto feat = source.weights().row_sums();
    w_.resize(source.num_cells());
    for (std::size_t x = 0; x < w_.size(); ++x) w_[x] = feat[x] * h.values[x];
    ratio_.resize(p_.size());
    for (std::size_t i = 0; i < p_.size(); ++i) ratio_[i] = q_[i] / p_[i];
  }

  std::size_t num_cells() const { return w_.size(); }
  std::size_t num_classes() const { return p_.size(); }
  const std::vector<double>& source_priors() const { return p_; }
  const std::vector<double>& target_priors() const { return q_; }
  const Table& posteriors() const { return post_; }

  double denominator(std::size_t x, std::span<const double> rho) const {
    const std::size_t d = num_classes();
    double den = ratio_[d - 1] * post_(x, d - 1);
    for (std::size_t i = 0; i + 1 < d; ++i) den += rho[i] * ratio_[i] * post_(x, i);
    return den;
  }

  // E[h post_j / D(rho)] for every class; only the first d-1 entries enter
  // the system, the last one is implied by normalization.
  std::vector<double> expectations(std::span<const double> rho) const {
    const std::size_t d = num_classes();
    std::vector<double> e(d, 0.0);
    for (std::size_t x = 0; x < num_cells(); ++x) {
      if (w_[x] == 0.0) continue;
      const double den = denominator(x, rho);
      if (den <= 0.0) continue;  // cannot happen on support cells
      for (std::size_t j = 0; j < d; ++j) e[j] += w_[x] * post_(x, j) / den;
    }
    return e;
  }

  double residual(std::span<const double> rho) const {
    const auto e = expectations(rho);
    double r = 0.0;
    for (std::size_t j = 0; j + 1 < num_classes(); ++j)
      r = std::max(r, std::fabs(p_[j] - rho[j] * e[j]));
    return r;
  }

  // Signed residual of the equivalent single-equation form for d == 2,
  // strictly increasing in rho:
  //   f(rho) = E[h (rho R1 - R2) / (rho q R1 + (1-q) R2)].
  double binary_signed(double rho) const {
    const double p1 = p_[0];
    const double p2 = p_[1];
    double f = 0.0;
    for (std::size_t x = 0; x < num_cells(); ++x) {
      if (w_[x] == 0.0) continue;
      const double r1 = post_(x, 0) / p1;
      const double r2 = post_(x, 1) / p2;
      const double den = rho * q_[0] * r1 + q_[1] * r2;
      if (den > 0.0) f += w_[x] * (rho * r1 - r2) / den;
    }
    return f;
  }

  // A posterior column constant across support cells means the class is
  // independent of the features under the source.
  bool has_constant_posterior_column() const {
    for (std::size_t j = 0; j < num_classes(); ++j) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t x = 0; x < num_cells(); ++x) {
        if (feature_mass(x) == 0.0) continue;
        lo = std::min(lo, post_(x, j));
        hi = std::max(hi, post_(x, j));
      }
      if (hi - lo <= kConstancyTol) return true;
    }
    return false;
  }

  double feature_mass(std::size_t x) const {
    // post_ rows on null cells are zero; use them to recognize null cells.
    double s = 0.0;
    for (std::size_t j = 0; j < num_classes(); ++j) s += post_(x, j);
    return s;
  }

  double target_mass(std::size_t x) const { return w_[x]; }

 private:
  std::vector<double> w_;
  Table post_;
  std::vector<double> p_;
  std::vector<double> q_;
  std::vector<double> ratio_;
};

struct BisectResult {
  double rho = 1.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

BisectResult bisect_binary(const RhoSystem& sys, double tol, int max_iter) {
  BisectResult out;

  double lo = 1.0;
  double hi = 1.0;
  int iter = 0;
  while (sys.binary_signed(lo) > 0.0 && lo > 1e-300 && iter < max_iter) {
    lo *= 0.125;
    ++iter;
  }
  while (sys.binary_signed(hi) < 0.0 && hi < 1e200 && iter < max_iter) {
    hi *= 8.0;
    ++iter;
  }

  double best = 1.0;
  double best_res = sys.residual(std::span<const double>(&best, 1));
  if (sys.binary_signed(lo) > 0.0 || sys.binary_signed(hi) < 0.0) {
    // No bracketing interval: no positive root (possible only for degenerate
    // inputs, e.g. all posteriors in {0,1}).
    out.rho = best;
    out.residual = best_res;
    out.iterations = iter;
    out.converged = best_res <= tol;
    return out;
  }

  double mid = std::sqrt(lo * hi);
  while (iter < max_iter) {
    ++iter;
    mid = std::sqrt(lo * hi);
    const double res = sys.residual(std::span<const double>(&mid, 1));
    if (res < best_res) {
      best_res = res;
      best = mid;
    }
    if (res <= tol) break;
    if (hi - lo <= 1e-16 * hi) break;  // interval exhausted
    if (sys.binary_signed(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }

  out.rho = best;
  out.residual = best_res;
  out.iterations = iter;
  out.converged = best_res <= tol;
  return out;
}

}  // namespace

FactorizabilityCheck is_factorizable(const FiniteJointDistribution& source,
                                     const FiniteJointDistribution& target, double tol) {
  const ClassConditionalDensities h = class_densities(target, source);
  const std::size_t m = source.num_cells();
  const std::size_t d = source.num_classes();
  const std::size_t last = d - 1;

  FactorizabilityCheck out;
  out.rho_witness.assign(d - 1, 0.0);

  for (std::size_t j = 0; j + 1 < d; ++j) {
    // Cells where both class-conditional source masses are positive.
    bool have_ratio = false;
    double witness = 0.0;
    std::size_t witness_cell = 0;
    for (std::size_t x = 0; x < m; ++x) {
      if (!(source.weight(x, j) > 0.0) || !(source.weight(x, last) > 0.0)) continue;
      const double hj = h.values(x, j);
      const double hd = h.values(x, last);
      if (hj == 0.0 && hd == 0.0) continue;  // uninformative: 0 = c * 0
      if (hd == 0.0) {
        // hj > 0 with hd == 0 admits no finite positive constant.
        out.factorizable = false;
        out.violation = CellPairWitness{j, x, x};
        return out;
      }
      const double ratio = hj / hd;
      if (!have_ratio) {
        have_ratio = true;
        witness = ratio;
        witness_cell = x;
      } else if (std::fabs(ratio - witness) > tol * std::max(std::fabs(ratio), std::fabs(witness))) {
        out.factorizable = false;
        out.violation = CellPairWitness{j, witness_cell, x};
        return out;
      }
    }
    if (!have_ratio) {
      std::ostringstream os;
      os << "no informative overlap cell for classes " << source.class_labels()[j] << " and "
         << source.class_labels()[last];
      throw ShiftError(errors::kUndetermined, os.str());
    }
    out.rho_witness[j] = witness;
  }

  out.factorizable = true;
  return out;
}

FiniteJointDistribution construct_fjs_target(const FiniteJointDistribution& source,
                                             const FeatureDensity& h, const ClassPriors& q,
                                             std::span<const double> rho,
                                             double consistency_tol) {
  const RhoSystem sys(source, h, q);
  const std::size_t d = source.num_classes();
  if (rho.size() != d - 1) throw std::invalid_argument("rho length must be d - 1");
  for (double r : rho)
    if (!(r > 0.0)) throw std::invalid_argument("rho entries must be strictly positive");

  const double res = sys.residual(rho);
  if (res > consistency_tol) {
    std::ostringstream os;
    os << "equation system residual " << res << " exceeds tolerance " << consistency_tol
       << "; (h, q, rho) not jointly realizable";
    throw ShiftError(errors::kInconsistentInputs, os.str());
  }

  std::vector<double> b(d);
  for (std::size_t i = 0; i + 1 < d; ++i) b[i] = rho[i] * q.values[i] / sys.source_priors()[i];
  b[d - 1] = q.values[d - 1] / sys.source_priors()[d - 1];

  Table weights(source.num_cells(), d, 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    if (sys.target_mass(x) == 0.0) continue;
    const double den = sys.denominator(x, rho);
    const double g = h.values[x] / den;
    for (std::size_t i = 0; i < d; ++i) weights(x, i) = source.weight(x, i) * g * b[i];
  }

  // The exact column sums are q only at a root of the system; normalize away
  // the residual-scale drift so the table invariants hold exactly.
  const double total = weights.sum();
  for (double& v : weights.data()) v /= total;

  return FiniteJointDistribution(source.feature_labels(), source.class_labels(),
                                 std::move(weights));
}

FjsCharacterization solve_rho(const FiniteJointDistribution& source, const FeatureDensity& h,
                              const ClassPriors& q, const SolverOptions& opts) {
  const RhoSystem sys(source, h, q);
  const std::size_t d = source.num_classes();

  FjsCharacterization out;
  out.target_priors = q;
  out.rho.assign(d - 1, 1.0);
  out.degenerate = sys.has_constant_posterior_column();

  if (d == 2) {
    const BisectResult r = bisect_binary(sys, opts.tol, opts.max_iter);
    out.rho[0] = r.rho;
    out.residual = r.residual;
    out.iterations = r.iterations;
    out.converged = r.converged;
  } else {
    double lambda = opts.damping;
    double prev_residual = std::numeric_limits<double>::infinity();
    std::vector<double> best = out.rho;
    double best_res = sys.residual(out.rho);
    int iter = 0;
    bool stuck = false;
    while (iter < opts.max_iter) {
      ++iter;
      const auto e = sys.expectations(out.rho);
      double res = 0.0;
      for (std::size_t j = 0; j + 1 < d; ++j)
        res = std::max(res, std::fabs(sys.source_priors()[j] - out.rho[j] * e[j]));
      if (res < best_res) {
        best_res = res;
        best = out.rho;
      }
      if (res <= opts.tol) break;
      if (res > prev_residual) lambda *= 0.5;  // oscillation: damp
      prev_residual = res;
      for (std::size_t j = 0; j + 1 < d; ++j) {
        if (e[j] <= 0.0) {
          stuck = true;  // class j unreachable under the target marginal
          break;
        }
        const double target = sys.source_priors()[j] / e[j];
        out.rho[j] = (1.0 - lambda) * out.rho[j] + lambda * target;
      }
      if (stuck) break;
    }
    out.rho = best;
    out.residual = best_res;
    out.iterations = iter;
    out.converged = !stuck && best_res <= opts.tol;
  }

  // Canonical (g, b) at the returned rho.
  std::vector<double> b(d);
  for (std::size_t i = 0; i + 1 < d; ++i) b[i] = out.rho[i] * q.values[i] / sys.source_priors()[i];
  b[d - 1] = q.values[d - 1] / sys.source_priors()[d - 1];
  std::vector<double> g(source.num_cells(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    if (sys.target_mass(x) == 0.0) continue;
    g[x] = h.values[x] / sys.denominator(x, out.rho);
  }
  out.g = std::move(g);
  out.b = std::move(b);
  return out;
}

PosteriorTable correct_posteriors_fjs(const PosteriorTable& source_posteriors,
                                      const ClassPriors& source_priors,
                                      const ClassPriors& target_priors,
                                      std::span<const double> rho) {
  const std::size_t m = source_posteriors.values.rows();
  const std::size_t d = source_posteriors.values.cols();
  if (source_priors.values.size() != d || target_priors.values.size() != d)
    throw std::invalid_argument("prior length does not match posterior table");
  if (rho.size() != d - 1) throw std::invalid_argument("rho length must be d - 1");
  for (double r : rho)
    if (!(r > 0.0)) throw std::invalid_argument("rho entries must be strictly positive");

  PosteriorTable out;
  out.values = Table(m, d, 0.0);
  out.defined.assign(m, false);

  for (std::size_t x = 0; x < m; ++x) {
    if (!source_posteriors.defined[x]) continue;
    double denom = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double scale = (i + 1 < d) ? rho[i] : 1.0;
      denom += scale * (target_priors.values[i] / source_priors.values[i]) *
               source_posteriors.values(x, i);
    }
    if (denom > 0.0) {
      out.defined[x] = true;
      for (std::size_t i = 0; i < d; ++i) {
        const double scale = (i + 1 < d) ? rho[i] : 1.0;
        out.values(x, i) = scale * (target_priors.values[i] / source_priors.values[i]) *
                           source_posteriors.values(x, i) / denom;
      }
    }
  }
  return out;
}

PriorEstimate estimate_priors_em(const PosteriorTable& source_posteriors,
                                 const ClassPriors& source_priors,
                                 std::span<const double> target_marginal,
                                 const SolverOptions& opts) {
  const std::size_t m = source_posteriors.values.rows();
  const std::size_t d = source_posteriors.values.cols();
  require_priors(source_priors, d);
  if (target_marginal.size() != m)
    throw std::invalid_argument("target marginal length does not match cell count");
  double total = 0.0;
  for (std::size_t x = 0; x < m; ++x) {
    const double t = target_marginal[x];
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("target marginal entries must be finite and nonnegative");
    if (t > 0.0 && !source_posteriors.defined[x])
      throw ShiftError(errors::kAbsoluteContinuityViolation,
                       "target marginal positive on a cell with undefined source posteriors");
    total += t;
  }
  if (std::fabs(total - 1.0) > kSumTol)
    throw std::invalid_argument("target marginal must sum to 1");

  PriorEstimate out;
  out.priors = source_priors;
  std::vector<double>& q = out.priors.values;
  const std::vector<double>& p = source_priors.values;

  std::vector<double> next(d, 0.0);
  int iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  while (iter < opts.max_iter) {
    ++iter;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < m; ++x) {
      const double t = target_marginal[x];
      if (t == 0.0) continue;
      double den = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        den += (q[i] / p[i]) * source_posteriors.values(x, i);
      if (den <= 0.0) continue;
      for (std::size_t i = 0; i < d; ++i)
        next[i] += t * (q[i] / p[i]) * source_posteriors.values(x, i) / den;
    }
    gap = 0.0;
    for (std::size_t i = 0; i < d; ++i) gap = std::max(gap, std::fabs(next[i] - q[i]));
    q = next;
    if (gap <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = iter;

  for (double v : q)
    if (v < 1e-12) out.boundary_collapse = true;

  // Residual of the rho == 1 equation system at the estimate.
  double res = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double e = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      const double t = target_marginal[x];
      if (t == 0.0) continue;
      double den = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        den += (q[i] / p[i]) * source_posteriors.values(x, i);
      if (den > 0.0) e += t * source_posteriors.values(x, j) / den;
    }
    res = std::max(res, std::fabs(p[j] - e));
  }
  out.residual = res;
  return out;
}

PhiCurve binary_phi(const FiniteJointDistribution& source, const FeatureDensity& h,
                    std::span<const double> q_grid) {
  require_valid(source);
  if (source.num_classes() != 2)
    throw ShiftError(errors::kNotBinary, "phi curve is defined for two classes only");
  require_feature_density(source, h);

  const Decomposition dec = marginals_and_posteriors(source);
  const double p = dec.priors.values[0];
  double post_lo = std::numeric_limits<double>::infinity();
  double post_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    if (!dec.posteriors.defined[x]) continue;
    const double v = dec.posteriors.values(x, 0);
    if (v <= 0.0 || v >= 1.0)
      throw ShiftError(errors::kPreconditionFailed,
                       "source posterior must lie strictly in (0, 1) on every support cell");
    post_lo = std::min(post_lo, v);
    post_hi = std::max(post_hi, v);
  }

  PhiCurve out;
  out.nonunique = (post_hi - post_lo) <= kConstancyTol;

  for (double q : q_grid) {
    if (!(q > 0.0) || !(q < 1.0))
      throw std::invalid_argument("phi grid values must lie strictly in (0, 1)");
    ClassPriors priors{{q, 1.0 - q}};
    const RhoSystem sys(source, h, priors);
    const BisectResult r = bisect_binary(sys, 1e-14, 10000);
    out.points.push_back({q, r.rho, r.residual});
  }

  // Closed-form limits; expectations of h-weighted posterior odds.
  double odds = 0.0;          // E[h post / (1 - post)]
  double inverse_odds = 0.0;  // E[h (1 - post) / post]
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    if (!dec.posteriors.defined[x] || h.values[x] == 0.0) continue;
    const double v = dec.posteriors.values(x, 0);
    const double mass = dec.feature_marginal[x] * h.values[x];
    odds += mass * v / (1.0 - v);
    inverse_odds += mass * (1.0 - v) / v;
  }
  out.limit_q_to_0 = p / ((1.0 - p) * odds);
  out.limit_q_to_1 = p / (1.0 - p) * inverse_odds;
  return out;
}

}  // namespace shiftkit
