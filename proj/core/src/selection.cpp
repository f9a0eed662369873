#include "shiftkit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "shiftkit/errors.hpp"

namespace shiftkit {

namespace {

constexpr double kAdmissibilityTol = 1e-12;   // slack above 1 for <= 100% checks
constexpr double kFactorizabilityTol = 1e-9;  // FJS membership test

// 53-bit uniform in [0, 1) from one engine output; keeps the stream layout
// (one draw for the cell/class, one for acceptance) explicit and portable.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void require_selection_model(const FiniteJointDistribution& population,
                             const SelectionModel& sel) {
  if (!sel.phi.same_shape(population.weights()))
    throw std::invalid_argument("selection table shape does not match distribution");
  for (double v : sel.phi.data())
    if (!(v > 0.0) || !(v <= 1.0))
      throw std::invalid_argument("selection probabilities must lie in (0, 1]");
}

SampleDistribution sample_distribution(const FiniteJointDistribution& population,
                                       const SelectionModel& sel) {
  require_valid(population);
  require_selection_model(population, sel);

  Table w(population.num_cells(), population.num_classes(), 0.0);
  double p_s = 0.0;
  for (std::size_t x = 0; x < w.rows(); ++x)
    for (std::size_t i = 0; i < w.cols(); ++i) {
      w(x, i) = population.weight(x, i) * sel.phi(x, i);
      p_s += w(x, i);
    }
  for (double& v : w.data()) v /= p_s;

  return {FiniteJointDistribution(population.feature_labels(), population.class_labels(),
                                  std::move(w)),
          p_s};
}

SimulationResult simulate_selection(const FiniteJointDistribution& population,
                                    const SelectionModel& sel, std::uint64_t n,
                                    std::uint64_t seed) {
  require_valid(population);
  require_selection_model(population, sel);
  if (n < 1) throw std::invalid_argument("draw count must be at least 1");

  const std::size_t entries = population.num_cells() * population.num_classes();
  std::vector<double> cdf(entries);
  double acc = 0.0;
  for (std::size_t k = 0; k < entries; ++k) {
    acc += population.weights().data()[k];
    cdf[k] = acc;
  }
  cdf.back() = 1.0;

  SimulationResult out;
  out.counts.assign(entries, 0);
  out.attempted = n;

  std::mt19937_64 rng(seed);
  for (std::uint64_t draw = 0; draw < n; ++draw) {
    const double u = uniform01(rng);
    const std::size_t k =
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    const double accept = uniform01(rng);
    if (accept <= sel.phi.data()[k]) {
      ++out.counts[k];
      ++out.accepted;
    }
  }

  if (out.accepted == 0)
    throw ShiftError(errors::kAllRejected,
                     "no draw was accepted; increase n or check the selection table");
  return out;
}

PosteriorTable recover_posteriors_hein(std::span<const double> selection_given_features,
                                       const PosteriorTable& sample_posteriors,
                                       const std::optional<PosteriorTable>& rejected_posteriors,
                                       const std::optional<Table>& classwise_selection) {
  const std::size_t m = sample_posteriors.values.rows();
  const std::size_t d = sample_posteriors.values.cols();
  if (selection_given_features.size() != m)
    throw std::invalid_argument("selection-given-features length does not match cell count");
  for (double s : selection_given_features)
    if (!(s >= 0.0) || !(s <= 1.0))
      throw std::invalid_argument("selection-given-features entries must lie in [0, 1]");
  if (rejected_posteriors.has_value() == classwise_selection.has_value())
    throw ShiftError(errors::kMissingInput,
                     "supply exactly one of rejected posteriors and class-wise selection");

  PosteriorTable out;
  out.values = Table(m, d, 0.0);
  out.defined.assign(m, false);

  if (rejected_posteriors) {
    // Mixture of selected and not-selected posteriors.
    if (!rejected_posteriors->values.same_shape(sample_posteriors.values))
      throw std::invalid_argument("rejected posterior shape mismatch");
    for (std::size_t x = 0; x < m; ++x) {
      if (!sample_posteriors.defined[x]) continue;
      const double s = selection_given_features[x];
      if (s < 1.0 && !rejected_posteriors->defined[x]) continue;
      out.defined[x] = true;
      for (std::size_t i = 0; i < d; ++i) {
        double v = sample_posteriors.values(x, i) * s;
        if (s < 1.0) v += rejected_posteriors->values(x, i) * (1.0 - s);
        out.values(x, i) = v;
      }
    }
  } else {
    // Ratio route on cells where the class-wise selection probability is
    // positive; 0/0 resolves to 0, a genuine division by zero flags the cell.
    if (!classwise_selection->same_shape(sample_posteriors.values))
      throw std::invalid_argument("class-wise selection shape mismatch");
    for (std::size_t x = 0; x < m; ++x) {
      if (!sample_posteriors.defined[x]) continue;
      out.defined[x] = true;
      for (std::size_t i = 0; i < d; ++i) {
        const double qpost = sample_posteriors.values(x, i);
        const double cs = (*classwise_selection)(x, i);
        if (qpost == 0.0) continue;
        if (cs > 0.0) {
          out.values(x, i) = selection_given_features[x] / cs * qpost;
        } else {
          out.defined[x] = false;  // DivisionByZeroCell: flagged, entries stay 0
        }
      }
    }
  }
  return out;
}

bool covariate_selection_check(const FiniteJointDistribution& population,
                               const SelectionModel& sel, double tol) {
  require_valid(population);
  require_selection_model(population, sel);
  const auto feat = population.weights().row_sums();
  for (std::size_t x = 0; x < population.num_cells(); ++x) {
    if (feat[x] == 0.0) continue;
    double s_given_h = 0.0;
    for (std::size_t j = 0; j < population.num_classes(); ++j)
      s_given_h += population.weight(x, j) * sel.phi(x, j) / feat[x];
    for (std::size_t i = 0; i < population.num_classes(); ++i) {
      const double joint = population.weight(x, i) * sel.phi(x, i) / feat[x];
      const double product = s_given_h * population.weight(x, i) / feat[x];
      if (std::fabs(joint - product) > tol) return false;
    }
  }
  return true;
}

SelectionAnalysis analyze_fjs_selection(const FiniteJointDistribution& population,
                                        const SelectionModel& sel, SelectionMode mode,
                                        const SolverOptions& opts) {
  const SampleDistribution sample = sample_distribution(population, sel);
  const FiniteJointDistribution& q_dist = sample.sample;

  const FactorizabilityCheck fc = is_factorizable(population, q_dist, kFactorizabilityTol);
  if (!fc.factorizable) {
    std::ostringstream os;
    os << "induced sample distribution is not a factorizable joint shift";
    if (fc.violation)
      os << " (density ratio for class "
         << population.class_labels()[fc.violation->class_index] << " differs between cells "
         << population.feature_labels()[fc.violation->cell_a] << " and "
         << population.feature_labels()[fc.violation->cell_b] << ")";
    throw ShiftError(errors::kNotFJS, os.str());
  }

  const std::size_t d = population.num_classes();
  const Decomposition q_dec = marginals_and_posteriors(q_dist);
  const ClassPriors sample_priors = q_dec.priors;

  SelectionAnalysis out;
  if (mode == SelectionMode::known_population_priors) {
    // The alpha system is the rho system with population and sample swapped:
    // reference measure Q, target described by the population marginal
    // density and the known population priors.
    const FeatureDensity reverse_density = feature_density(population, q_dist);
    ClassPriors population_priors{population.weights().col_sums()};
    const FjsCharacterization sol = solve_rho(q_dist, reverse_density, population_priors, opts);
    out.alpha = sol.rho;
    out.population_priors = population_priors;
    out.residual = sol.residual;
    out.iterations = sol.iterations;
    out.converged = sol.converged;
  } else {
    // alpha == 1: maximum likelihood estimation of the population priors from
    // the sample posteriors and the population feature marginal.
    const auto population_marginal = population.weights().row_sums();
    const PriorEstimate est =
        estimate_priors_em(q_dec.posteriors, sample_priors, population_marginal, opts);
    out.alpha.assign(d - 1, 1.0);
    out.population_priors = est.priors;
    out.residual = est.residual;
    out.iterations = est.iterations;
    out.converged = est.converged;
  }

  out.recovered_population_posteriors =
      correct_posteriors_fjs(q_dec.posteriors, sample_priors, out.population_priors, out.alpha);

  // Class-wise feature-conditional selection probabilities, with
  // P[S|cells] computed exactly from the selection table.
  const auto feat = population.weights().row_sums();
  out.classwise_selection = Table(population.num_cells(), d, 0.0);
  out.admissible = true;
  for (std::size_t x = 0; x < population.num_cells(); ++x) {
    if (feat[x] == 0.0) continue;
    double s_given_h = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      s_given_h += population.weight(x, j) * sel.phi(x, j) / feat[x];
    double denom = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double alpha_j = (j + 1 < d) ? out.alpha[j] : 1.0;
      denom += alpha_j * (out.population_priors.values[j] / sample_priors.values[j]) *
               q_dec.posteriors.values(x, j);
    }
    for (std::size_t i = 0; i < d; ++i) {
      const double alpha_i = (i + 1 < d) ? out.alpha[i] : 1.0;
      const double cs = sample_priors.values[i] /
                        (alpha_i * out.population_priors.values[i]) * s_given_h * denom;
      out.classwise_selection(x, i) = cs;
      if (cs > 1.0 + kAdmissibilityTol) out.admissible = false;
    }
  }

  out.necessary_bound_ok =
      necessary_criterion(out.population_priors, sample_priors, out.classwise_selection).all_ok;
  return out;
}

NecessaryCriterion necessary_criterion(const ClassPriors& population_priors,
                                       const ClassPriors& sample_priors,
                                       const Table& classwise_selection) {
  const std::size_t d = population_priors.values.size();
  require_priors(population_priors, d);
  require_priors(sample_priors, d);
  if (classwise_selection.cols() != d)
    throw std::invalid_argument("class-wise selection table has wrong class count");

  double min_ratio = population_priors.values[0] / sample_priors.values[0];
  for (std::size_t j = 1; j < d; ++j)
    min_ratio = std::min(min_ratio, population_priors.values[j] / sample_priors.values[j]);

  NecessaryCriterion out;
  out.ok.assign(classwise_selection.rows() * d, true);
  for (std::size_t x = 0; x < classwise_selection.rows(); ++x)
    for (std::size_t i = 0; i < d; ++i) {
      const double bound =
          sample_priors.values[i] / population_priors.values[i] * min_ratio;
      if (classwise_selection(x, i) > bound + kAdmissibilityTol) {
        out.ok[x * d + i] = false;
        out.all_ok = false;
      }
    }
  return out;
}

}  // namespace shiftkit
