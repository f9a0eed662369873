#ifndef SHIFTKIT_SELECTION_HPP
#define SHIFTKIT_SELECTION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shiftkit/distribution.hpp"
#include "shiftkit/fjs.hpp"

namespace shiftkit {

// Selection probability per (cell, class). Entries must lie in (0, 1]:
// strictly positive selection keeps population and sample equivalent, so
// every recovery formula stays well-defined.
struct SelectionModel {
  Table phi;
};

// Throws std::invalid_argument when phi has the wrong shape or entries
// outside (0, 1].
void require_selection_model(const FiniteJointDistribution& population,
                             const SelectionModel& sel);

struct SampleDistribution {
  FiniteJointDistribution sample;   // Q[x][i] = P[x][i] phi[x][i] / P[S]
  double selection_probability;     // P[S]
};

// Exact sample distribution induced by thinning the population with phi.
SampleDistribution sample_distribution(const FiniteJointDistribution& population,
                                       const SelectionModel& sel);

struct SimulationResult {
  std::vector<std::uint64_t> counts;  // accepted draws per (cell, class), row-major
  std::uint64_t accepted = 0;
  std::uint64_t attempted = 0;
};

// Monte Carlo thinning: n draws from the population by inversion of one
// uniform stream, each accepted with probability phi via a second uniform.
// Deterministic for a fixed seed. Throws ShiftError{AllRejected} when no draw
// is accepted.
SimulationResult simulate_selection(const FiniteJointDistribution& population,
                                    const SelectionModel& sel, std::uint64_t n,
                                    std::uint64_t seed);

// Population posteriors recovered from sample posteriors. Exactly one of
// rejected_posteriors (mixture route: selected plus not-selected) and
// classwise_selection (ratio route on {P_i[S|cells] > 0}) must be supplied;
// otherwise ShiftError{MissingInput}. Ratio-route cells with a vanishing
// class-wise selection probability come back flagged with zero entries.
PosteriorTable recover_posteriors_hein(std::span<const double> selection_given_features,
                                       const PosteriorTable& sample_posteriors,
                                       const std::optional<PosteriorTable>& rejected_posteriors,
                                       const std::optional<Table>& classwise_selection);

// True iff selection and class labels are independent conditionally on the
// features, which holds exactly when the induced pair is a covariate shift.
bool covariate_selection_check(const FiniteJointDistribution& population,
                               const SelectionModel& sel, double tol = 1e-12);

enum class SelectionMode {
  known_population_priors,  // solve the alpha system given the true priors
  alpha_one,                // fix alpha == 1 and estimate the priors by EM
};

struct SelectionAnalysis {
  std::vector<double> alpha;  // length d-1, alpha_d == 1 by normalization
  ClassPriors population_priors;
  PosteriorTable recovered_population_posteriors;
  Table classwise_selection;      // P_i[S|cells] per (cell, class)
  bool admissible = false;        // every class-wise selection probability <= 1
  bool necessary_bound_ok = false;  // necessary criterion for alpha == 1
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Characterizes a factorizable selection bias: solves the alpha equation
// system (the rho system with the roles of population and sample swapped),
// recovers population posteriors and class-wise selection probabilities, and
// checks admissibility. Throws ShiftError{NotFJS} when the induced pair is
// not factorizable.
SelectionAnalysis analyze_fjs_selection(const FiniteJointDistribution& population,
                                        const SelectionModel& sel, SelectionMode mode,
                                        const SolverOptions& opts = {});

struct NecessaryCriterion {
  std::vector<bool> ok;  // per (cell, class), row-major
  bool all_ok = true;
};

// Necessary bound for factorizable selection bias with alpha == 1: every
// class-wise selection probability is at most
// (q_i / p_i) min_j (p_j / q_j). A violation anywhere rules that case out.
NecessaryCriterion necessary_criterion(const ClassPriors& population_priors,
                                       const ClassPriors& sample_priors,
                                       const Table& classwise_selection);

}  // namespace shiftkit

#endif  // SHIFTKIT_SELECTION_HPP
