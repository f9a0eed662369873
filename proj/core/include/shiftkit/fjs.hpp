#ifndef SHIFTKIT_FJS_HPP
#define SHIFTKIT_FJS_HPP

#include <cstddef>
#include <optional>
#include <span>

#include "shiftkit/distribution.hpp"

namespace shiftkit {

struct SolverOptions {
  double tol = 1e-12;   // max absolute residual of the equation system
  int max_iter = 10000;
  double damping = 1.0;  // halved whenever the residual fails to decrease
};

// Full characterization of a factorizable joint shift between a source
// distribution and a target described by (feature density h, priors q).
// Scale normalization: rho_d == 1 and b_d == q_d / p_d; g carries the
// feature-only factor, b the class-only factor, and g*b is a joint density
// w.r.t. the source when the system is solved.
struct FjsCharacterization {
  ClassPriors target_priors;   // q
  std::vector<double> rho;     // length d-1, strictly positive
  std::vector<double> g;       // length m
  std::vector<double> b;       // length d
  double residual = 0.0;       // max_j |p_j - rho_j E[h post_j / D]|
  int iterations = 0;
  bool converged = false;
  // A class posterior column is constant on the support: the class is
  // independent of the features under the source, and uniqueness of rho is
  // not guaranteed.
  bool degenerate = false;
};

struct CellPairWitness {
  std::size_t class_index;  // class j whose density ratio is not constant
  std::size_t cell_a;
  std::size_t cell_b;
};

struct FactorizabilityCheck {
  bool factorizable = false;
  std::vector<double> rho_witness;  // the constant ratios, when factorizable
  std::optional<CellPairWitness> violation;
};

// True iff for every class j < d the ratio h_j / h_d of class-conditional
// densities is constant (within relative tol) across cells where both source
// class-conditional masses are positive. The constant is the rho_j witness.
// Throws ShiftError{Undetermined} when some class pair has no informative
// overlap cell.
FactorizabilityCheck is_factorizable(const FiniteJointDistribution& source,
                                     const FiniteJointDistribution& target, double tol);

// Builds the joint table with feature density h and priors q from a solved
// rho vector. Throws ShiftError{InconsistentInputs} when rho does not solve
// the equation system for (source, h, q) within consistency_tol.
FiniteJointDistribution construct_fjs_target(const FiniteJointDistribution& source,
                                             const FeatureDensity& h, const ClassPriors& q,
                                             std::span<const double> rho,
                                             double consistency_tol = 1e-8);

// Solves the rho equation system for given target priors. Binary case:
// bisection on the monotone residual; d >= 3: damped fixed point
// rho_j <- (1-l) rho_j + l p_j / E[h post_j / D(rho)] started at rho == 1.
// Non-convergence is reported through the diagnostics, never hidden.
FjsCharacterization solve_rho(const FiniteJointDistribution& source, const FeatureDensity& h,
                              const ClassPriors& q, const SolverOptions& opts = {});

// Posterior correction specialized to factorizable joint shift: prior-ratio
// weights scaled by rho (with rho_d == 1). Collapses to the prior-shift
// correction when rho == 1.
PosteriorTable correct_posteriors_fjs(const PosteriorTable& source_posteriors,
                                      const ClassPriors& source_priors,
                                      const ClassPriors& target_priors,
                                      std::span<const double> rho);

struct PriorEstimate {
  ClassPriors priors;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;        // max_j |p_j - E_target[post_j / D]| (rho == 1 system)
  bool boundary_collapse = false;  // some estimated prior fell below 1e-12
};

// EM estimation of target priors from source posteriors and the target
// feature marginal (maximum likelihood under the prior-shift assumption,
// i.e. the rho == 1 equation system). Starts at q = p.
PriorEstimate estimate_priors_em(const PosteriorTable& source_posteriors,
                                 const ClassPriors& source_priors,
                                 std::span<const double> target_marginal,
                                 const SolverOptions& opts = {});

struct PhiPoint {
  double q = 0.0;
  double rho = 0.0;
  double residual = 0.0;
};

struct PhiCurve {
  std::vector<PhiPoint> points;
  double limit_q_to_0 = 0.0;
  double limit_q_to_1 = 0.0;
  // The positive-class posterior is constant under the source: the solution
  // map is not guaranteed unique.
  bool nonunique = false;
};

// Binary-only map q -> rho(q) for a fixed feature density h, evaluated on a
// grid, plus the closed-form limits at q -> 0 and q -> 1. Requires every
// support cell to have source posterior strictly inside (0, 1); throws
// ShiftError{PreconditionFailed} otherwise and ShiftError{NotBinary} for
// d != 2.
PhiCurve binary_phi(const FiniteJointDistribution& source, const FeatureDensity& h,
                    std::span<const double> q_grid);

}  // namespace shiftkit

#endif  // SHIFTKIT_FJS_HPP
