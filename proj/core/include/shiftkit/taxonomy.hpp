#ifndef SHIFTKIT_TAXONOMY_HPP
#define SHIFTKIT_TAXONOMY_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftkit/distribution.hpp"

namespace shiftkit {

// Default relative tolerance for probability comparisons in shift checks.
inline constexpr double kCheckTol = 1e-9;

// Deterministic mapping from feature cells to representation values: the
// groups are the atoms of the sigma-algebra generated by the transformation.
struct RepresentationMap {
  std::vector<std::string> group_of_cell;  // length m, every cell mapped

  // Group ids as dense indices 0..G-1 in order of first appearance.
  std::vector<std::size_t> group_indices() const;
};

// Target with the same class-conditional feature distributions as the source
// and priors q.
FiniteJointDistribution make_prior_shift(const FiniteJointDistribution& source,
                                         const ClassPriors& target_priors);

// Target with the same posterior class probabilities as the source and
// feature marginal target_marginal. The marginal must be a probability vector
// absolutely continuous w.r.t. the source feature marginal.
FiniteJointDistribution make_covariate_shift(const FiniteJointDistribution& source,
                                             std::span<const double> target_marginal);

struct CspdCheck {
  bool holds = false;
  // Cells violating comonotonicity or tie preservation, when not holding.
  std::optional<std::pair<std::size_t, std::size_t>> violation;
  bool tie_violation = false;  // violation is an order reversal otherwise
};

// Covariate shift with posterior drift (binary): the positive-class
// posteriors of source and target are comonotone across target-support cells,
// and equal source posteriors imply equal target posteriors. Throws
// ShiftError{NotBinary} for d != 2.
CspdCheck check_cspd(const FiniteJointDistribution& source,
                     const FiniteJointDistribution& target, double tol = kCheckTol);

// Class-conditional densities computed through the CSPD posterior link
// (feature density times posterior ratio, scaled by the inverse prior ratio).
// Throws ShiftError{PreconditionFailed} when check_cspd fails.
ClassConditionalDensities cspd_class_densities(const FiniteJointDistribution& source,
                                               const FiniteJointDistribution& target,
                                               double tol = kCheckTol);

struct GroupCheckWitness {
  std::string group;
  std::string cls;
  std::string detail;
};

struct GroupCheck {
  bool holds = false;
  bool group_invariant = false;    // group-level invariance condition
  bool sufficient_source = false;  // posteriors constant per group under source
  bool sufficient_target = false;  // posteriors constant per group under target
  std::optional<GroupCheckWitness> witness;
};

// Generalised label shift: group-conditional class distributions invariant
// (Q[G|A_i] = P[G|A_i]) plus sufficiency of the representation under both
// measures.
GroupCheck check_gls(const FiniteJointDistribution& source,
                     const FiniteJointDistribution& target, const RepresentationMap& map,
                     double tol = kCheckTol);

struct GlsFactors {
  std::vector<double> g;  // feature factor, h / gamma
  std::vector<double> b;  // class factor, prior ratios
};

// Factorization of a GLS pair into (g, b) with b_i = q_i/p_i and g = h/gamma.
// Throws ShiftError{NotGroupInvariant} or ShiftError{NotSufficient} when the
// GLS check fails, and ShiftError{InconsistentInputs} if the product fails to
// reproduce the joint density within 1e-10.
GlsFactors gls_factorize(const FiniteJointDistribution& source,
                         const FiniteJointDistribution& target, const RepresentationMap& map,
                         double tol = kCheckTol);

// Domain invariance: source and target agree on every (group x class) mass
// and the representation is sufficient under both measures. Strictly stronger
// than covariate shift on the cells; when it holds, posterior invariance is
// asserted.
GroupCheck check_domain_invariance(const FiniteJointDistribution& source,
                                   const FiniteJointDistribution& target,
                                   const RepresentationMap& map, double tol = kCheckTol);

// Classification of a (source, target) pair into the shift taxonomy. Flags
// record which defining invariances hold; the types overlap by design (e.g.
// any prior shift is factorizable), and the implication closure
// prior/covariate/gls => fjs and fjs => cspd (binary) is applied to the
// flags.
struct ShiftReport {
  bool no_shift = false;
  bool prior_shift = false;
  bool covariate_shift = false;
  bool fjs = false;
  std::vector<double> fjs_rho;  // witness when fjs is set
  std::optional<bool> cspd;     // binary pairs only
  std::optional<bool> gls;      // only when a representation map is supplied
  std::optional<bool> domain_invariance;
  double tolerance = kCheckTol;
  std::vector<std::string> notes;  // witnesses and counterexamples, one line each
};

ShiftReport classify(const FiniteJointDistribution& source,
                     const FiniteJointDistribution& target,
                     const std::optional<RepresentationMap>& map = std::nullopt,
                     double tol = kCheckTol);

}  // namespace shiftkit

#endif  // SHIFTKIT_TAXONOMY_HPP
