#ifndef SHIFTKIT_NORMAL_FORM_HPP
#define SHIFTKIT_NORMAL_FORM_HPP

#include "shiftkit/distribution.hpp"

namespace shiftkit {

// Normal form of the joint density of `target` w.r.t. `source`: per-class
// conditional feature densities h_i together with the prior ratios
// q_i / p_i. The joint density factors entrywise as h_i(x) * (q_i / p_i).
struct NormalForm {
  ClassConditionalDensities class_densities;
  std::vector<double> prior_ratios;
};

NormalForm normal_form(const FiniteJointDistribution& source,
                       const FiniteJointDistribution& target);

// Posterior correction formula: maps source posteriors to target posteriors
// through class densities and both prior vectors. Cells whose corrected
// denominator vanishes are target-null and come back flagged (defined=false).
PosteriorTable correct_posteriors(const PosteriorTable& source_posteriors,
                                  const ClassPriors& source_priors,
                                  const ClassPriors& target_priors,
                                  const ClassConditionalDensities& class_densities);

// Alternative representation of the joint density: feature density times the
// per-class posterior ratio. Throws ShiftError{ImplicationViolation} if the
// target posterior is positive where the source posterior vanishes on a cell
// with positive feature density (impossible for absolutely continuous pairs;
// the guard documents the convention).
JointDensity alternative_density(const FiniteJointDistribution& source,
                                 const FiniteJointDistribution& target);

// Reverse view of an equivalent pair: density of `source` w.r.t. `target`
// (the entrywise reciprocal of the forward density) and the source posteriors
// reconstructed from target posteriors. Requires the forward joint density to
// be strictly positive on the source support; throws
// ShiftError{NotEquivalent} otherwise. The positivity test is exact, not
// tolerance-based.
struct ReverseView {
  JointDensity source_over_target;
  PosteriorTable source_posteriors;
};

ReverseView reverse(const FiniteJointDistribution& source,
                    const FiniteJointDistribution& target);

}  // namespace shiftkit

#endif  // SHIFTKIT_NORMAL_FORM_HPP
