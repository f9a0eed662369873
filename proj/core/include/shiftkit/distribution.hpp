#ifndef SHIFTKIT_DISTRIBUTION_HPP
#define SHIFTKIT_DISTRIBUTION_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shiftkit/table.hpp"

namespace shiftkit {

// Structural tolerances. Weight-sum and posterior-row checks are exact up to
// accumulated rounding (1e-12); density mean checks get an extra decade
// because densities are ratios of sums.
inline constexpr double kSumTol = 1e-12;
inline constexpr double kDensityMeanTol = 1e-10;

// Exact joint probability table over (feature cell, class). Feature cells are
// the atoms of the feature information set; the table itself plays the role of
// the joint information set. Cells with zero feature marginal are legal and
// stay in the table; downstream operations flag and skip them.
class FiniteJointDistribution {
 public:
  // Throws std::invalid_argument if label counts do not match the weight
  // table shape. Value-level invariants (normalization, positive class
  // marginals) are checked by validate(), not here, so that invalid tables
  // can be loaded and reported on.
  FiniteJointDistribution(std::vector<std::string> feature_labels,
                          std::vector<std::string> class_labels, Table weights);

  const std::vector<std::string>& feature_labels() const { return feature_labels_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  const Table& weights() const { return weights_; }

  std::size_t num_cells() const { return weights_.rows(); }
  std::size_t num_classes() const { return weights_.cols(); }

  double weight(std::size_t cell, std::size_t cls) const { return weights_(cell, cls); }

  bool same_labels(const FiniteJointDistribution& other) const {
    return feature_labels_ == other.feature_labels_ && class_labels_ == other.class_labels_;
  }

 private:
  std::vector<std::string> feature_labels_;
  std::vector<std::string> class_labels_;
  Table weights_;
};

// Strictly positive class priors summing to one.
struct ClassPriors {
  std::vector<double> values;
};

// Density of a target distribution w.r.t. a source on the feature cells.
// E_source[h] = 1; zero wherever the source feature marginal is zero.
struct FeatureDensity {
  std::vector<double> values;
};

// Column i is the density of the target class-i conditional feature
// distribution w.r.t. the source one, on the support of the source
// conditional.
struct ClassConditionalDensities {
  Table values;
};

// Density of the target w.r.t. the source on the joint table.
struct JointDensity {
  Table values;
};

struct ValidationIssue {
  std::string check;    // stable identifier, e.g. "not normalized"
  std::string message;  // human-readable detail
  std::vector<std::size_t> indices;
};

struct ValidationReport {
  bool valid = true;
  std::vector<ValidationIssue> issues;
};

// Posterior class probabilities per cell. Rows on support sum to one;
// cells where the conditioning event has probability zero are undefined
// (defined[x] == false) and carry an all-zero row.
struct PosteriorTable {
  Table values;
  std::vector<bool> defined;
};

struct Decomposition {
  ClassPriors priors;
  std::vector<double> feature_marginal;
  PosteriorTable posteriors;
};

// Report-style validation: normalization, entries in [0,1], strictly positive
// class marginals, d >= 2, m >= 1, unique labels.
ValidationReport validate(const FiniteJointDistribution& dist);

// Throws std::invalid_argument unless the vector has num_classes entries,
// all strictly inside (0, 1), summing to 1.
void require_priors(const ClassPriors& priors, std::size_t num_classes);

// Throws ShiftError{InvalidDistribution} when validate() fails. Called at the
// entry of every operation whose precondition is a valid table.
void require_valid(const FiniteJointDistribution& dist);

// Class priors, feature marginal and posterior table of a valid distribution.
Decomposition marginals_and_posteriors(const FiniteJointDistribution& dist);

// m x d table whose column i is the class-i conditional feature distribution.
Table class_conditionals(const FiniteJointDistribution& dist);

// Densities of `target` w.r.t. `source`. All three require equal labels and
// absolute continuity on the joint table (target mass on a source-null entry
// throws ShiftError{AbsoluteContinuityViolation}); 0/0 entries resolve to 0.
JointDensity density(const FiniteJointDistribution& target,
                     const FiniteJointDistribution& source);
FeatureDensity feature_density(const FiniteJointDistribution& target,
                               const FiniteJointDistribution& source);
ClassConditionalDensities class_densities(const FiniteJointDistribution& target,
                                          const FiniteJointDistribution& source);

// Generalized Bayes: E_source[f 1_{class}|cells] / E_source[f|cells] per cell,
// zero where the denominator vanishes. The overload taking `grouping` (one
// group id per cell) conditions on the coarser partition generated by the
// groups instead of the cells; the result is then constant within each group.
std::vector<double> generalized_bayes(const FiniteJointDistribution& source,
                                      const JointDensity& f, std::size_t class_index);
std::vector<double> generalized_bayes(const FiniteJointDistribution& source,
                                      const JointDensity& f, std::size_t class_index,
                                      std::span<const std::size_t> grouping);

}  // namespace shiftkit

#endif  // SHIFTKIT_DISTRIBUTION_HPP
