#include "shiftkit/distribution.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "shiftkit/errors.hpp"

namespace shiftkit {

namespace {

std::string cell_list(const std::vector<std::size_t>& indices,
                      const std::vector<std::string>& labels) {
  std::ostringstream os;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (k > 0) os << ", ";
    os << labels[indices[k]];
  }
  return os.str();
}

}  // namespace

FiniteJointDistribution::FiniteJointDistribution(std::vector<std::string> feature_labels,
                                                 std::vector<std::string> class_labels,
                                                 Table weights)
    : feature_labels_(std::move(feature_labels)),
      class_labels_(std::move(class_labels)),
      weights_(std::move(weights)) {
  if (feature_labels_.size() != weights_.rows() || class_labels_.size() != weights_.cols()) {
    throw std::invalid_argument("weight table shape does not match label counts");
  }
}

ValidationReport validate(const FiniteJointDistribution& dist) {
  ValidationReport report;
  auto fail = [&report](std::string check, std::string message,
                        std::vector<std::size_t> indices = {}) {
    report.valid = false;
    report.issues.push_back({std::move(check), std::move(message), std::move(indices)});
  };

  const Table& w = dist.weights();
  if (dist.num_cells() < 1) fail("empty feature space", "at least one feature cell required");
  if (dist.num_classes() < 2) fail("too few classes", "at least two classes required");

  {
    std::set<std::string> seen(dist.feature_labels().begin(), dist.feature_labels().end());
    if (seen.size() != dist.feature_labels().size())
      fail("duplicate feature labels", "feature labels must be unique");
  }
  {
    std::set<std::string> seen(dist.class_labels().begin(), dist.class_labels().end());
    if (seen.size() != dist.class_labels().size())
      fail("duplicate class labels", "class labels must be unique");
  }

  std::vector<std::size_t> bad_entries;
  for (std::size_t x = 0; x < w.rows(); ++x)
    for (std::size_t i = 0; i < w.cols(); ++i) {
      const double v = w(x, i);
      if (!(v >= 0.0) || v > 1.0 || !std::isfinite(v)) bad_entries.push_back(x * w.cols() + i);
    }
  if (!bad_entries.empty())
    fail("entry out of range", "weights must lie in [0, 1]", std::move(bad_entries));

  const double total = w.sum();
  if (std::fabs(total - 1.0) > kSumTol) {
    std::ostringstream os;
    os << "weights sum to " << total << ", expected 1";
    fail("not normalized", os.str());
  }

  std::vector<std::size_t> zero_classes;
  const auto priors = w.col_sums();
  for (std::size_t i = 0; i < priors.size(); ++i)
    if (!(priors[i] > 0.0)) zero_classes.push_back(i);
  if (!zero_classes.empty())
    fail("class prior zero",
         "every class must have strictly positive marginal probability",
         std::move(zero_classes));

  return report;
}

void require_priors(const ClassPriors& priors, std::size_t num_classes) {
  if (priors.values.size() != num_classes)
    throw std::invalid_argument("prior vector length does not match class count");
  double total = 0.0;
  for (double v : priors.values) {
    if (!(v > 0.0) || !(v < 1.0))
      throw std::invalid_argument("priors must lie strictly in (0, 1)");
    total += v;
  }
  if (std::fabs(total - 1.0) > kSumTol)
    throw std::invalid_argument("priors must sum to 1");
}

void require_valid(const FiniteJointDistribution& dist) {
  ValidationReport report = validate(dist);
  if (report.valid) return;
  std::ostringstream os;
  os << "invalid distribution:";
  for (const auto& issue : report.issues) os << " [" << issue.check << "]";
  throw ShiftError(errors::kInvalidDistribution, os.str());
}

Decomposition marginals_and_posteriors(const FiniteJointDistribution& dist) {
  require_valid(dist);
  const Table& w = dist.weights();
  const std::size_t m = dist.num_cells();
  const std::size_t d = dist.num_classes();

  Decomposition out;
  out.priors.values = w.col_sums();
  out.feature_marginal = w.row_sums();
  out.posteriors.values = Table(m, d, 0.0);
  out.posteriors.defined.assign(m, true);

  for (std::size_t x = 0; x < m; ++x) {
    const double feat = out.feature_marginal[x];
    if (feat > 0.0) {
      for (std::size_t i = 0; i < d; ++i) out.posteriors.values(x, i) = w(x, i) / feat;
    } else {
      out.posteriors.defined[x] = false;  // null-set cell, row stays zero
    }
  }
  return out;
}

Table class_conditionals(const FiniteJointDistribution& dist) {
  require_valid(dist);
  const Table& w = dist.weights();
  const auto priors = w.col_sums();
  Table cond(w.rows(), w.cols(), 0.0);
  for (std::size_t x = 0; x < w.rows(); ++x)
    for (std::size_t i = 0; i < w.cols(); ++i) cond(x, i) = w(x, i) / priors[i];
  return cond;
}

namespace {

// Shared precondition for all density operations: equal labels and absolute
// continuity of `target` w.r.t. `source` on the joint table.
void require_absolutely_continuous(const FiniteJointDistribution& target,
                                   const FiniteJointDistribution& source) {
  if (!target.same_labels(source))
    throw std::invalid_argument("distributions must share feature and class labels");
  require_valid(source);
  require_valid(target);

  std::vector<std::size_t> offending;
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i)
      if (target.weight(x, i) > 0.0 && source.weight(x, i) == 0.0) offending.push_back(x);
  if (!offending.empty()) {
    throw ShiftError(errors::kAbsoluteContinuityViolation,
                     "target has mass on source-null entries in cells: " +
                         cell_list(offending, source.feature_labels()));
  }
}

}  // namespace

JointDensity density(const FiniteJointDistribution& target,
                     const FiniteJointDistribution& source) {
  require_absolutely_continuous(target, source);
  JointDensity h;
  h.values = Table(source.num_cells(), source.num_classes(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i) {
      const double p = source.weight(x, i);
      if (p > 0.0) h.values(x, i) = target.weight(x, i) / p;
    }
  return h;
}

FeatureDensity feature_density(const FiniteJointDistribution& target,
                               const FiniteJointDistribution& source) {
  require_absolutely_continuous(target, source);
  FeatureDensity h;
  h.values.assign(source.num_cells(), 0.0);
  const auto source_feat = source.weights().row_sums();
  const auto target_feat = target.weights().row_sums();
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    if (source_feat[x] > 0.0) h.values[x] = target_feat[x] / source_feat[x];
  return h;
}

ClassConditionalDensities class_densities(const FiniteJointDistribution& target,
                                          const FiniteJointDistribution& source) {
  require_absolutely_continuous(target, source);
  const auto p = source.weights().col_sums();
  const auto q = target.weights().col_sums();
  ClassConditionalDensities h;
  h.values = Table(source.num_cells(), source.num_classes(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i) {
      const double pc = source.weight(x, i) / p[i];
      if (pc > 0.0) h.values(x, i) = (target.weight(x, i) / q[i]) / pc;
    }
  return h;
}

std::vector<double> generalized_bayes(const FiniteJointDistribution& source,
                                      const JointDensity& f, std::size_t class_index) {
  std::vector<std::size_t> identity(source.num_cells());
  for (std::size_t x = 0; x < identity.size(); ++x) identity[x] = x;
  return generalized_bayes(source, f, class_index, identity);
}

std::vector<double> generalized_bayes(const FiniteJointDistribution& source,
                                      const JointDensity& f, std::size_t class_index,
                                      std::span<const std::size_t> grouping) {
  require_valid(source);
  if (!f.values.same_shape(source.weights()))
    throw std::invalid_argument("density table shape does not match distribution");
  if (class_index >= source.num_classes())
    throw std::invalid_argument("class index out of range");
  if (grouping.size() != source.num_cells())
    throw std::invalid_argument("grouping size does not match cell count");

  std::size_t num_groups = 0;
  for (std::size_t g : grouping) num_groups = std::max(num_groups, g + 1);

  std::vector<double> num(num_groups, 0.0);
  std::vector<double> den(num_groups, 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    const std::size_t g = grouping[x];
    num[g] += source.weight(x, class_index) * f.values(x, class_index);
    for (std::size_t j = 0; j < source.num_classes(); ++j)
      den[g] += source.weight(x, j) * f.values(x, j);
  }

  std::vector<double> result(source.num_cells(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    const std::size_t g = grouping[x];
    if (den[g] > 0.0) result[x] = num[g] / den[g];
  }
  return result;
}

}  // namespace shiftkit
