#include "shiftkit/normal_form.hpp"

#include <sstream>
#include <stdexcept>

#include "shiftkit/errors.hpp"

namespace shiftkit {

NormalForm normal_form(const FiniteJointDistribution& source,
                       const FiniteJointDistribution& target) {
  NormalForm out;
  out.class_densities = class_densities(target, source);
  const auto p = source.weights().col_sums();
  const auto q = target.weights().col_sums();
  out.prior_ratios.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out.prior_ratios[i] = q[i] / p[i];
  return out;
}

PosteriorTable correct_posteriors(const PosteriorTable& source_posteriors,
                                  const ClassPriors& source_priors,
                                  const ClassPriors& target_priors,
                                  const ClassConditionalDensities& class_densities) {
  const std::size_t m = source_posteriors.values.rows();
  const std::size_t d = source_posteriors.values.cols();
  if (source_priors.values.size() != d || target_priors.values.size() != d)
    throw std::invalid_argument("prior length does not match posterior table");
  if (!class_densities.values.same_shape(source_posteriors.values))
    throw std::invalid_argument("class density shape does not match posterior table");

  PosteriorTable out;
  out.values = Table(m, d, 0.0);
  out.defined.assign(m, false);

  for (std::size_t x = 0; x < m; ++x) {
    if (!source_posteriors.defined[x]) continue;  // source-null cell stays flagged
    double denom = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      denom += class_densities.values(x, i) *
               (target_priors.values[i] / source_priors.values[i]) *
               source_posteriors.values(x, i);
    }
    if (denom > 0.0) {
      out.defined[x] = true;
      for (std::size_t i = 0; i < d; ++i) {
        out.values(x, i) = class_densities.values(x, i) *
                           (target_priors.values[i] / source_priors.values[i]) *
                           source_posteriors.values(x, i) / denom;
      }
    }
    // denom == 0: the cell is target-null; the row stays zero and flagged.
  }
  return out;
}

JointDensity alternative_density(const FiniteJointDistribution& source,
                                 const FiniteJointDistribution& target) {
  density(target, source);  // enforces labels + absolute continuity
  const Decomposition src = marginals_and_posteriors(source);
  const Decomposition tgt = marginals_and_posteriors(target);
  const FeatureDensity h = feature_density(target, source);

  const std::size_t m = source.num_cells();
  const std::size_t d = source.num_classes();
  JointDensity out;
  out.values = Table(m, d, 0.0);

  for (std::size_t x = 0; x < m; ++x) {
    if (!src.posteriors.defined[x]) continue;
    for (std::size_t i = 0; i < d; ++i) {
      const double ps = src.posteriors.values(x, i);
      const double qs = tgt.posteriors.values(x, i);
      if (ps > 0.0) {
        out.values(x, i) = h.values[x] * qs / ps;
      } else if (qs > 0.0 && h.values[x] > 0.0) {
        std::ostringstream os;
        os << "target posterior positive where source posterior vanishes at cell "
           << source.feature_labels()[x] << ", class " << source.class_labels()[i];
        throw ShiftError(errors::kImplicationViolation, os.str());
      }
    }
  }
  return out;
}

ReverseView reverse(const FiniteJointDistribution& source,
                    const FiniteJointDistribution& target) {
  density(target, source);  // target << source
  // Equivalence: the forward joint density must be positive on the source
  // support, i.e. no source mass on target-null entries.
  std::vector<std::size_t> dead;
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i)
      if (source.weight(x, i) > 0.0 && target.weight(x, i) == 0.0) dead.push_back(x);
  if (!dead.empty()) {
    std::ostringstream os;
    os << "forward joint density vanishes on " << dead.size()
       << " source-support entr" << (dead.size() == 1 ? "y" : "ies");
    throw ShiftError(errors::kNotEquivalent, os.str());
  }

  ReverseView out;
  out.source_over_target.values = Table(source.num_cells(), source.num_classes(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i)
      if (target.weight(x, i) > 0.0)
        out.source_over_target.values(x, i) = source.weight(x, i) / target.weight(x, i);

  // Source posteriors reconstructed from target posteriors with reciprocal
  // class densities and swapped prior ratio.
  const NormalForm nf = normal_form(source, target);
  const Decomposition tgt = marginals_and_posteriors(target);
  const std::size_t m = source.num_cells();
  const std::size_t d = source.num_classes();
  out.source_posteriors.values = Table(m, d, 0.0);
  out.source_posteriors.defined.assign(m, false);

  for (std::size_t x = 0; x < m; ++x) {
    if (!tgt.posteriors.defined[x]) continue;
    double denom = 0.0;
    std::vector<double> num(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double qpost = tgt.posteriors.values(x, i);
      if (qpost > 0.0) {
        // qpost > 0 implies h_i(x) > 0 on the target support.
        num[i] = (1.0 / nf.class_densities.values(x, i)) * qpost / nf.prior_ratios[i];
      }
      denom += num[i];
    }
    if (denom > 0.0) {
      out.source_posteriors.defined[x] = true;
      for (std::size_t i = 0; i < d; ++i) out.source_posteriors.values(x, i) = num[i] / denom;
    }
  }
  return out;
}

}  // namespace shiftkit
