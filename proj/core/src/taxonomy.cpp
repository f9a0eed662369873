#include "shiftkit/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "shiftkit/errors.hpp"
#include "shiftkit/fjs.hpp"

namespace shiftkit {

namespace {

// Relative comparison with floor 1: effectively absolute at probability
// scale, relative for larger quantities such as densities.
bool close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({std::fabs(a), std::fabs(b), 1.0});
}

}  // namespace

std::vector<std::size_t> RepresentationMap::group_indices() const {
  std::vector<std::size_t> idx(group_of_cell.size());
  std::map<std::string, std::size_t> seen;
  for (std::size_t x = 0; x < group_of_cell.size(); ++x) {
    auto [it, inserted] = seen.emplace(group_of_cell[x], seen.size());
    idx[x] = it->second;
  }
  return idx;
}

FiniteJointDistribution make_prior_shift(const FiniteJointDistribution& source,
                                         const ClassPriors& target_priors) {
  require_valid(source);
  require_priors(target_priors, source.num_classes());
  const auto p = source.weights().col_sums();
  Table w(source.num_cells(), source.num_classes(), 0.0);
  for (std::size_t x = 0; x < w.rows(); ++x)
    for (std::size_t i = 0; i < w.cols(); ++i)
      w(x, i) = source.weight(x, i) * target_priors.values[i] / p[i];
  return FiniteJointDistribution(source.feature_labels(), source.class_labels(), std::move(w));
}

FiniteJointDistribution make_covariate_shift(const FiniteJointDistribution& source,
                                             std::span<const double> target_marginal) {
  const Decomposition dec = marginals_and_posteriors(source);
  if (target_marginal.size() != source.num_cells())
    throw std::invalid_argument("target marginal length does not match cell count");
  double total = 0.0;
  for (std::size_t x = 0; x < target_marginal.size(); ++x) {
    const double t = target_marginal[x];
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("target marginal entries must be finite and nonnegative");
    if (t > 0.0 && !dec.posteriors.defined[x])
      throw ShiftError(errors::kAbsoluteContinuityViolation,
                       "target marginal positive on a source-null cell: " +
                           source.feature_labels()[x]);
    total += t;
  }
  if (std::fabs(total - 1.0) > kSumTol)
    throw std::invalid_argument("target marginal must sum to 1");

  Table w(source.num_cells(), source.num_classes(), 0.0);
  for (std::size_t x = 0; x < w.rows(); ++x)
    for (std::size_t i = 0; i < w.cols(); ++i)
      w(x, i) = dec.posteriors.values(x, i) * target_marginal[x];
  return FiniteJointDistribution(source.feature_labels(), source.class_labels(), std::move(w));
}

CspdCheck check_cspd(const FiniteJointDistribution& source,
                     const FiniteJointDistribution& target, double tol) {
  if (source.num_classes() != 2)
    throw ShiftError(errors::kNotBinary, "CSPD is defined for two classes only");
  density(target, source);  // labels + absolute continuity

  const Decomposition src = marginals_and_posteriors(source);
  const Decomposition tgt = marginals_and_posteriors(target);

  // The functional link only needs to hold target-almost-surely, so only
  // cells carrying target mass participate.
  std::vector<std::size_t> cells;
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    if (tgt.posteriors.defined[x]) cells.push_back(x);

  CspdCheck out;
  out.holds = true;
  for (std::size_t a = 0; a < cells.size() && out.holds; ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      const std::size_t xa = cells[a];
      const std::size_t xb = cells[b];
      const double pa = src.posteriors.values(xa, 0);
      const double pb = src.posteriors.values(xb, 0);
      const double qa = tgt.posteriors.values(xa, 0);
      const double qb = tgt.posteriors.values(xb, 0);
      if (close(pa, pb, tol)) {
        // A strictly increasing link maps equal source posteriors to equal
        // target posteriors.
        if (!close(qa, qb, tol)) {
          out.holds = false;
          out.violation = {xa, xb};
          out.tie_violation = true;
          break;
        }
      } else if ((pa - pb) * (qa - qb) < 0.0 && !close(qa, qb, tol)) {
        out.holds = false;
        out.violation = {xa, xb};
        break;
      }
    }
  }
  return out;
}

ClassConditionalDensities cspd_class_densities(const FiniteJointDistribution& source,
                                               const FiniteJointDistribution& target,
                                               double tol) {
  const CspdCheck check = check_cspd(source, target, tol);
  if (!check.holds)
    throw ShiftError(errors::kPreconditionFailed, "pair fails the CSPD check");

  const Decomposition src = marginals_and_posteriors(source);
  const Decomposition tgt = marginals_and_posteriors(target);
  const FeatureDensity h = feature_density(target, source);
  const auto p = src.priors.values;
  const auto q = tgt.priors.values;

  ClassConditionalDensities out;
  out.values = Table(source.num_cells(), 2, 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    if (!src.posteriors.defined[x]) continue;
    const double ps = src.posteriors.values(x, 0);
    const double qs = tgt.posteriors.values(x, 0);
    if (ps > 0.0)
      out.values(x, 0) = (p[0] / q[0]) * h.values[x] * qs / ps;
    if (ps < 1.0)
      out.values(x, 1) = (p[1] / q[1]) * h.values[x] * (1.0 - qs) / (1.0 - ps);
  }
  return out;
}

namespace {

struct GroupStats {
  std::size_t num_groups = 0;
  std::vector<std::size_t> group;  // per cell
  Table source_mass;               // G x d
  Table target_mass;               // G x d
};

GroupStats group_masses(const FiniteJointDistribution& source,
                        const FiniteJointDistribution& target,
                        const RepresentationMap& map) {
  if (map.group_of_cell.size() != source.num_cells())
    throw std::invalid_argument("representation map must cover every feature cell");
  GroupStats st;
  st.group = map.group_indices();
  for (std::size_t g : st.group) st.num_groups = std::max(st.num_groups, g + 1);
  st.source_mass = Table(st.num_groups, source.num_classes(), 0.0);
  st.target_mass = Table(st.num_groups, source.num_classes(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i) {
      st.source_mass(st.group[x], i) += source.weight(x, i);
      st.target_mass(st.group[x], i) += target.weight(x, i);
    }
  return st;
}

std::string group_label(const RepresentationMap& map, const std::vector<std::size_t>& group,
                        std::size_t g) {
  for (std::size_t x = 0; x < group.size(); ++x)
    if (group[x] == g) return map.group_of_cell[x];
  return "?";
}

// Sufficiency of the representation under one measure: posteriors constant
// across the support cells of every group.
bool sufficient(const FiniteJointDistribution& dist, const GroupStats& st,
                const RepresentationMap& map, double tol, GroupCheck& out,
                const char* measure) {
  const Decomposition dec = marginals_and_posteriors(dist);
  for (std::size_t g = 0; g < st.num_groups; ++g) {
    std::size_t ref = dist.num_cells();
    for (std::size_t x = 0; x < dist.num_cells(); ++x) {
      if (st.group[x] != g || !dec.posteriors.defined[x]) continue;
      if (ref == dist.num_cells()) {
        ref = x;
        continue;
      }
      for (std::size_t i = 0; i < dist.num_classes(); ++i) {
        if (!close(dec.posteriors.values(x, i), dec.posteriors.values(ref, i), tol)) {
          if (!out.witness) {
            std::ostringstream os;
            os << "posteriors differ within group under " << measure << ": cells "
               << dist.feature_labels()[ref] << " and " << dist.feature_labels()[x];
            out.witness = GroupCheckWitness{group_label(map, st.group, g),
                                            dist.class_labels()[i], os.str()};
          }
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace

GroupCheck check_gls(const FiniteJointDistribution& source,
                     const FiniteJointDistribution& target, const RepresentationMap& map,
                     double tol) {
  density(target, source);
  const GroupStats st = group_masses(source, target, map);
  const auto p = source.weights().col_sums();
  const auto q = target.weights().col_sums();

  GroupCheck out;
  out.group_invariant = true;
  for (std::size_t g = 0; g < st.num_groups && out.group_invariant; ++g)
    for (std::size_t i = 0; i < source.num_classes(); ++i) {
      const double ps = st.source_mass(g, i) / p[i];
      const double qs = st.target_mass(g, i) / q[i];
      if (!close(ps, qs, tol)) {
        out.group_invariant = false;
        std::ostringstream os;
        os << "group-conditional class distribution differs: " << ps << " vs " << qs;
        out.witness = GroupCheckWitness{group_label(map, st.group, g),
                                        source.class_labels()[i], os.str()};
        break;
      }
    }

  out.sufficient_source = sufficient(source, st, map, tol, out, "source");
  out.sufficient_target = sufficient(target, st, map, tol, out, "target");
  out.holds = out.group_invariant && out.sufficient_source && out.sufficient_target;
  return out;
}

GlsFactors gls_factorize(const FiniteJointDistribution& source,
                         const FiniteJointDistribution& target, const RepresentationMap& map,
                         double tol) {
  const GroupCheck check = check_gls(source, target, map, tol);
  if (!check.group_invariant)
    throw ShiftError(errors::kNotGroupInvariant,
                     "group-conditional class distributions are not invariant");
  if (!check.holds)
    throw ShiftError(errors::kNotSufficient,
                     "representation is not sufficient under both measures");

  const Decomposition src = marginals_and_posteriors(source);
  const FeatureDensity h = feature_density(target, source);
  const auto p = src.priors.values;
  const auto q = target.weights().col_sums();

  GlsFactors out;
  out.b.resize(source.num_classes());
  for (std::size_t i = 0; i < out.b.size(); ++i) out.b[i] = q[i] / p[i];

  out.g.assign(source.num_cells(), 0.0);
  for (std::size_t x = 0; x < source.num_cells(); ++x) {
    if (!src.posteriors.defined[x]) continue;
    double gamma = 0.0;
    for (std::size_t i = 0; i < source.num_classes(); ++i)
      gamma += out.b[i] * src.posteriors.values(x, i);
    out.g[x] = h.values[x] / gamma;
  }

  // The product must reproduce the joint density on the source support.
  const JointDensity hbar = density(target, source);
  double worst = 0.0;
  for (std::size_t x = 0; x < source.num_cells(); ++x)
    for (std::size_t i = 0; i < source.num_classes(); ++i)
      if (source.weight(x, i) > 0.0)
        worst = std::max(worst, std::fabs(out.g[x] * out.b[i] - hbar.values(x, i)));
  if (worst > 1e-10) {
    std::ostringstream os;
    os << "factorization fails to reproduce the joint density (max deviation " << worst << ")";
    throw ShiftError(errors::kInconsistentInputs, os.str());
  }
  return out;
}

GroupCheck check_domain_invariance(const FiniteJointDistribution& source,
                                   const FiniteJointDistribution& target,
                                   const RepresentationMap& map, double tol) {
  density(target, source);
  const GroupStats st = group_masses(source, target, map);

  GroupCheck out;
  out.group_invariant = true;  // here: equality of (group x class) masses
  for (std::size_t g = 0; g < st.num_groups && out.group_invariant; ++g)
    for (std::size_t i = 0; i < source.num_classes(); ++i) {
      if (!close(st.source_mass(g, i), st.target_mass(g, i), tol)) {
        out.group_invariant = false;
        std::ostringstream os;
        os << "mass differs: " << st.source_mass(g, i) << " vs " << st.target_mass(g, i);
        out.witness = GroupCheckWitness{group_label(map, st.group, g),
                                        source.class_labels()[i], os.str()};
        break;
      }
    }

  out.sufficient_source = sufficient(source, st, map, tol, out, "source");
  out.sufficient_target = sufficient(target, st, map, tol, out, "target");
  out.holds = out.group_invariant && out.sufficient_source && out.sufficient_target;
  return out;
}

ShiftReport classify(const FiniteJointDistribution& source,
                     const FiniteJointDistribution& target,
                     const std::optional<RepresentationMap>& map, double tol) {
  density(target, source);
  const Decomposition src = marginals_and_posteriors(source);
  const Decomposition tgt = marginals_and_posteriors(target);
  const std::size_t m = source.num_cells();
  const std::size_t d = source.num_classes();

  ShiftReport report;
  report.tolerance = tol;

  report.no_shift = true;
  for (std::size_t x = 0; x < m && report.no_shift; ++x)
    for (std::size_t i = 0; i < d; ++i)
      if (!close(source.weight(x, i), target.weight(x, i), tol)) {
        report.no_shift = false;
        break;
      }

  // Prior shift: class-conditional feature distributions invariant.
  report.prior_shift = true;
  for (std::size_t x = 0; x < m && report.prior_shift; ++x)
    for (std::size_t i = 0; i < d; ++i) {
      const double ps = source.weight(x, i) / src.priors.values[i];
      const double qs = target.weight(x, i) / tgt.priors.values[i];
      if (!close(ps, qs, tol)) {
        report.prior_shift = false;
        std::ostringstream os;
        os << "prior_shift: class conditionals differ at cell " << source.feature_labels()[x]
           << ", class " << source.class_labels()[i];
        report.notes.push_back(os.str());
        break;
      }
    }

  // Covariate shift: posteriors invariant on the shared support.
  report.covariate_shift = true;
  for (std::size_t x = 0; x < m && report.covariate_shift; ++x) {
    if (!src.posteriors.defined[x] || !tgt.posteriors.defined[x]) continue;
    for (std::size_t i = 0; i < d; ++i)
      if (!close(src.posteriors.values(x, i), tgt.posteriors.values(x, i), tol)) {
        report.covariate_shift = false;
        std::ostringstream os;
        os << "covariate_shift: posteriors differ at cell " << source.feature_labels()[x]
           << ", class " << source.class_labels()[i];
        report.notes.push_back(os.str());
        break;
      }
  }

  try {
    const FactorizabilityCheck fc = is_factorizable(source, target, tol);
    report.fjs = fc.factorizable;
    if (fc.factorizable) {
      report.fjs_rho = fc.rho_witness;
    } else if (fc.violation) {
      std::ostringstream os;
      os << "fjs: density ratio for class " << source.class_labels()[fc.violation->class_index]
         << " differs between cells " << source.feature_labels()[fc.violation->cell_a] << " and "
         << source.feature_labels()[fc.violation->cell_b];
      report.notes.push_back(os.str());
    }
  } catch (const ShiftError& e) {
    report.fjs = false;
    report.notes.push_back(std::string("fjs: ") + e.name() + ": " + e.what());
  }

  if (d == 2) {
    const CspdCheck cspd = check_cspd(source, target, tol);
    report.cspd = cspd.holds;
    if (!cspd.holds && cspd.violation) {
      std::ostringstream os;
      os << "cspd: " << (cspd.tie_violation ? "tie broken" : "order reversal")
         << " between cells " << source.feature_labels()[cspd.violation->first] << " and "
         << source.feature_labels()[cspd.violation->second];
      report.notes.push_back(os.str());
    }
  }

  if (map) {
    const GroupCheck gls = check_gls(source, target, *map, tol);
    report.gls = gls.holds;
    if (!gls.holds && gls.witness)
      report.notes.push_back("gls: group " + gls.witness->group + ", class " +
                             gls.witness->cls + ": " + gls.witness->detail);
    const GroupCheck di = check_domain_invariance(source, target, *map, tol);
    report.domain_invariance = di.holds;
    if (!di.holds && di.witness)
      report.notes.push_back("domain_invariance: group " + di.witness->group + ", class " +
                             di.witness->cls + ": " + di.witness->detail);
  }

  // Implication closure over the flags.
  if (report.no_shift) {
    report.prior_shift = true;
    report.covariate_shift = true;
  }
  if (report.prior_shift || report.covariate_shift || (report.gls && *report.gls)) {
    if (!report.fjs) {
      report.fjs = true;
      if (report.fjs_rho.empty()) {
        // Witness from the specialized structure: prior shift gives rho == 1,
        // covariate shift gives the closed-form prior-ratio constants.
        report.fjs_rho.assign(d - 1, 1.0);
        if (!report.prior_shift) {
          for (std::size_t i = 0; i + 1 < d; ++i)
            report.fjs_rho[i] = (tgt.priors.values[d - 1] / src.priors.values[d - 1]) *
                                (src.priors.values[i] / tgt.priors.values[i]);
        }
      }
    }
  }
  if (d == 2 && report.fjs && report.cspd && !*report.cspd) report.cspd = true;

  return report;
}

}  // namespace shiftkit
