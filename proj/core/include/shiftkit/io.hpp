#ifndef SHIFTKIT_IO_HPP
#define SHIFTKIT_IO_HPP

#include <string>

#include "shiftkit/distribution.hpp"
#include "shiftkit/fjs.hpp"
#include "shiftkit/selection.hpp"
#include "shiftkit/taxonomy.hpp"

// File formats (see docs/formats.md):
//   distribution  {"features": [...], "classes": [...], "weights": [[m x d]]}
//                 or CSV with header feature,class,weight
//   selection     same shape as a distribution, entries in (0, 1]
//   priors        {"classes": [...], "values": [...]}
//   cell vector   {"features": [...], "values": [...]}   (densities, marginals)
//   map           {"groups": {"cell": "group", ...}}
// Schema problems raise std::invalid_argument (usage errors). Report
// serialization is deterministic: object keys sorted, numbers rendered with
// the shortest representation that parses back to the same double.

namespace shiftkit::io {

FiniteJointDistribution load_distribution(const std::string& path);
SelectionModel load_selection_model(const std::string& path,
                                    const FiniteJointDistribution& population);
ClassPriors load_priors(const std::string& path, const FiniteJointDistribution& dist);
std::vector<double> load_cell_vector(const std::string& path,
                                     const FiniteJointDistribution& dist);
RepresentationMap load_representation_map(const std::string& path,
                                          const FiniteJointDistribution& dist);

void save_distribution(const FiniteJointDistribution& dist, const std::string& path);

// JSON report builders, rendered as indented text ending in a newline.
std::string validation_report_json(const ValidationReport& report);
std::string decomposition_report_json(const FiniteJointDistribution& source,
                                      const FiniteJointDistribution& target);
std::string posterior_report_json(const PosteriorTable& posteriors,
                                  const std::vector<double>* rho = nullptr);
std::string fjs_report_json(const FjsCharacterization& c);
std::string prior_estimate_json(const PriorEstimate& est);
std::string phi_curve_json(const PhiCurve& curve);
std::string phi_curve_csv(const PhiCurve& curve);
std::string shift_report_json(const ShiftReport& report);
std::string simulation_report_json(const SimulationResult& sim,
                                   const FiniteJointDistribution& population);
std::string selection_analysis_json(const SelectionAnalysis& analysis);
std::string error_json(const std::string& name, const std::string& message);

}  // namespace shiftkit::io

#endif  // SHIFTKIT_IO_HPP
