#include "shiftkit/io.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shiftkit/errors.hpp"
#include "shiftkit/normal_form.hpp"

namespace shiftkit::io {

namespace {

using nlohmann::json;

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

std::vector<std::string> string_list(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_array())
    throw std::invalid_argument(path + ": missing \"" + key + "\" array");
  std::vector<std::string> out;
  for (const auto& v : j[key]) {
    if (!v.is_string()) throw std::invalid_argument(path + ": \"" + key + "\" must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Table weight_table(const json& j, std::size_t m, std::size_t d, const std::string& path) {
  if (!j.contains("weights") || !j["weights"].is_array() || j["weights"].size() != m)
    throw std::invalid_argument(path + ": \"weights\" must be an array of " +
                                std::to_string(m) + " rows");
  Table w(m, d, 0.0);
  for (std::size_t x = 0; x < m; ++x) {
    const auto& row = j["weights"][x];
    if (!row.is_array() || row.size() != d)
      throw std::invalid_argument(path + ": weight row " + std::to_string(x) + " must have " +
                                  std::to_string(d) + " entries");
    for (std::size_t i = 0; i < d; ++i) {
      if (!row[i].is_number())
        throw std::invalid_argument(path + ": weight entries must be numbers");
      w(x, i) = row[i].get<double>();
    }
  }
  return w;
}

FiniteJointDistribution load_distribution_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "feature,class,weight")
    throw std::invalid_argument(path + ": expected CSV header feature,class,weight");

  std::vector<std::string> features;
  std::vector<std::string> classes;
  std::map<std::string, std::size_t> feature_index;
  std::map<std::string, std::size_t> class_index;
  std::vector<std::tuple<std::size_t, std::size_t, double>> entries;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string feature, cls, weight;
    if (!std::getline(row, feature, ',') || !std::getline(row, cls, ',') ||
        !std::getline(row, weight))
      throw std::invalid_argument(path + ": malformed CSV row at line " + std::to_string(lineno));
    auto [fit, finserted] = feature_index.emplace(feature, features.size());
    if (finserted) features.push_back(feature);
    auto [cit, cinserted] = class_index.emplace(cls, classes.size());
    if (cinserted) classes.push_back(cls);
    try {
      entries.emplace_back(fit->second, cit->second, std::stod(weight));
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ": bad weight at line " + std::to_string(lineno));
    }
  }

  Table w(features.size(), classes.size(), 0.0);
  for (const auto& [x, i, v] : entries) w(x, i) = v;
  return FiniteJointDistribution(std::move(features), std::move(classes), std::move(w));
}

json table_json(const Table& t) {
  json rows = json::array();
  for (std::size_t x = 0; x < t.rows(); ++x) {
    json row = json::array();
    for (std::size_t i = 0; i < t.cols(); ++i) row.push_back(t(x, i));
    rows.push_back(std::move(row));
  }
  return rows;
}

json bool_list(const std::vector<bool>& v) {
  json out = json::array();
  for (bool b : v) out.push_back(b);
  return out;
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

FiniteJointDistribution load_distribution(const std::string& path) {
  if (has_suffix(path, ".csv")) return load_distribution_csv(path);
  const json j = parse_file(path);
  auto features = string_list(j, "features", path);
  auto classes = string_list(j, "classes", path);
  Table w = weight_table(j, features.size(), classes.size(), path);
  return FiniteJointDistribution(std::move(features), std::move(classes), std::move(w));
}

SelectionModel load_selection_model(const std::string& path,
                                    const FiniteJointDistribution& population) {
  const json j = parse_file(path);
  auto features = string_list(j, "features", path);
  auto classes = string_list(j, "classes", path);
  if (features != population.feature_labels() || classes != population.class_labels())
    throw std::invalid_argument(path + ": selection labels do not match the distribution");
  SelectionModel sel{weight_table(j, features.size(), classes.size(), path)};
  return sel;
}

ClassPriors load_priors(const std::string& path, const FiniteJointDistribution& dist) {
  const json j = parse_file(path);
  auto classes = string_list(j, "classes", path);
  if (classes != dist.class_labels())
    throw std::invalid_argument(path + ": class labels do not match the distribution");
  if (!j.contains("values") || !j["values"].is_array() || j["values"].size() != classes.size())
    throw std::invalid_argument(path + ": \"values\" must be an array matching \"classes\"");
  ClassPriors priors;
  for (const auto& v : j["values"]) {
    if (!v.is_number()) throw std::invalid_argument(path + ": prior values must be numbers");
    priors.values.push_back(v.get<double>());
  }
  return priors;
}

std::vector<double> load_cell_vector(const std::string& path,
                                     const FiniteJointDistribution& dist) {
  const json j = parse_file(path);
  auto features = string_list(j, "features", path);
  if (features != dist.feature_labels())
    throw std::invalid_argument(path + ": feature labels do not match the distribution");
  if (!j.contains("values") || !j["values"].is_array() || j["values"].size() != features.size())
    throw std::invalid_argument(path + ": \"values\" must be an array matching \"features\"");
  std::vector<double> out;
  for (const auto& v : j["values"]) {
    if (!v.is_number()) throw std::invalid_argument(path + ": values must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

RepresentationMap load_representation_map(const std::string& path,
                                          const FiniteJointDistribution& dist) {
  const json j = parse_file(path);
  if (!j.contains("groups") || !j["groups"].is_object())
    throw std::invalid_argument(path + ": missing \"groups\" object");
  RepresentationMap map;
  map.group_of_cell.reserve(dist.num_cells());
  for (const auto& cell : dist.feature_labels()) {
    if (!j["groups"].contains(cell))
      throw std::invalid_argument(path + ": cell \"" + cell + "\" has no group");
    if (!j["groups"][cell].is_string())
      throw std::invalid_argument(path + ": group of \"" + cell + "\" must be a string");
    map.group_of_cell.push_back(j["groups"][cell].get<std::string>());
  }
  return map;
}

void save_distribution(const FiniteJointDistribution& dist, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  if (has_suffix(path, ".csv")) {
    out << "feature,class,weight\n";
    for (std::size_t x = 0; x < dist.num_cells(); ++x)
      for (std::size_t i = 0; i < dist.num_classes(); ++i)
        out << dist.feature_labels()[x] << ',' << dist.class_labels()[i] << ','
            << json(dist.weight(x, i)).dump() << '\n';
    return;
  }
  json j;
  j["features"] = dist.feature_labels();
  j["classes"] = dist.class_labels();
  j["weights"] = table_json(dist.weights());
  out << render(j);
}

std::string validation_report_json(const ValidationReport& report) {
  json j;
  j["valid"] = report.valid;
  json issues = json::array();
  for (const auto& issue : report.issues) {
    json item;
    item["check"] = issue.check;
    item["message"] = issue.message;
    item["indices"] = issue.indices;
    issues.push_back(std::move(item));
  }
  j["issues"] = std::move(issues);
  return render(j);
}

std::string decomposition_report_json(const FiniteJointDistribution& source,
                                      const FiniteJointDistribution& target) {
  const NormalForm nf = normal_form(source, target);
  const JointDensity hbar = density(target, source);
  const FeatureDensity h = feature_density(target, source);
  json j;
  j["features"] = source.feature_labels();
  j["classes"] = source.class_labels();
  j["class_densities"] = table_json(nf.class_densities.values);
  j["prior_ratios"] = nf.prior_ratios;
  j["joint_density"] = table_json(hbar.values);
  j["feature_density"] = h.values;
  j["source_priors"] = source.weights().col_sums();
  j["target_priors"] = target.weights().col_sums();
  return render(j);
}

std::string posterior_report_json(const PosteriorTable& posteriors,
                                  const std::vector<double>* rho) {
  json j;
  j["posteriors"] = table_json(posteriors.values);
  j["defined"] = bool_list(posteriors.defined);
  if (rho) j["rho"] = *rho;
  return render(j);
}

std::string fjs_report_json(const FjsCharacterization& c) {
  json j;
  j["rho"] = c.rho;
  j["g"] = c.g;
  j["b"] = c.b;
  j["target_priors"] = c.target_priors.values;
  j["residual"] = c.residual;
  j["iterations"] = c.iterations;
  j["converged"] = c.converged;
  j["degenerate"] = c.degenerate;
  j["error"] = c.converged ? json(nullptr) : json("NoConvergence");
  return render(j);
}

std::string prior_estimate_json(const PriorEstimate& est) {
  json j;
  j["priors"] = est.priors.values;
  j["iterations"] = est.iterations;
  j["converged"] = est.converged;
  j["residual"] = est.residual;
  j["boundary_collapse"] = est.boundary_collapse;
  j["error"] = est.converged ? json(nullptr) : json("NoConvergence");
  return render(j);
}

std::string phi_curve_json(const PhiCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    json item;
    item["q"] = p.q;
    item["rho"] = p.rho;
    item["residual"] = p.residual;
    points.push_back(std::move(item));
  }
  json j;
  j["points"] = std::move(points);
  j["limit_q_to_0"] = curve.limit_q_to_0;
  j["limit_q_to_1"] = curve.limit_q_to_1;
  j["nonunique"] = curve.nonunique;
  return render(j);
}

std::string phi_curve_csv(const PhiCurve& curve) {
  std::ostringstream os;
  os << "q,rho,residual\n";
  for (const auto& p : curve.points)
    os << json(p.q).dump() << ',' << json(p.rho).dump() << ',' << json(p.residual).dump()
       << '\n';
  return os.str();
}

std::string shift_report_json(const ShiftReport& report) {
  json j;
  j["no_shift"] = report.no_shift;
  j["prior_shift"] = report.prior_shift;
  j["covariate_shift"] = report.covariate_shift;
  j["fjs"] = report.fjs;
  j["fjs_rho"] = report.fjs_rho;
  j["cspd"] = report.cspd ? json(*report.cspd) : json(nullptr);
  j["gls"] = report.gls ? json(*report.gls) : json(nullptr);
  j["domain_invariance"] =
      report.domain_invariance ? json(*report.domain_invariance) : json(nullptr);
  j["tolerance"] = report.tolerance;
  j["notes"] = report.notes;
  return render(j);
}

std::string simulation_report_json(const SimulationResult& sim,
                                   const FiniteJointDistribution& population) {
  const std::size_t m = population.num_cells();
  const std::size_t d = population.num_classes();
  json counts = json::array();
  json empirical = json::array();
  for (std::size_t x = 0; x < m; ++x) {
    json crow = json::array();
    json erow = json::array();
    for (std::size_t i = 0; i < d; ++i) {
      const std::uint64_t c = sim.counts[x * d + i];
      crow.push_back(c);
      erow.push_back(static_cast<double>(c) / static_cast<double>(sim.accepted));
    }
    counts.push_back(std::move(crow));
    empirical.push_back(std::move(erow));
  }
  json j;
  j["features"] = population.feature_labels();
  j["classes"] = population.class_labels();
  j["counts"] = std::move(counts);
  j["empirical"] = std::move(empirical);
  j["accepted"] = sim.accepted;
  j["attempted"] = sim.attempted;
  return render(j);
}

std::string selection_analysis_json(const SelectionAnalysis& analysis) {
  json j;
  j["alpha"] = analysis.alpha;
  j["population_priors"] = analysis.population_priors.values;
  j["population_posteriors"] = table_json(analysis.recovered_population_posteriors.values);
  j["population_posteriors_defined"] =
      bool_list(analysis.recovered_population_posteriors.defined);
  j["classwise_selection"] = table_json(analysis.classwise_selection);
  j["admissible"] = analysis.admissible;
  j["necessary_bound_ok"] = analysis.necessary_bound_ok;
  j["residual"] = analysis.residual;
  j["iterations"] = analysis.iterations;
  j["converged"] = analysis.converged;
  j["error"] = analysis.converged ? json(nullptr) : json("NoConvergence");
  return render(j);
}

std::string error_json(const std::string& name, const std::string& message) {
  json j;
  j["error"] = name;
  j["message"] = message;
  return render(j);
}

}  // namespace shiftkit::io
