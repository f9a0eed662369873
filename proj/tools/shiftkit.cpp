// Command-line front end: loads distribution and selection tables, dispatches
// to the library, and prints machine-readable reports. Exit codes: 0 success,
// 1 domain error (canonical error name in the JSON), 2 usage error.

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shiftkit/distribution.hpp"
#include "shiftkit/errors.hpp"
#include "shiftkit/fjs.hpp"
#include "shiftkit/io.hpp"
#include "shiftkit/normal_form.hpp"
#include "shiftkit/selection.hpp"
#include "shiftkit/taxonomy.hpp"

namespace {

using namespace shiftkit;

std::vector<double> parse_grid(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = spec.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw std::invalid_argument("grid must have the form start:stop:step");
  const double start = std::stod(spec.substr(0, first));
  const double stop = std::stod(spec.substr(first + 1, second - first - 1));
  const double step = std::stod(spec.substr(second + 1));
  if (!(step > 0.0) || !(start <= stop))
    throw std::invalid_argument("grid must satisfy start <= stop with positive step");
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double q = start + k * step;
    if (q > stop + step * 1e-9) break;
    grid.push_back(q);
  }
  return grid;
}

struct GlobalOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  double damping = 1.0;
  std::uint64_t seed = 0;
  std::string format = "csv";  // phi-curve output format
};

int dispatch(int argc, char** argv) {
  CLI::App app{"Exact dataset-shift analysis on finite joint distributions"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opt;
  app.add_option("--tol", opt.tol, "solver residual tolerance");
  app.add_option("--max-iter", opt.max_iter, "solver iteration limit");
  app.add_option("--damping", opt.damping, "initial fixed-point damping");
  app.add_option("--seed", opt.seed, "random seed for simulation");
  app.add_option("--format", opt.format, "phi-curve output format (json|csv)")
      ->check(CLI::IsMember({"json", "csv"}));

  auto solver_options = [&opt] {
    SolverOptions s;
    s.tol = opt.tol;
    s.max_iter = opt.max_iter;
    s.damping = opt.damping;
    return s;
  };

  std::function<int()> action;

  // validate <dist>
  {
    auto* cmd = app.add_subcommand("validate", "check a distribution file");
    auto path = std::make_shared<std::string>();
    cmd->add_option("dist", *path, "distribution file")->required();
    cmd->callback([&action, path] {
      action = [path] {
        const auto dist = io::load_distribution(*path);
        const auto report = validate(dist);
        std::cout << io::validation_report_json(report);
        return report.valid ? 0 : 1;
      };
    });
  }

  // decompose --source --target
  {
    auto* cmd = app.add_subcommand("decompose", "normal-form decomposition of a pair");
    auto src = std::make_shared<std::string>();
    auto tgt = std::make_shared<std::string>();
    cmd->add_option("--source", *src, "source distribution")->required();
    cmd->add_option("--target", *tgt, "target distribution")->required();
    cmd->callback([&action, src, tgt] {
      action = [src, tgt] {
        const auto source = io::load_distribution(*src);
        const auto target = io::load_distribution(*tgt);
        std::cout << io::decomposition_report_json(source, target);
        return 0;
      };
    });
  }

  // correct --source (--target | --density --priors)
  {
    auto* cmd = app.add_subcommand("correct", "posterior correction");
    auto src = std::make_shared<std::string>();
    auto tgt = std::make_shared<std::string>();
    auto den = std::make_shared<std::string>();
    auto pri = std::make_shared<std::string>();
    cmd->add_option("--source", *src, "source distribution")->required();
    auto* tgt_opt = cmd->add_option("--target", *tgt, "target distribution (exact route)");
    auto* den_opt =
        cmd->add_option("--density", *den, "target feature density (factorizable route)");
    cmd->add_option("--priors", *pri, "target priors (factorizable route)")->needs(den_opt);
    den_opt->excludes(tgt_opt);
    cmd->callback([&action, solver_options, src, tgt, den, pri] {
      action = [=] {
        const auto source = io::load_distribution(*src);
        const auto dec = marginals_and_posteriors(source);
        if (!tgt->empty()) {
          const auto target = io::load_distribution(*tgt);
          const auto nf = normal_form(source, target);
          const ClassPriors qp{target.weights().col_sums()};
          const auto corrected =
              correct_posteriors(dec.posteriors, dec.priors, qp, nf.class_densities);
          std::cout << io::posterior_report_json(corrected);
          return 0;
        }
        if (den->empty() || pri->empty())
          throw std::invalid_argument(
              "correct needs either --target or both --density and --priors");
        const FeatureDensity h{io::load_cell_vector(*den, source)};
        const ClassPriors q = io::load_priors(*pri, source);
        const auto sol = solve_rho(source, h, q, solver_options());
        if (!sol.converged) {
          std::cout << io::fjs_report_json(sol);
          return 1;
        }
        const auto corrected = correct_posteriors_fjs(dec.posteriors, dec.priors, q, sol.rho);
        std::cout << io::posterior_report_json(corrected, &sol.rho);
        return 0;
      };
    });
  }

  // solve-rho --dist --density --priors
  {
    auto* cmd = app.add_subcommand("solve-rho", "solve the factorizable-shift system");
    auto dist = std::make_shared<std::string>();
    auto den = std::make_shared<std::string>();
    auto pri = std::make_shared<std::string>();
    cmd->add_option("--dist", *dist, "source distribution")->required();
    cmd->add_option("--density", *den, "target feature density")->required();
    cmd->add_option("--priors", *pri, "target priors")->required();
    cmd->callback([&action, solver_options, dist, den, pri] {
      action = [=] {
        const auto source = io::load_distribution(*dist);
        const FeatureDensity h{io::load_cell_vector(*den, source)};
        const ClassPriors q = io::load_priors(*pri, source);
        const auto sol = solve_rho(source, h, q, solver_options());
        std::cout << io::fjs_report_json(sol);
        return sol.converged ? 0 : 1;
      };
    });
  }

  // estimate-priors --dist --marginal
  {
    auto* cmd = app.add_subcommand("estimate-priors",
                                   "estimate target priors from a feature marginal");
    auto dist = std::make_shared<std::string>();
    auto marg = std::make_shared<std::string>();
    cmd->add_option("--dist", *dist, "source distribution")->required();
    cmd->add_option("--marginal", *marg, "target feature marginal")->required();
    cmd->callback([&action, solver_options, dist, marg] {
      action = [=] {
        const auto source = io::load_distribution(*dist);
        const auto t = io::load_cell_vector(*marg, source);
        const auto dec = marginals_and_posteriors(source);
        const auto est = estimate_priors_em(dec.posteriors, dec.priors, t, solver_options());
        std::cout << io::prior_estimate_json(est);
        return est.converged ? 0 : 1;
      };
    });
  }

  // phi-curve --dist --density --grid
  {
    auto* cmd = app.add_subcommand("phi-curve", "binary rho-versus-prior curve");
    auto dist = std::make_shared<std::string>();
    auto den = std::make_shared<std::string>();
    auto grid = std::make_shared<std::string>("0.05:0.95:0.05");
    cmd->add_option("--dist", *dist, "source distribution")->required();
    cmd->add_option("--density", *den, "target feature density")->required();
    cmd->add_option("--grid", *grid, "grid start:stop:step");
    cmd->callback([&action, &opt, dist, den, grid] {
      action = [=, &opt] {
        const auto source = io::load_distribution(*dist);
        const FeatureDensity h{io::load_cell_vector(*den, source)};
        const auto curve = binary_phi(source, h, parse_grid(*grid));
        std::cout << (opt.format == "json" ? io::phi_curve_json(curve)
                                           : io::phi_curve_csv(curve));
        return 0;
      };
    });
  }

  // classify --source --target [--map]
  {
    auto* cmd = app.add_subcommand("classify", "classify a pair into shift types");
    auto src = std::make_shared<std::string>();
    auto tgt = std::make_shared<std::string>();
    auto map = std::make_shared<std::string>();
    auto tol = std::make_shared<double>(kCheckTol);
    cmd->add_option("--source", *src, "source distribution")->required();
    cmd->add_option("--target", *tgt, "target distribution")->required();
    cmd->add_option("--map", *map, "representation map");
    cmd->add_option("--check-tol", *tol, "comparison tolerance for the checks");
    cmd->callback([&action, src, tgt, map, tol] {
      action = [=] {
        const auto source = io::load_distribution(*src);
        const auto target = io::load_distribution(*tgt);
        std::optional<RepresentationMap> rep;
        if (!map->empty()) rep = io::load_representation_map(*map, source);
        const auto report = classify(source, target, rep, *tol);
        std::cout << io::shift_report_json(report);
        return 0;
      };
    });
  }

  // simulate-selection --dist --phi -n --seed
  {
    auto* cmd = app.add_subcommand("simulate-selection", "Monte Carlo selection thinning");
    auto dist = std::make_shared<std::string>();
    auto phi = std::make_shared<std::string>();
    auto n = std::make_shared<std::uint64_t>(100000);
    cmd->add_option("--dist", *dist, "population distribution")->required();
    cmd->add_option("--phi", *phi, "selection probabilities")->required();
    cmd->add_option("-n,--draws", *n, "number of draws");
    cmd->callback([&action, &opt, dist, phi, n] {
      action = [=, &opt] {
        const auto population = io::load_distribution(*dist);
        const auto sel = io::load_selection_model(*phi, population);
        const auto sim = simulate_selection(population, sel, *n, opt.seed);
        std::cout << io::simulation_report_json(sim, population);
        return 0;
      };
    });
  }

  // analyze-selection --dist --phi --mode
  {
    auto* cmd = app.add_subcommand("analyze-selection",
                                   "factorizable selection-bias analysis");
    auto dist = std::make_shared<std::string>();
    auto phi = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("known-priors");
    cmd->add_option("--dist", *dist, "population distribution")->required();
    cmd->add_option("--phi", *phi, "selection probabilities")->required();
    cmd->add_option("--mode", *mode, "known-priors | alpha-one")
        ->check(CLI::IsMember({"known-priors", "alpha-one"}));
    cmd->callback([&action, solver_options, dist, phi, mode] {
      action = [=] {
        const auto population = io::load_distribution(*dist);
        const auto sel = io::load_selection_model(*phi, population);
        const auto analysis = analyze_fjs_selection(
            population, sel,
            *mode == "alpha-one" ? SelectionMode::alpha_one
                                 : SelectionMode::known_population_priors,
            solver_options());
        std::cout << io::selection_analysis_json(analysis);
        return analysis.converged ? 0 : 1;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  return action();
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ShiftError& e) {
    std::cout << io::error_json(e.name(), e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
