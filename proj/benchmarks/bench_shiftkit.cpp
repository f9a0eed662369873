#include <benchmark/benchmark.h>

#include <random>

#include "shiftkit/distribution.hpp"
#include "shiftkit/fjs.hpp"
#include "shiftkit/normal_form.hpp"
#include "shiftkit/selection.hpp"
#include "shiftkit/taxonomy.hpp"

namespace {

using namespace shiftkit;

FiniteJointDistribution random_distribution(std::mt19937_64& rng, std::size_t m,
                                            std::size_t d) {
  std::uniform_real_distribution<double> u(0.2, 1.2);
  Table w(m, d, 0.0);
  double total = 0.0;
  for (auto& v : w.data()) {
    v = u(rng);
    total += v;
  }
  for (auto& v : w.data()) v /= total;
  std::vector<std::string> cells(m), classes(d);
  for (std::size_t x = 0; x < m; ++x) cells[x] = "x" + std::to_string(x);
  for (std::size_t i = 0; i < d; ++i) classes[i] = "c" + std::to_string(i);
  return FiniteJointDistribution(std::move(cells), std::move(classes), std::move(w));
}

FeatureDensity random_density(std::mt19937_64& rng, const FiniteJointDistribution& p) {
  std::uniform_real_distribution<double> u(0.2, 1.2);
  const auto feat = p.weights().row_sums();
  FeatureDensity h;
  h.values.resize(p.num_cells());
  double mean = 0.0;
  for (std::size_t x = 0; x < h.values.size(); ++x) {
    h.values[x] = u(rng);
    mean += feat[x] * h.values[x];
  }
  for (auto& v : h.values) v /= mean;
  return h;
}

ClassPriors random_priors(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(0.2, 1.2);
  ClassPriors q;
  q.values.resize(d);
  double total = 0.0;
  for (auto& v : q.values) {
    v = u(rng);
    total += v;
  }
  for (auto& v : q.values) v /= total;
  return q;
}

void BM_SolveRhoBinary(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto p = random_distribution(rng, state.range(0), 2);
  const auto h = random_density(rng, p);
  const auto q = random_priors(rng, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_rho(p, h, q));
  }
}
BENCHMARK(BM_SolveRhoBinary)->Arg(8)->Arg(64)->Arg(512);

void BM_SolveRhoMulticlass(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto p = random_distribution(rng, 64, state.range(0));
  const auto h = random_density(rng, p);
  const auto q = random_priors(rng, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_rho(p, h, q));
  }
}
BENCHMARK(BM_SolveRhoMulticlass)->Arg(3)->Arg(5)->Arg(8);

void BM_CorrectPosteriors(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto p = random_distribution(rng, state.range(0), 4);
  const auto q = random_distribution(rng, state.range(0), 4);
  const auto nf = normal_form(p, q);
  const auto dec = marginals_and_posteriors(p);
  const ClassPriors qp{q.weights().col_sums()};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        correct_posteriors(dec.posteriors, dec.priors, qp, nf.class_densities));
  }
}
BENCHMARK(BM_CorrectPosteriors)->Arg(64)->Arg(1024);

void BM_Classify(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto p = random_distribution(rng, state.range(0), 2);
  const auto q = make_prior_shift(p, ClassPriors{{0.7, 0.3}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(p, q));
  }
}
BENCHMARK(BM_Classify)->Arg(16)->Arg(128);

void BM_SimulateSelection(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto p = random_distribution(rng, 32, 3);
  SelectionModel sel{Table(32, 3, 0.5)};
  const std::uint64_t n = state.range(0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_selection(p, sel, n, ++seed));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SimulateSelection)->Arg(10000)->Arg(100000);

void BM_EstimatePriorsEm(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const auto p = random_distribution(rng, state.range(0), 3);
  const auto target = make_prior_shift(p, ClassPriors{{0.5, 0.3, 0.2}});
  const auto marginal = target.weights().row_sums();
  const auto dec = marginals_and_posteriors(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_priors_em(dec.posteriors, dec.priors, marginal));
  }
}
BENCHMARK(BM_EstimatePriorsEm)->Arg(16)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
