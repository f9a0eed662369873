#include <doctest.h>

#include <cmath>
#include <random>

#include "shiftkit/errors.hpp"
#include "shiftkit/normal_form.hpp"
#include "shiftkit/selection.hpp"
#include "support/test_support.hpp"

using namespace shiftkit;
using namespace testsupport;

namespace {

SelectionModel constant_phi(std::size_t m, std::size_t d, double c) {
  return SelectionModel{Table(m, d, c)};
}

SelectionModel cell_phi_d1() {
  SelectionModel sel{Table(2, 2, 0.0)};
  sel.phi(0, 0) = sel.phi(0, 1) = 0.5;
  sel.phi(1, 0) = sel.phi(1, 1) = 0.25;
  return sel;
}

SelectionModel class_phi_d1() {
  SelectionModel sel{Table(2, 2, 0.0)};
  sel.phi(0, 0) = sel.phi(1, 0) = 0.6;
  sel.phi(0, 1) = sel.phi(1, 1) = 0.3;
  return sel;
}

SelectionModel random_phi(std::mt19937_64& rng, std::size_t m, std::size_t d) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  SelectionModel sel{Table(m, d, 0.0)};
  for (auto& v : sel.phi.data()) v = u(rng);
  return sel;
}

}  // namespace

TEST_CASE("constant selection leaves the distribution unchanged") {
  for (double c : {1.0, 0.42, 0.05}) {
    const auto [q, p_s] = sample_distribution(d1(), constant_phi(2, 2, c));
    CHECK(p_s == doctest::Approx(c).epsilon(1e-14));
    CHECK(max_abs_diff(q.weights(), d1().weights()) <= 1e-15);
  }
}

TEST_CASE("cell-dependent selection produces a covariate-shift pair") {
  const auto p = d1();
  const auto [q, p_s] = sample_distribution(p, cell_phi_d1());
  CHECK(p_s == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(max_abs_diff(oracle_posteriors(q), oracle_posteriors(p)) <= 1e-13);
}

TEST_CASE("class-dependent selection produces a prior-shift pair") {
  const auto p = d1();
  const auto [q, p_s] = sample_distribution(p, class_phi_d1());
  CHECK(p_s == doctest::Approx(0.45).epsilon(1e-14));
  const auto hi = class_densities(q, p);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(hi.values(x, i) == doctest::Approx(1.0).epsilon(1e-13));
  const auto priors = oracle_priors(q);
  CHECK(priors[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("the joint density of a selection pair is phi over the selection mass") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 25; ++trial) {
    const auto p = random_distribution(rng, 4, 3);
    const auto sel = random_phi(rng, 4, 3);
    const auto [q, p_s] = sample_distribution(p, sel);
    const Table hbar = oracle_joint_density(q, p);
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::fabs(hbar(x, i) - sel.phi(x, i) / p_s) <= 1e-12);

    // Population and sample are equivalent: the reverse view exists.
    const auto rev = reverse(p, q);
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(rev.source_over_target.values(x, i) > 0.0);
  }
}

TEST_CASE("density chain identities of the selection model") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 25; ++trial) {
    const auto p = random_distribution(rng, 5, 3);
    const auto sel = random_phi(rng, 5, 3);
    const auto [q, p_s] = sample_distribution(p, sel);

    const auto feat = oracle_feature_marginal(p);
    const auto priors = oracle_priors(p);
    const auto h = feature_density(q, p);
    const auto hi = class_densities(q, p);
    const Table post = oracle_posteriors(p);

    for (std::size_t x = 0; x < 5; ++x) {
      // Feature level: h = P[S|cells] / P[S].
      double s_given_h = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s_given_h += post(x, i) * sel.phi(x, i);
      CHECK(std::fabs(h.values[x] - s_given_h / p_s) <= 1e-12);

      // Class level: h_i = P_i[S|cells] / P_i[S], with P_i[S|cells] = phi.
      for (std::size_t i = 0; i < 3; ++i) {
        double p_i_s = 0.0;
        for (std::size_t y = 0; y < 5; ++y)
          p_i_s += p.weight(y, i) / priors[i] * sel.phi(y, i);
        CHECK(std::fabs(hi.values(x, i) - sel.phi(x, i) / p_i_s) <= 1e-12);
      }

      // Sample posteriors: Q[A_i|cells] = P[S and A_i|cells] / P[S|cells].
      const Table qpost = oracle_posteriors(q);
      for (std::size_t i = 0; i < 3; ++i) {
        const double joint = post(x, i) * sel.phi(x, i);
        CHECK(std::fabs(qpost(x, i) - joint / s_given_h) <= 1e-12);
      }
    }
  }
}

TEST_CASE("simulation accepts everything under full selection") {
  const auto sim = simulate_selection(d1(), constant_phi(2, 2, 1.0), 1000, 42);
  CHECK(sim.accepted == 1000);
  CHECK(sim.attempted == 1000);
}

TEST_CASE("simulation is deterministic per seed") {
  const auto a = simulate_selection(d1(), cell_phi_d1(), 100000, 7);
  const auto b = simulate_selection(d1(), cell_phi_d1(), 100000, 7);
  CHECK(a.counts == b.counts);
  const auto c = simulate_selection(d1(), cell_phi_d1(), 100000, 8);
  CHECK(a.counts != c.counts);
}

TEST_CASE("simulation frequencies land inside binomial bands") {
  const auto p = d1();
  const auto sel = cell_phi_d1();
  const auto exact = sample_distribution(p, sel).sample;
  const std::uint64_t n = 1000000;
  const auto sim = simulate_selection(p, sel, n, 20240811);
  const double total = static_cast<double>(sim.accepted);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t i = 0; i < 2; ++i) {
      const double expect = exact.weight(x, i);
      const double freq = static_cast<double>(sim.counts[x * 2 + i]) / total;
      const double sigma = std::sqrt(expect * (1.0 - expect) / total);
      CHECK(std::fabs(freq - expect) <= 3.0 * sigma);
    }
}

TEST_CASE("single-draw simulation either accepts or rejects") {
  bool saw_accept = false;
  bool saw_reject = false;
  for (std::uint64_t seed = 0; seed < 64 && !(saw_accept && saw_reject); ++seed) {
    try {
      const auto sim = simulate_selection(d1(), constant_phi(2, 2, 0.5), 1, seed);
      CHECK(sim.accepted == 1);
      saw_accept = true;
    } catch (const ShiftError& e) {
      CHECK(e.name() == errors::kAllRejected);
      saw_reject = true;
    }
  }
  CHECK(saw_accept);
  CHECK(saw_reject);
}

TEST_CASE("both recovery routes return the population posteriors") {
  const auto p = d1();
  const Table ppost = oracle_posteriors(p);

  SUBCASE("full selection is the identity") {
    const auto [q, p_s] = sample_distribution(p, constant_phi(2, 2, 1.0));
    const auto qdec = marginals_and_posteriors(q);
    const std::vector<double> s{1.0, 1.0};
    const auto via_ratio = recover_posteriors_hein(s, qdec.posteriors, std::nullopt,
                                                   Table(2, 2, 1.0));
    CHECK(max_abs_diff(via_ratio.values, ppost) <= 1e-13);
    const auto via_mixture =
        recover_posteriors_hein(s, qdec.posteriors, qdec.posteriors, std::nullopt);
    CHECK(max_abs_diff(via_mixture.values, ppost) <= 1e-13);
  }

  SUBCASE("class-dependent selection") {
    const auto sel = class_phi_d1();
    const auto [q, p_s] = sample_distribution(p, sel);
    const auto qdec = marginals_and_posteriors(q);

    // P[S|cells] from the table and the selection probabilities.
    std::vector<double> s(2, 0.0);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t i = 0; i < 2; ++i) s[x] += ppost(x, i) * sel.phi(x, i);

    // Ratio route: the class-wise selection probabilities are phi itself.
    const auto via_ratio =
        recover_posteriors_hein(s, qdec.posteriors, std::nullopt, sel.phi);
    CHECK(via_ratio.values(0, 0) == doctest::Approx(0.8).epsilon(1e-13));
    CHECK(max_abs_diff(via_ratio.values, ppost) <= 1e-12);

    // Mixture route: exact not-selected distribution.
    Table rejected(2, 2, 0.0);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t i = 0; i < 2; ++i)
        rejected(x, i) = p.weight(x, i) * (1.0 - sel.phi(x, i)) / (1.0 - p_s);
    const auto rdec = marginals_and_posteriors(FiniteJointDistribution(
        p.feature_labels(), p.class_labels(), rejected));
    const auto via_mixture =
        recover_posteriors_hein(s, qdec.posteriors, rdec.posteriors, std::nullopt);
    CHECK(max_abs_diff(via_mixture.values, ppost) <= 1e-12);
  }
}

TEST_CASE("recovery input validation") {
  const auto qdec = marginals_and_posteriors(d1());
  const std::vector<double> s{1.0, 1.0};
  CHECK_THROWS_AS(recover_posteriors_hein(s, qdec.posteriors, std::nullopt, std::nullopt),
                  ShiftError);
  CHECK_THROWS_AS(
      recover_posteriors_hein(s, qdec.posteriors, qdec.posteriors, Table(2, 2, 1.0)),
      ShiftError);

  // A zero class-wise selection probability against positive sample mass
  // flags the cell.
  Table cs(2, 2, 1.0);
  cs(1, 0) = 0.0;
  const auto out = recover_posteriors_hein(s, qdec.posteriors, std::nullopt, cs);
  CHECK(out.defined[0]);
  CHECK_FALSE(out.defined[1]);
}

TEST_CASE("conditional independence of selection and labels is covariate shift") {
  CHECK(covariate_selection_check(d1(), cell_phi_d1()));
  CHECK_FALSE(covariate_selection_check(d1(), class_phi_d1()));

  // Product selection with a class-dependent factor also fails.
  SelectionModel product{Table(2, 2, 0.0)};
  product.phi(0, 0) = 0.8 * 0.9;
  product.phi(0, 1) = 0.8 * 0.5;
  product.phi(1, 0) = 0.3 * 0.9;
  product.phi(1, 1) = 0.3 * 0.5;
  CHECK_FALSE(covariate_selection_check(d1(), product));

  // Biconditional against posterior invariance on random models.
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = random_distribution(rng, 3, 2);
    SelectionModel sel = random_phi(rng, 3, 2);
    if (trial % 2 == 0) {
      // Make half of the models genuinely cell-only.
      for (std::size_t x = 0; x < 3; ++x) sel.phi(x, 1) = sel.phi(x, 0);
    }
    const auto q = sample_distribution(p, sel).sample;
    const bool invariant = max_abs_diff(oracle_posteriors(q), oracle_posteriors(p)) <= 1e-12;
    CHECK(covariate_selection_check(p, sel) == invariant);
  }
}

TEST_CASE("analysis of constant selection is trivial") {
  const auto analysis = analyze_fjs_selection(
      d1(), constant_phi(2, 2, 0.42), SelectionMode::known_population_priors);
  CHECK(analysis.converged);
  CHECK(analysis.alpha[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(analysis.admissible);
  CHECK(analysis.necessary_bound_ok);
  CHECK(max_abs_diff(analysis.recovered_population_posteriors.values,
                     oracle_posteriors(d1())) <= 1e-10);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(analysis.classwise_selection(x, i) == doctest::Approx(0.42).epsilon(1e-10));
}

TEST_CASE("alpha-one analysis recovers the population priors under prior bias") {
  const auto analysis =
      analyze_fjs_selection(d1(), class_phi_d1(), SelectionMode::alpha_one);
  CHECK(analysis.converged);
  CHECK(std::fabs(analysis.population_priors.values[0] - 0.5) <= 1e-8);
  CHECK(std::fabs(analysis.population_priors.values[1] - 0.5) <= 1e-8);
  CHECK(analysis.admissible);
  CHECK(analysis.necessary_bound_ok);

  // Class-wise selection probabilities reproduce phi.
  const auto sel = class_phi_d1();
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::fabs(analysis.classwise_selection(x, i) - sel.phi(x, i)) <= 1e-8);

  CHECK(max_abs_diff(analysis.recovered_population_posteriors.values,
                     oracle_posteriors(d1())) <= 1e-8);
}

TEST_CASE("known-priors analysis of covariate bias reproduces the closing identity") {
  const auto p = d1();
  const auto sel = cell_phi_d1();
  const auto analysis =
      analyze_fjs_selection(p, sel, SelectionMode::known_population_priors);
  CHECK(analysis.converged);

  // alpha_i (p_i / q_i) is constant across classes (including alpha_d = 1).
  const auto q = sample_distribution(p, sel).sample;
  const auto qp = oracle_priors(q);
  const double c0 = analysis.alpha[0] * 0.5 / qp[0];
  const double c1 = 1.0 * 0.5 / qp[1];
  CHECK(std::fabs(c0 - c1) <= 1e-9);

  // Class-wise selection equals the plain feature-conditional selection.
  const Table post = oracle_posteriors(p);
  for (std::size_t x = 0; x < 2; ++x) {
    double s_given_h = 0.0;
    for (std::size_t i = 0; i < 2; ++i) s_given_h += post(x, i) * sel.phi(x, i);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::fabs(analysis.classwise_selection(x, i) - s_given_h) <= 1e-9);
  }
}

TEST_CASE("product selection models round-trip through the known-priors analysis") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 15; ++trial) {
    const auto p = random_distribution(rng, 4, 3);
    std::uniform_real_distribution<double> u(0.2, 0.95);
    std::vector<double> cell_factor(4), class_factor(3);
    for (auto& v : cell_factor) v = u(rng);
    for (auto& v : class_factor) v = u(rng);
    SelectionModel sel{Table(4, 3, 0.0)};
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t i = 0; i < 3; ++i) sel.phi(x, i) = cell_factor[x] * class_factor[i];

    const auto analysis =
        analyze_fjs_selection(p, sel, SelectionMode::known_population_priors);
    CHECK(analysis.converged);
    CHECK(analysis.admissible);
    CHECK(max_abs_diff(analysis.recovered_population_posteriors.values,
                       oracle_posteriors(p)) <= 1e-8);
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::fabs(analysis.classwise_selection(x, i) - sel.phi(x, i)) <= 1e-8);

    // Reciprocity: g* b* equals the reciprocal joint density up to one
    // constant across all entries.
    const auto [q, p_s] = sample_distribution(p, sel);
    const Table hbar = oracle_joint_density(q, p);
    const Table qpost = oracle_posteriors(q);
    const auto qp = oracle_priors(q);
    const auto pp = oracle_priors(p);
    const Table ppost = oracle_posteriors(p);
    double scale = 0.0;
    for (std::size_t x = 0; x < 4; ++x) {
      double s_given_h = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s_given_h += ppost(x, i) * sel.phi(x, i);
      double dstar = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double alpha_i = (i + 1 < 3) ? analysis.alpha[i] : 1.0;
        dstar += alpha_i * (pp[i] / qp[i]) * qpost(x, i);
      }
      const double g_star = p_s / (s_given_h * dstar);
      for (std::size_t i = 0; i < 3; ++i) {
        const double alpha_i = (i + 1 < 3) ? analysis.alpha[i] : 1.0;
        const double b_star = alpha_i * pp[i] / qp[i];
        const double product = g_star * b_star * hbar(x, i);
        if (scale == 0.0) scale = product;
        CHECK(product == doctest::Approx(scale).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("a non-factorizable selection is rejected") {
  SelectionModel sel{Table(2, 2, 0.0)};
  sel.phi(0, 0) = 0.9;
  sel.phi(0, 1) = 0.2;
  sel.phi(1, 0) = 0.3;
  sel.phi(1, 1) = 0.8;
  CHECK_THROWS_AS(analyze_fjs_selection(d1(), sel, SelectionMode::alpha_one), ShiftError);
  try {
    analyze_fjs_selection(d1(), sel, SelectionMode::alpha_one);
  } catch (const ShiftError& e) {
    CHECK(e.name() == errors::kNotFJS);
  }
}

TEST_CASE("necessary criterion") {
  SUBCASE("no shift keeps the unit bound") {
    const ClassPriors p{{0.5, 0.5}};
    const auto crit = necessary_criterion(p, p, Table(2, 2, 1.0));
    CHECK(crit.all_ok);
  }
  SUBCASE("prior bias satisfies the bound everywhere") {
    const auto analysis =
        analyze_fjs_selection(d1(), class_phi_d1(), SelectionMode::alpha_one);
    CHECK(analysis.necessary_bound_ok);
  }
  SUBCASE("a violating table is flagged at the exact cells") {
    const ClassPriors pop{{0.5, 0.5}};
    const ClassPriors smp{{2.0 / 3.0, 1.0 / 3.0}};
    // Bounds: class 1: (2/3 / 0.5) * min(0.75, 1.5) = 1; class 2: 0.5.
    Table cs(2, 2, 0.0);
    cs(0, 0) = 0.9;
    cs(0, 1) = 0.6;  // violates the 0.5 bound
    cs(1, 0) = 0.8;
    cs(1, 1) = 0.4;
    const auto crit = necessary_criterion(pop, smp, cs);
    CHECK_FALSE(crit.all_ok);
    CHECK(crit.ok[0]);
    CHECK_FALSE(crit.ok[1]);
    CHECK(crit.ok[2]);
    CHECK(crit.ok[3]);
  }
}
