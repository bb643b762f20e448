#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "protfit/error.hpp"
#include "protfit/evaluation.hpp"
#include "test_support.hpp"

using namespace protfit;

namespace {

CompositeProtection all_connected() { return CompositeProtection({{ProtectionScheme("none", TripZone{}), 1.0}}); }

CompositeProtection pair(double f1, FractionSum policy = FractionSum::must_be_one) {
  return CompositeProtection({{ProtectionScheme("A", TripZone::rectangle(0.2, 70.0)), f1},
                              {ProtectionScheme("B", TripZone({{0.05, 40.0}, {2.0, 60.0}})), 1.0 - f1}},
                             policy);
}

// Pairwise form: exactly zero for a constant sample.
double variance(const std::vector<double>& x) {
  double s = 0.0;
  for (double a : x) {
    for (double b : x) s += (a - b) * (a - b);
  }
  const auto n = static_cast<double>(x.size());
  return s / (2.0 * n * n);
}

UncertaintySpec small_spec(std::uint64_t seed) {
  UncertaintySpec spec;
  spec.gamma_levels = {0.0, 0.2, 0.5, 0.8};
  spec.trials = 60;
  spec.m_eval = 2000;
  spec.seed = seed;
  spec.eval_seed = 5;
  return spec;
}

const SimplifiedModel kFitted{0.5, 0.1, 65.0, 1.5, 50.0};

}  // namespace

TEST_CASE("MAE of identical composites is zero and MAE is symmetric") {
  Rng rng = Rng::stream(51, "test-mae");
  for (int t = 0; t < 10; ++t) {
    const auto a = protfit::testing::random_composite(rng, 3);
    const auto b = protfit::testing::random_composite(rng, 2);
    CHECK(mae(a, a, 1000, 1).epsilon == 0.0);
    const double ab = mae(a, b, 1000, 1).epsilon;
    CHECK(ab == doctest::Approx(mae(b, a, 1000, 1).epsilon).epsilon(1e-15));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("MAE against a zone equals its area within sampling error") {
  // staircase with area (5-1)*30 + (5-3)*(60-30) = 180 of the 500 box units -> 0.36
  const CompositeProtection truth({{ProtectionScheme("z", TripZone({{1.0, 30.0}, {3.0, 60.0}})), 1.0}});
  const double area = 0.36;
  const std::size_t m = 5000;
  const double sigma = std::sqrt(area * (1.0 - area) / static_cast<double>(m));
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = mae(all_connected(), truth, m, seed, true);
    CHECK(std::abs(r.epsilon - area) <= 3.0 * sigma);
    REQUIRE(r.errors.size() == m);
    CHECK(std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / m == doctest::Approx(r.epsilon));
  }
  // half-area zone
  const CompositeProtection half({{ProtectionScheme("h", TripZone::rectangle(0.0, 50.0)), 1.0}});
  CHECK(std::abs(mae(all_connected(), half, m, 4).epsilon - 0.5) <= 3.0 * 0.5 / std::sqrt(double(m)));
}

TEST_CASE("evaluator reuses points and matches mae()") {
  const auto a = pair(0.3);
  const auto b = pair(0.6);
  const MaeEvaluator eval(a, 3000, 8);
  CHECK(eval.size() == 3000);
  CHECK(eval(b) == mae(a, b, 3000, 8).epsilon);
}

TEST_CASE("perturbation examples") {
  const auto c = pair(0.5);
  SUBCASE("zero gammas return the composite unchanged") {
    const auto p = perturb_fractions(c, {{"A", 0.0}, {"B", 0.0}});
    CHECK(p.entries()[0].fraction == 0.5);
    CHECK(p.entries()[1].fraction == 0.5);
  }
  SUBCASE("renormalized") {
    const auto p = perturb_fractions(c, {{"A", 0.2}});
    CHECK(p.entries()[0].fraction == doctest::Approx(0.6 / 1.1).epsilon(1e-15));
    CHECK(p.entries()[1].fraction == doctest::Approx(0.5 / 1.1).epsilon(1e-15));
    CHECK(p.entries()[0].fraction == doctest::Approx(0.545).epsilon(1e-3));
    CHECK(p.fraction_sum() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("unnormalized") {
    const auto p = perturb_fractions(c, {{"A", 0.2}}, false);
    CHECK(p.entries()[0].fraction == doctest::Approx(0.6));
    CHECK(p.fraction_sum() == doctest::Approx(1.1));
    CHECK_THROWS_AS(perturb_fractions(c, {{"A", 0.9}, {"B", 0.9}}, false), ConfigError);
  }
  SUBCASE("gamma = -1 removes a protection, below -1 is rejected") {
    const auto p = perturb_fractions(c, {{"A", -1.0}});
    CHECK(p.entries()[0].fraction == 0.0);
    CHECK(p.entries()[1].fraction == 1.0);
    CHECK_THROWS_AS(perturb_fractions(c, {{"A", -1.5}}), ConfigError);
    CHECK_THROWS_AS(perturb_fractions(c, {{"A", -1.0}, {"B", -1.0}}), ConfigError);
  }
  CHECK_THROWS_AS(perturb_fractions(c, {{"Z", 0.1}}), ConfigError);
}

TEST_CASE("renormalized perturbations always sum to one") {
  Rng rng = Rng::stream(52, "test-perturb");
  for (int t = 0; t < 500; ++t) {
    const auto c = protfit::testing::random_composite(rng, 1 + rng.below(6));
    std::map<std::string, double> gammas;
    for (const auto& e : c.entries()) gammas[e.scheme.name()] = rng.uniform(-0.9, 0.9);
    CHECK(std::abs(perturb_fractions(c, gammas).fraction_sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("uncertainty spec validation") {
  UncertaintySpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.trials = 29;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = UncertaintySpec{};
  spec.gamma_levels = {1.0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = UncertaintySpec{};
  spec.matrix_targets = {"A"};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = UncertaintySpec{};
  spec.targets = {"missing"};
  CHECK_THROWS_AS(uncertainty_sweep(pair(0.5), kFitted, spec), ConfigError);
}

TEST_CASE("uncertainty sweep") {
  const auto c = pair(0.4);
  const auto spec = small_spec(3);
  const auto r = uncertainty_sweep(c, kFitted, spec);
  REQUIRE(r.levels.size() == 4);
  CHECK(r.nominal_mae == mae(harden(kFitted), c, spec.m_eval, spec.eval_seed).epsilon);

  SUBCASE("level zero reproduces the nominal MAE exactly") {
    const auto& l0 = r.levels[0];
    REQUIRE(l0.mae.size() == spec.trials);
    CHECK(variance(l0.mae) == 0.0);
    for (double x : l0.mae) CHECK(x == r.nominal_mae);
    CHECK(l0.mean == r.nominal_mae);
    CHECK(l0.p12_5 == r.nominal_mae);
    CHECK(l0.p87_5 == r.nominal_mae);
  }
  SUBCASE("summary statistics") {
    for (const auto& lev : r.levels) {
      CHECK(lev.mae.size() + lev.skipped == spec.trials);
      CHECK(lev.mean == doctest::Approx(std::accumulate(lev.mae.begin(), lev.mae.end(), 0.0) / lev.mae.size()));
      CHECK(lev.p12_5 <= lev.p87_5);
      CHECK(lev.p12_5 == quantile(lev.mae, 0.125));
    }
    CHECK(r.levels[3].p87_5 - r.levels[3].p12_5 > r.levels[1].p87_5 - r.levels[1].p12_5);
  }
  SUBCASE("deterministic and independent of thread count") {
    setenv("PROTFIT_THREADS", "1", 1);
    const auto serial = uncertainty_sweep(c, kFitted, spec);
    setenv("PROTFIT_THREADS", "4", 1);
    const auto parallel = uncertainty_sweep(c, kFitted, spec);
    unsetenv("PROTFIT_THREADS");
    for (std::size_t l = 0; l < r.levels.size(); ++l) {
      CHECK(serial.levels[l].mae == r.levels[l].mae);
      CHECK(parallel.levels[l].mae == r.levels[l].mae);
    }
  }
  SUBCASE("independent seeds agree within sampling error") {
    const auto other = uncertainty_sweep(c, kFitted, small_spec(4));
    for (std::size_t l = 1; l < r.levels.size(); ++l) {
      const auto& a = r.levels[l];
      const auto& b = other.levels[l];
      const double se = std::sqrt(variance(a.mae) / a.mae.size() + variance(b.mae) / b.mae.size());
      CHECK(std::abs(a.mean - b.mean) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("excessive perturbations are skipped and reported") {
  auto spec = small_spec(6);
  spec.gamma_levels = {0.9};
  spec.renormalize = false;
  spec.targets = {"A"};
  const auto c = pair(0.9);
  // A at 0.9 scaled by up to 1.9 pushes the unnormalized sum beyond 1.5 in some trials
  const auto r = uncertainty_sweep(c, kFitted, spec);
  CHECK(r.levels[0].skipped > 0);
  CHECK(r.levels[0].skipped < spec.trials);
  CHECK(r.diagnostics.size() == r.levels[0].skipped);
}

TEST_CASE("two-target matrix") {
  auto spec = small_spec(7);
  spec.matrix_targets = {"A", "B"};
  spec.trials = 30;
  const auto m = uncertainty_matrix(pair(0.4), kFitted, spec);
  CHECK(m.row_target == "A");
  CHECK(m.col_target == "B");
  REQUIRE(m.mean.size() == 16);
  CHECK(m.at(0, 0) == mae(harden(kFitted), pair(0.4), spec.m_eval, spec.eval_seed).epsilon);
  const auto again = uncertainty_matrix(pair(0.4), kFitted, spec);
  CHECK(again.mean == m.mean);
  spec.matrix_targets.clear();
  CHECK_THROWS_AS(uncertainty_matrix(pair(0.4), kFitted, spec), ConfigError);
}

TEST_CASE("refit sweep scores new fits against the nominal composite") {
  auto spec = small_spec(8);
  spec.gamma_levels = {0.0, 0.5};
  spec.trials = 30;
  spec.refit = true;
  RefitSettings rs;
  rs.sampler.seed = 8;
  rs.fit.n_starts = 2;
  rs.smoothing = SmoothingConfig::defaults();
  CHECK_THROWS_AS(uncertainty_sweep(pair(0.4), kFitted, spec), ConfigError);
  const auto r = uncertainty_sweep(pair(0.4), kFitted, spec, rs);
  REQUIRE(r.levels[0].mae.size() == 30);
  CHECK(variance(r.levels[0].mae) == 0.0);
  for (double x : r.levels[1].mae) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("quantile") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({0.0, 10.0}, 0.125) == doctest::Approx(1.25));
  CHECK(quantile({4.0}, 0.875) == 4.0);
  CHECK(std::isnan(quantile({}, 0.5)));
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {1, 4, 9, 16}) == doctest::Approx(1.0));
  // ties take average ranks: y ranks 1.5, 1.5, 3, 4; rho = 4.5 / sqrt(5 * 4.5)
  const double rho = spearman_rho({1, 2, 3, 4}, {5, 5, 6, 7});
  CHECK(rho == doctest::Approx(4.5 / std::sqrt(22.5)).epsilon(1e-14));
  CHECK_THROWS(spearman_rho({1.0}, {1.0}));
}
