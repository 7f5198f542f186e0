#include <doctest.h>

#include <cmath>
#include <random>

#include "nvcharge/errors.hpp"
#include "nvcharge/powerlaws.hpp"

using namespace nvcharge;

namespace {

PowerSeries synthetic(double (*law)(double), double noise, std::uint64_t seed,
                      bool with_sigma = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  PowerSeries s;
  for (int i = 1; i <= 8; ++i) {
    const double P = 50e-9 * i;
    const double k = law(P);
    PowerPoint pt{P, k * (1.0 + noise * z(rng)), std::nullopt};
    if (with_sigma) pt.sigma = noise * k;
    s.points.push_back(pt);
  }
  return s;
}

double linear_law(double P) { return 7.4e7 * P; }
double quadratic_law(double P) { return 2.0e14 * P * P; }

}  // namespace

TEST_CASE("ionization law has a quadratic low-power limit") {
  const double ps = 4.5e-6;
  for (double x : {1e-2, 1e-1, 1.0}) {
    const double P = x * ps;
    CHECK(ionization_law(2 * P, 1.0, ps) / ionization_law(P, 1.0, ps) ==
          doctest::Approx(4.0 * (1.0 + x) / (1.0 + 2.0 * x)).epsilon(1e-14));
  }
  const double P = ps / 1e4;
  CHECK(std::abs(ionization_law(2 * P, 1.0, ps) / ionization_law(P, 1.0, ps) - 4.0) < 1e-3);
  CHECK(ionization_law(ps, 2.0, ps) == doctest::Approx(ps * ps));
}

TEST_CASE("fixed saturation power fit recovers a") {
  const double ps = 4.5e-6, a = 2.3e13;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  PowerSeries s;
  for (int i = 1; i <= 10; ++i) {
    const double P = 0.2e-6 * i;
    const double k = ionization_law(P, a, ps);
    s.points.push_back({P, k * (1 + 0.05 * z(rng)), 0.05 * k});
  }
  const auto fit = fit_ionization(s, ps);
  CHECK(fit.saturation_fixed);
  CHECK(fit.saturation_power == ps);
  CHECK(fit.a == doctest::Approx(a).epsilon(0.05));
  CHECK(fit.sigma_a > 0);
}

TEST_CASE("free saturation power is recovered from exact data") {
  const double ps = 2e-6, a = 1e13;
  PowerSeries s;
  for (int i = 1; i <= 12; ++i) {
    const double P = 0.5e-6 * i;
    s.points.push_back({P, ionization_law(P, a, ps), 0.01 * ionization_law(P, a, ps)});
  }
  const auto fit = fit_ionization(s);
  CHECK_FALSE(fit.saturation_fixed);
  CHECK(fit.saturation_power == doctest::Approx(ps).epsilon(1e-6));
  CHECK(fit.a == doctest::Approx(a).epsilon(1e-6));
  INFO("chi2 = " << fit.chi2);
  CHECK(fit.chi2 < 1e-8);
}

TEST_CASE("model selection picks the generating law") {
  int linear_right = 0, quadratic_right = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    linear_right += compare_recombination_models(synthetic(linear_law, 0.1, seed)).selected ==
                    RecombinationModel::linear;
    quadratic_right +=
        compare_recombination_models(synthetic(quadratic_law, 0.1, 1000 + seed)).selected ==
        RecombinationModel::quadratic;
  }
  CHECK(linear_right >= 37);
  CHECK(quadratic_right >= 37);
}

TEST_CASE("missing uncertainties fall back to equal weights") {
  const auto cmp = compare_recombination_models(synthetic(linear_law, 0.1, 3, false));
  CHECK_FALSE(cmp.weighted);
  CHECK(cmp.selected == RecombinationModel::linear);
}

TEST_CASE("all-zero rates are uninformative and default to linear") {
  PowerSeries s{{{1e-7, 0.0, 0.1}, {2e-7, 0.0, 0.1}, {3e-7, 0.0, 0.1}}};
  const auto cmp = compare_recombination_models(s);
  CHECK(cmp.uninformative);
  CHECK(cmp.selected == RecombinationModel::linear);
  CHECK(cmp.linear.coefficient == 0.0);
}

TEST_CASE("replicates pool or average") {
  PowerSeries s{{{1e-7, 1.0, 0.1}, {1e-7, 1.2, 0.1}, {2e-7, 2.0, 0.2}, {3e-7, 3.1, 0.3}}};
  const auto avg = average_replicates(s);
  REQUIRE(avg.points.size() == 3);
  CHECK(avg.points[0].rate == doctest::Approx(1.1));
  CHECK(*avg.points[0].sigma == doctest::Approx(0.1 / std::sqrt(2.0)));
  const auto pooled = compare_recombination_models(s, ReplicateMode::pool);
  const auto averaged = compare_recombination_models(s, ReplicateMode::average);
  CHECK(pooled.n_points == 4);
  CHECK(averaged.n_points == 3);
  // Inverse-variance averaging preserves the weighted normal equations.
  CHECK(pooled.linear.coefficient == doctest::Approx(averaged.linear.coefficient).epsilon(1e-12));
}

TEST_CASE("power series errors") {
  PowerSeries same{{{1e-7, 1.0, 0.1}, {1e-7, 1.1, 0.1}, {1e-7, 0.9, 0.1}}};
  CHECK_THROWS_AS(compare_recombination_models(same), DegenerateData);
  PowerSeries two{{{1e-7, 1.0, 0.1}, {2e-7, 2.0, 0.1}}};
  CHECK_THROWS_AS(compare_recombination_models(two), InvalidParameter);
  CHECK_THROWS_AS(fit_ionization(two), InvalidParameter);
  PowerSeries negative{{{-1e-7, 1.0, 0.1}}};
  CHECK_THROWS_AS(negative.validate(), InvalidParameter);
  PowerSeries bad_sigma{{{1e-7, 1.0, 0.0}}};
  CHECK_THROWS_AS(bad_sigma.validate(), InvalidParameter);
}

TEST_CASE("corrected AIC") {
  CHECK(corrected_aic(10.0, 1, 8) == doctest::Approx(10.0 + 2.0 + 4.0 / 6.0));
  CHECK(corrected_aic(10.0, 1, 50) == doctest::Approx(12.0));
  CHECK(corrected_aic(10.0, 2, 3) == doctest::Approx(14.0));
}
