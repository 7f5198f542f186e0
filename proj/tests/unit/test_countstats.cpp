#include <doctest.h>

#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nvcharge/countstats.hpp"
#include "nvcharge/errors.hpp"
#include "test_support.hpp"

using namespace nvcharge;

namespace {

double pmf_sum(const CountPmf& pmf) { return std::accumulate(pmf.p.begin(), pmf.p.end(), 0.0); }

// Independent quadrature of the occupation-time mixture: adaptive
// Gauss-Kronrod on the continuous part plus the two no-switch atoms.
double mixture_oracle(const TelegraphParams& p, double T, std::int64_t n) {
  const double pb = stationary_population(p.k_ion, p.k_rec);
  auto poisson = [&](double tb) {
    const double mean = p.gamma_bright * tb + p.gamma_dark * (T - tb);
    return std::exp(static_cast<double>(n) * std::log(mean) - mean - std::lgamma(n + 1.0));
  };
  auto integrand = [&](double tb) {
    return detail::occupation_density(p.k_ion, p.k_rec, pb, tb, T) * poisson(tb);
  };
  // Split where the Poisson mean equals n; the integrand peaks there.
  const double split = std::clamp((static_cast<double>(n) - p.gamma_dark * T) /
                                      (p.gamma_bright - p.gamma_dark), 0.0, T);
  double cont = 0.0;
  for (auto [a, b] : {std::pair{0.0, split}, std::pair{split, T}})
    if (b > a)
      cont += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 15,
                                                                             1e-11);
  return cont + pb * std::exp(-p.k_ion * T) * poisson(T) +
         (1.0 - pb) * std::exp(-p.k_rec * T) * poisson(0.0);
}

}  // namespace

TEST_CASE("scaled Bessel functions agree with the standard library") {
  for (double z : {1e-8, 0.3, 2.0, 17.0, 120.0, 480.0}) {
    CHECK(detail::scaled_bessel_i(0, z) ==
          doctest::Approx(std::exp(-z) * std::cyl_bessel_i(0.0, z)).epsilon(1e-12));
    CHECK(detail::scaled_bessel_i(1, z) ==
          doctest::Approx(std::exp(-z) * std::cyl_bessel_i(1.0, z)).epsilon(1e-12));
  }
  // Asymptotic branch joins smoothly.
  CHECK(detail::scaled_bessel_i(0, 500.0 * (1 + 1e-12)) ==
        doctest::Approx(detail::scaled_bessel_i(0, 500.0 * (1 - 1e-12))).epsilon(1e-12));
}

TEST_CASE("occupation density integrates with the atoms to one") {
  for (auto [ki, kr, T] : {std::tuple{0.5, 11.0, 0.1}, std::tuple{40.0, 60.0, 0.05},
                           std::tuple{3.0, 3.0, 1.0}}) {
    const double pb = stationary_population(ki, kr);
    const double cont = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return detail::occupation_density(ki, kr, pb, t, T); }, 0.0, T, 20, 1e-13);
    CHECK(cont + pb * std::exp(-ki * T) + (1 - pb) * std::exp(-kr * T) ==
          doctest::Approx(1.0).epsilon(1e-11));
    // Mean occupation is stationary.
    const double mean = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return t * detail::occupation_density(ki, kr, pb, t, T); }, 0.0, T, 20,
        1e-13);
    CHECK(mean + pb * std::exp(-ki * T) * T == doctest::Approx(pb * T).epsilon(1e-10));
  }
}

TEST_CASE("pmf is a normalized distribution with the stationary mean") {
  const std::vector<TelegraphParams> regimes = {
      {0.5, 11.0, 2.0e4, 1.0e3}, {0.05, 0.05, 3.0e3, 1.0e2}, {300.0, 500.0, 4.0e3, 2.0e2},
      {5.0, 5.0, 1.0e3, 1.0e3}, {0.0, 5.0, 2.0e3, 1.0e2}};
  for (const auto& p : regimes)
    for (double T : {1e-4, 0.01, 0.1, 1.0}) {
      const auto pmf = count_distribution(p, T);
      CHECK(std::all_of(pmf.p.begin(), pmf.p.end(), [](double v) { return v >= 0.0; }));
      CHECK(pmf_sum(pmf) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(pmf.tail_mass < 1e-6);
      const double pb = stationary_population(p.k_ion, p.k_rec);
      const double expected = T * (pb * p.gamma_bright + (1 - pb) * p.gamma_dark);
      CHECK(pmf.mean() == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("pmf matches the Markov-modulated Poisson matrix exponential") {
  const std::vector<std::pair<TelegraphParams, double>> cases = {
      {{0.5, 11.0, 2.0e4, 1.0e3}, 0.005}, {{30.0, 20.0, 1.5e3, 1.0e2}, 0.05},
      {{5.0, 5.0, 800.0, 200.0}, 0.1}, {{0.05, 0.05, 3.0e3, 1.0e2}, 0.02}};
  for (const auto& [p, T] : cases) {
    const auto pmf = count_distribution(p, T);
    const int n_max = static_cast<int>(pmf.p.size()) - 1;
    const auto oracle = testing::mmpp_pmf(p, T, n_max, stationary_population(p.k_ion, p.k_rec));
    double worst = 0.0;
    for (int n = 0; n <= n_max; ++n) worst = std::max(worst, std::abs(pmf.p[n] - oracle[n]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("pmf matches adaptive quadrature of the occupation mixture") {
  const TelegraphParams p{0.5, 11.0, 2.0e4, 1.0e3};
  const double T = 0.05;
  const auto pmf = count_distribution(p, T);
  for (std::int64_t n : {0, 50, 300, 600, 900, 1000, 1100, 1300}) {
    const double oracle = mixture_oracle(p, T, n);
    CHECK(pmf.p[n] == doctest::Approx(oracle).epsilon(1e-7).scale(1e-14));
  }
}

TEST_CASE("zero switching reduces to a Poisson law") {
  const TelegraphParams p{0.0, 0.0, 1.0e3, 10.0};
  const auto bright = count_distribution(p, 0.02, ChargeState::NVminus);
  const auto dark = count_distribution(p, 0.02, ChargeState::NVzero);
  for (int n = 0; n < 60; ++n) {
    CHECK(bright.p[n] == doctest::Approx(testing::poisson_pmf(20.0, n)).epsilon(1e-10).scale(1e-300));
    if (n < static_cast<int>(dark.p.size()))
      CHECK(dark.p[n] == doctest::Approx(testing::poisson_pmf(0.2, n)).epsilon(1e-10).scale(1e-300));
  }
  CHECK_THROWS_AS(count_distribution(p, 0.02), UndefinedStationaryState);
}

TEST_CASE("pmf agrees with simulated window counts") {
  const TelegraphParams p{2.0, 6.0, 2.0e3, 2.0e2};
  const auto trace = simulate_trace(p, 2000.0, 0.01, std::nullopt, 7);
  const std::vector<double> times{0.05};
  const auto hist = histograms_from_trace(trace, times).front();
  const auto pmf = count_distribution(p, 0.05);
  double tv = 0.0;
  const double N = static_cast<double>(hist.total());
  for (std::size_t n = 0; n < pmf.p.size(); ++n) {
    auto it = hist.bin_counts.find(static_cast<std::int64_t>(n));
    const double emp = it == hist.bin_counts.end() ? 0.0 : static_cast<double>(it->second) / N;
    tv += std::abs(emp - pmf.p[n]);
  }
  CHECK(0.5 * tv < 0.03);
}

TEST_CASE("histograms from traces") {
  TimeTrace t{0.01, 0.0, {1, 2, 3, 4, 5, 6, 7}};
  const std::vector<double> times{0.01, 0.02, 0.03};
  const auto h = histograms_from_trace(t, times);
  REQUIRE(h.size() == 3);
  CHECK(h[0].total() == 7);
  CHECK(h[1].total() == 3);
  CHECK(h[1].bin_counts.at(3) == 1);
  CHECK(h[1].bin_counts.at(7) == 1);
  CHECK(h[1].bin_counts.at(11) == 1);
  CHECK(h[2].total() == 2);
  const std::vector<double> bad{0.015};
  CHECK_THROWS_AS(histograms_from_trace(t, bad), RebinningError);
  const std::vector<double> too_long{1.0};
  CHECK_THROWS(histograms_from_trace(t, too_long));
}

TEST_CASE("duplicating every histogram shrinks sigma by sqrt 2") {
  const TelegraphParams truth{0.5, 11.0, 2.0e4, 1.0e3};
  const auto trace = simulate_trace(truth, 120.0, 0.01, std::nullopt, 21);
  const std::vector<double> times{0.01, 0.05};
  auto hist = histograms_from_trace(trace, times);
  const auto init = initial_guess(trace);
  const auto bounds = default_bounds(trace);
  const auto once = fit_histograms(hist, init, bounds);
  auto twice_h = hist;
  twice_h.insert(twice_h.end(), hist.begin(), hist.end());
  const auto twice = fit_histograms(twice_h, init, bounds);
  CHECK(twice.params.k_ion == doctest::Approx(once.params.k_ion).epsilon(1e-4));
  CHECK(twice.params.k_rec == doctest::Approx(once.params.k_rec).epsilon(1e-4));
  CHECK(twice.sigma.k_ion == doctest::Approx(once.sigma.k_ion / std::sqrt(2.0)).epsilon(0.01));
  CHECK(twice.sigma.k_rec == doctest::Approx(once.sigma.k_rec / std::sqrt(2.0)).epsilon(0.01));
  CHECK(twice.loglik == doctest::Approx(2.0 * once.loglik).epsilon(1e-9));
}

TEST_CASE("trace fit recovers reference-regime rates") {
  const TelegraphParams truth{0.5, 11.0, 2.0e4, 1.0e3};
  const auto trace = simulate_trace(truth, 300.0, 0.01, std::nullopt, 4);
  const std::vector<double> times{0.01, 0.02, 0.05, 0.1};
  const auto fit = fit_trace(trace, times);
  CHECK(fit.converged);
  CHECK_FALSE(fit.unidentifiable);
  CHECK(std::abs(fit.params.k_ion - truth.k_ion) < 3.0 * fit.sigma.k_ion);
  CHECK(std::abs(fit.params.k_rec - truth.k_rec) < 3.0 * fit.sigma.k_rec);
  CHECK(fit.sigma.k_ion <= 0.2);
  CHECK(fit.params.gamma_bright == doctest::Approx(truth.gamma_bright).epsilon(0.02));
  CHECK(fit.sigma.k_ion >= fit.sigma_information.k_ion * 0.999);
}

TEST_CASE("equal brightness is flagged as unidentifiable") {
  const TelegraphParams truth{1.0, 4.0, 3.0e3, 3.0e3};
  const auto trace = simulate_trace(truth, 60.0, 0.01, std::nullopt, 5);
  const std::vector<double> times{0.01, 0.05};
  const auto fit = fit_trace(trace, times);
  CHECK(fit.unidentifiable);
}

TEST_CASE("threshold dwell estimator") {
  const TelegraphParams truth{0.5, 2.0, 2.0e4, 1.0e3};
  const auto trace = simulate_trace(truth, 600.0, 0.01, std::nullopt, 13);
  const auto est = threshold_dwell_estimate(trace, 100.0);
  CHECK(est.valid);
  CHECK(est.k_ion == doctest::Approx(truth.k_ion).epsilon(0.2));
  CHECK(est.k_rec == doctest::Approx(truth.k_rec).epsilon(0.2));

  // Threshold below the dark mode: everything looks bright.
  CHECK_THROWS_AS(threshold_dwell_estimate(trace, -1.0), InsufficientEvents);
  const auto poor = threshold_dwell_estimate(trace, 12.0);
  CHECK_FALSE(poor.valid);

  const auto quiet = simulate_trace({0.0, 1.0, 2.0e4, 1.0e3}, 10.0, 0.01, ChargeState::NVminus, 1);
  CHECK_THROWS_AS(threshold_dwell_estimate(quiet, 100.0), InsufficientEvents);
}

TEST_CASE("likelihood prefers the truth over distant parameters") {
  const TelegraphParams truth{0.5, 11.0, 2.0e4, 1.0e3};
  const auto trace = simulate_trace(truth, 100.0, 0.01, std::nullopt, 9);
  const std::vector<double> times{0.02};
  const auto hist = histograms_from_trace(trace, times);
  const double at_truth = histogram_loglik(truth, hist);
  CHECK(at_truth > histogram_loglik({5.0, 11.0, 2.0e4, 1.0e3}, hist));
  CHECK(at_truth > histogram_loglik({0.5, 1.0, 2.0e4, 1.0e3}, hist));
  CHECK(at_truth > histogram_loglik({0.5, 11.0, 1.5e4, 1.0e3}, hist));
}
