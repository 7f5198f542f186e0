#include <doctest.h>

#include <cmath>

#include "nvcharge/errors.hpp"
#include "nvcharge/screening.hpp"

using namespace nvcharge;

namespace {

ScreeningParams thomas_fermi() { return {}; }

ScreeningParams debye(double T) {
  ScreeningParams p;
  p.model = ScreeningModel::debye;
  p.temperature = T;
  return p;
}

}  // namespace

TEST_CASE("screening lengths follow their density power laws") {
  const auto tf = thomas_fermi();
  const auto db = debye(4.0);
  for (double n : {1e10, 1e16, 1e22}) {
    CHECK(screening_length(64 * n, tf) / screening_length(n, tf) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(screening_length(4 * n, db) / screening_length(n, db) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(screening_length(1e18, debye(16.0)) / screening_length(1e18, db) ==
        doctest::Approx(2.0).epsilon(1e-12));
  for (const auto& p : {tf, db}) {
    double prev = INFINITY;
    for (double e = 0; e <= 30; e += 0.1) {
      const double l = screening_length(std::pow(10.0, e), p);
      CHECK(l < prev);
      prev = l;
    }
  }
}

TEST_CASE("field rises linearly at low density") {
  const auto c = field_curve(thomas_fermi(), 1.0, 1e20, 20);
  const double ref = c.field.front() / c.n_e.front();
  for (std::size_t i = 0; i < c.n_e.size() && c.n_e[i] <= 100.0 * (1 + 1e-12); ++i)
    CHECK(std::abs(c.field[i] / c.n_e[i] / ref - 1.0) < 0.01);
}

TEST_CASE("field decays faster than any power at high density") {
  for (const auto& p : {thomas_fermi(), debye(4.0)}) {
    const auto c = field_curve(p, 1e21, 1e22, 20);
    double prev_slope = INFINITY;
    for (std::size_t i = 1; i < c.n_e.size(); ++i) {
      const double slope =
          std::log(c.field[i] / c.field[i - 1]) / std::log(c.n_e[i] / c.n_e[i - 1]);
      CHECK(slope < prev_slope);
      prev_slope = slope;
    }
    CHECK(prev_slope < -3.0);
  }
}

TEST_CASE("field has exactly one local maximum") {
  for (const auto& p : {thomas_fermi(), debye(4.0), debye(1e-3)}) {
    const auto c = field_curve(p, 1e6, 1e20, 60);
    int sign_changes = 0;
    for (std::size_t i = 2; i < c.field.size(); ++i) {
      const bool up_before = c.field[i - 1] > c.field[i - 2];
      const bool up_now = c.field[i] > c.field[i - 1];
      if (up_before != up_now) ++sign_changes;
      CHECK(c.field[i] > 0.0);
    }
    CHECK(sign_changes == 1);
  }
}

TEST_CASE("maximum sits where the log-slope vanishes") {
  // d ln E / d ln n = 1 - x^2 / (k (1 + x)) with x = d / lambda and lambda ~ n^(-1/k).
  const auto tf = field_insensitive_range(thomas_fermi(), 0.5);
  CHECK(thomas_fermi().distance / screening_length(tf.n_max, thomas_fermi()) ==
        doctest::Approx(3.0 + std::sqrt(15.0)).epsilon(1e-6));
  const auto db = field_insensitive_range(debye(4.0), 0.5);
  CHECK(debye(4.0).distance / screening_length(db.n_max, debye(4.0)) ==
        doctest::Approx(1.0 + std::sqrt(3.0)).epsilon(1e-6));
}

TEST_CASE("insensitive range brackets the maximum at the requested level") {
  for (const auto& p : {thomas_fermi(), debye(4.0)}) {
    const auto r = field_insensitive_range(p, 0.5);
    CHECK(r.n_lo < r.n_max);
    CHECK(r.n_max < r.n_hi);
    const double peak = screened_field(r.n_max, p);
    CHECK(std::abs(screened_field(r.n_lo, p) / (0.5 * peak) - 1.0) < 1e-3);
    CHECK(std::abs(screened_field(r.n_hi, p) / (0.5 * peak) - 1.0) < 1e-3);
    CHECK(r.tol == 0.5);
  }
  const auto tf = field_insensitive_range(thomas_fermi(), 0.5);
  CHECK(tf.n_hi / tf.n_lo > 100.0);
  CHECK(tf.n_lo > 1e15);
  CHECK(tf.n_hi < 1e20);
}

TEST_CASE("plateau widens with tolerance") {
  double prev = 1.0;
  for (double tol : {0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
    const auto r = field_insensitive_range(thomas_fermi(), tol);
    const double width = r.n_hi / r.n_lo;
    CHECK(width > prev);
    prev = width;
  }
}

TEST_CASE("grid curve agrees with the refined range") {
  const auto c = field_curve(thomas_fermi(), 1e12, 1e22, 40, 0.5);
  const auto r = field_insensitive_range(thomas_fermi(), 0.5);
  const double step = std::pow(10.0, 1.0 / 40.0);
  CHECK(c.n_max / r.n_max < step);
  CHECK(r.n_max / c.n_max < step);
  CHECK(c.plateau_lo >= r.n_lo);
  CHECK(c.plateau_lo / r.n_lo < step);
  CHECK(c.plateau_hi <= r.n_hi);
  CHECK(r.n_hi / c.plateau_hi < step);
}

TEST_CASE("Thomas-Fermi maximum lies above the Debye maximum below the Fermi temperature") {
  const auto tf = field_curve(thomas_fermi(), 1e6, 1e24, 40);
  const auto cold = field_curve(debye(1e-3), 1e6, 1e24, 40);
  CHECK(tf.n_max > cold.n_max);
}

TEST_CASE("scaling the distance moves the Thomas-Fermi maximum by s^-6") {
  const auto base = field_insensitive_range(thomas_fermi(), 0.5);
  for (double s : {0.5, 2.0, 3.0}) {
    auto p = thomas_fermi();
    p.distance *= s;
    const auto r = field_insensitive_range(p, 0.5);
    CHECK(r.n_max / base.n_max == doctest::Approx(std::pow(s, -6.0)).epsilon(0.01));
  }
}

TEST_CASE("field is linear in the source prefactor") {
  auto p = thomas_fermi();
  const double e = screened_field(1e17, p);
  p.c_q = 3.0;
  CHECK(screened_field(1e17, p) == doctest::Approx(3.0 * e).epsilon(1e-14));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(screening_length(0.0, thomas_fermi()), DomainError);
  CHECK_THROWS_AS(screened_field(-1.0, thomas_fermi()), DomainError);
  CHECK_THROWS_AS(screening_length(NAN, debye(4.0)), DomainError);
  CHECK_THROWS_AS(field_insensitive_range(thomas_fermi(), 0.5, 1.0, 1e10), RangeNotFound);
  CHECK_THROWS_AS(field_insensitive_range(thomas_fermi(), 0.5, 1e17, 1e30), RangeNotFound);
  CHECK_THROWS_AS(field_insensitive_range(thomas_fermi(), 1.5), InvalidParameter);
  CHECK_THROWS_AS(field_curve(thomas_fermi(), 1e10, 1e5), InvalidParameter);
  auto bad = thomas_fermi();
  bad.epsilon_r = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  CHECK_THROWS_AS(debye(0.0).validate(), InvalidParameter);
}
