#include <doctest.h>

#include <cmath>

#include "nvcharge/optimize.hpp"

using namespace nvcharge::optimize;

TEST_CASE("Nelder-Mead finds the Rosenbrock minimum") {
  const Objective f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const Box box{{-5, -5}, {5, 5}};
  const auto r = nelder_mead(f, {-1.2, 1.0}, {0.5, 0.5}, box);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("Nelder-Mead respects the box") {
  const Objective f = [](std::span<const double> x) { return (x[0] + 3) * (x[0] + 3) + x[1] * x[1]; };
  const Box box{{0, -1}, {2, 1}};
  const auto r = nelder_mead(f, {1.0, 0.5}, {0.3, 0.3}, box);
  CHECK(r.x[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-5));
}

TEST_CASE("finite-difference derivatives of a quadratic are exact") {
  const Objective f = [](std::span<const double> x) {
    return 3 * x[0] * x[0] + 2 * x[0] * x[1] + 5 * x[1] * x[1] + x[0];
  };
  const Box box{{-10, -10}, {10, 10}};
  const std::vector<double> x{1.0, -2.0}, h{1e-3, 1e-3};
  const auto H = hessian(f, x, h, box);
  CHECK(H(0, 0) == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(H(0, 1) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(H(1, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(H(1, 1) == doctest::Approx(10.0).epsilon(1e-6));
  const auto g = gradient(f, x, h, box);
  CHECK(g(0) == doctest::Approx(6 - 4 + 1).epsilon(1e-8));
  CHECK(g(1) == doctest::Approx(2 - 20).epsilon(1e-8));

  // At a bound the stencil moves inside; a quadratic's Hessian is unchanged.
  const std::vector<double> edge{-10.0, 10.0};
  const auto He = hessian(f, edge, h, box);
  CHECK(He(0, 0) == doctest::Approx(6.0).epsilon(1e-5));
  CHECK(He(1, 1) == doctest::Approx(10.0).epsilon(1e-5));
}
