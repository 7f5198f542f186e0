#include "nvcharge/screening.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "nvcharge/errors.hpp"

namespace nvcharge {

namespace {

constexpr double kElementaryCharge = 1.602176634e-19;  // C
constexpr double kEpsilon0 = 8.8541878128e-12;         // F/m
constexpr double kHbar = 1.054571817e-34;              // J s
constexpr double kElectronMass = 9.1093837015e-31;     // kg
constexpr double kBoltzmann = 1.380649e-23;            // J/K

}  // namespace

void ScreeningParams::validate() const {
  if (!std::isfinite(epsilon_r) || !(epsilon_r > 1)) throw InvalidParameter("epsilon_r must be > 1");
  if (!std::isfinite(distance) || !(distance > 0)) throw InvalidParameter("distance must be > 0");
  if (!std::isfinite(c_q) || !(c_q > 0)) throw InvalidParameter("c_q must be > 0");
  if (model == ScreeningModel::debye && (!std::isfinite(temperature) || !(temperature > 0)))
    throw InvalidParameter("Debye screening needs a positive temperature");
  if (model == ScreeningModel::thomas_fermi &&
      (!std::isfinite(effective_mass_ratio) || !(effective_mass_ratio > 0)))
    throw InvalidParameter("effective mass ratio must be > 0");
}

double screening_length(double n_e, const ScreeningParams& params) {
  params.validate();
  if (!std::isfinite(n_e) || !(n_e > 0)) throw DomainError("electron density must be > 0");
  const double eps = params.epsilon_r * kEpsilon0;
  const double e2 = kElementaryCharge * kElementaryCharge;
  if (params.model == ScreeningModel::debye)
    return std::sqrt(eps * kBoltzmann * params.temperature / (e2 * n_e));
  const double m = params.effective_mass_ratio * kElectronMass;
  const double k_f2 = std::cbrt(3.0 * M_PI * M_PI * n_e) * std::cbrt(3.0 * M_PI * M_PI * n_e);
  const double fermi_energy = kHbar * kHbar * k_f2 / (2.0 * m);
  return std::sqrt(2.0 * eps * fermi_energy / (3.0 * e2 * n_e));
}

double screened_field(double n_e, const ScreeningParams& params) {
  const double lambda = screening_length(n_e, params);
  const double d = params.distance;
  const double x = d / lambda;
  const double sources = params.c_q * n_e * d * d * d;
  return kElementaryCharge * sources * (1.0 + x) * std::exp(-x) /
         (4.0 * M_PI * params.epsilon_r * kEpsilon0 * d * d);
}

FieldCurve field_curve(const ScreeningParams& params, double n_lo, double n_hi,
                       int points_per_decade, double tol) {
  params.validate();
  if (!(n_lo > 0) || !(n_hi > n_lo) || !std::isfinite(n_hi))
    throw InvalidParameter("field curve needs 0 < n_lo < n_hi");
  if (points_per_decade < 1) throw InvalidParameter("points_per_decade must be >= 1");
  if (!(tol > 0 && tol < 1)) throw InvalidParameter("tol must be in (0, 1)");
  const double decades = std::log10(n_hi / n_lo);
  const auto n = static_cast<std::size_t>(std::ceil(decades * points_per_decade - 1e-9)) + 1;
  FieldCurve c;
  c.tol = tol;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = i + 1 == n ? n_hi
                                : n_lo * std::pow(10.0, static_cast<double>(i) /
                                                            static_cast<double>(points_per_decade));
    c.n_e.push_back(v);
    c.field.push_back(screened_field(v, params));
  }
  const auto imax = static_cast<std::size_t>(std::max_element(c.field.begin(), c.field.end()) -
                                             c.field.begin());
  c.n_max = c.n_e[imax];
  const double level = (1.0 - tol) * c.field[imax];
  std::size_t lo = imax, hi = imax;
  while (lo > 0 && c.field[lo - 1] >= level) --lo;
  while (hi + 1 < n && c.field[hi + 1] >= level) ++hi;
  c.plateau_lo = c.n_e[lo];
  c.plateau_hi = c.n_e[hi];
  return c;
}

InsensitiveRange field_insensitive_range(const ScreeningParams& params, double tol,
                                         double search_lo, double search_hi) {
  params.validate();
  if (!(tol > 0 && tol < 1)) throw InvalidParameter("tol must be in (0, 1)");
  if (!(search_lo > 0) || !(search_hi > search_lo) || !std::isfinite(search_hi))
    throw InvalidParameter("search range must satisfy 0 < lo < hi");

  auto field_at = [&](double log_n) { return screened_field(std::exp(log_n), params); };
  const double a = std::log(search_lo), b = std::log(search_hi);
  const int n = std::max(16, static_cast<int>(std::ceil((b - a) / std::log(10.0) * 20)));
  std::vector<double> grid(n + 1), values(n + 1);
  for (int i = 0; i <= n; ++i) {
    grid[i] = a + (b - a) * i / n;
    values[i] = field_at(grid[i]);
  }
  const int imax = static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
  if (imax == 0 || imax == n || !(values[imax] > 0))
    throw RangeNotFound("field maximum is not inside the searched density range");

  const auto [log_max, neg_peak] = boost::math::tools::brent_find_minima(
      [&](double x) { return -field_at(x); }, grid[imax - 1], grid[imax + 1], 52);
  const double level = (1.0 - tol) * -neg_peak;

  // Bisection on log n between a point below `level` and one above it.
  auto crossing = [&](double below, double above) {
    for (int it = 0; it < 200 && std::abs(above - below) > 1e-14 * std::max(1.0, std::abs(above));
         ++it) {
      const double mid = 0.5 * (below + above);
      (field_at(mid) >= level ? above : below) = mid;
    }
    return 0.5 * (below + above);
  };
  int lo = imax;
  while (lo > 0 && values[lo] >= level) --lo;
  int hi = imax;
  while (hi < n && values[hi] >= level) ++hi;
  if (values[lo] >= level || values[hi] >= level)
    throw RangeNotFound("field does not fall below the plateau level inside the searched range");

  InsensitiveRange r;
  r.tol = tol;
  r.n_max = std::exp(log_max);
  r.n_lo = std::exp(crossing(grid[lo], std::min(log_max, grid[lo + 1])));
  r.n_hi = std::exp(crossing(grid[hi], std::max(log_max, grid[hi - 1])));
  return r;
}

}  // namespace nvcharge
