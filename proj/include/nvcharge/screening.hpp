#pragma once

#include <vector>

namespace nvcharge {

enum class ScreeningModel { thomas_fermi, debye };

struct ScreeningParams {
  double epsilon_r = 5.7;            ///< relative permittivity (diamond)
  double distance = 100e-9;          ///< d, source charge to NV, m
  double c_q = 1.0;                  ///< source density per electron density
  ScreeningModel model = ScreeningModel::thomas_fermi;
  double temperature = 4.0;          ///< K, Debye model only
  double effective_mass_ratio = 0.57;  ///< m* / m_e, Thomas-Fermi only

  void validate() const;
};

/// Thomas-Fermi: sqrt(2 eps eps0 E_F / (3 e^2 n)), E_F = hbar^2 (3 pi^2 n)^(2/3) / (2 m*).
/// Debye: sqrt(eps eps0 k_B T / (e^2 n)). DomainError for n <= 0.
double screening_length(double n_e, const ScreeningParams& params);

/// E(n) = e (c_q n d^3) (1 + d/lambda) exp(-d/lambda) / (4 pi eps eps0 d^2):
/// the screened point-charge field times the number of sources within d^3.
double screened_field(double n_e, const ScreeningParams& params);

struct FieldCurve {
  std::vector<double> n_e;    ///< 1/m^3, log-spaced
  std::vector<double> field;  ///< V/m
  double n_max = 0.0;         ///< grid argmax
  double plateau_lo = 0.0;    ///< lowest grid density with field >= (1 - tol) max
  double plateau_hi = 0.0;    ///< highest such density
  double tol = 0.0;
};

FieldCurve field_curve(const ScreeningParams& params, double n_lo, double n_hi,
                       int points_per_decade = 20, double tol = 0.5);

struct InsensitiveRange {
  double n_lo = 0.0, n_hi = 0.0, n_max = 0.0, tol = 0.0;
};

/// Log-grid scan over [search_lo, search_hi], Brent refinement of the
/// maximum, and bisection of both crossings of (1 - tol) E(n_max).
/// RangeNotFound when the maximum or a crossing is not inside the grid.
InsensitiveRange field_insensitive_range(const ScreeningParams& params, double tol,
                                         double search_lo = 1.0, double search_hi = 1e40);

}  // namespace nvcharge
