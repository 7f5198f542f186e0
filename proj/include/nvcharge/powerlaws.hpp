#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace nvcharge {

struct PowerPoint {
  double power = 0.0;  ///< W
  double rate = 0.0;   ///< 1/s
  std::optional<double> sigma;
};

/// Rate measurements versus laser power. Repeated powers are allowed and
/// treated as replicates.
struct PowerSeries {
  std::vector<PowerPoint> points;

  bool all_sigmas() const;
  std::size_t distinct_powers() const;
  void validate() const;
};

enum class ReplicateMode { pool, average };

/// Collapses replicates at identical powers into their inverse-variance
/// weighted mean (plain mean when sigmas are missing).
PowerSeries average_replicates(const PowerSeries& series);

/// k = a P^2 / (1 + P / P_s)
double ionization_law(double power, double a, double saturation_power);

struct IonizationFit {
  double a = 0.0;
  double sigma_a = 0.0;
  double saturation_power = 0.0;
  double sigma_saturation_power = 0.0;  ///< 0 when held fixed
  bool saturation_fixed = false;
  double chi2 = 0.0;
  std::size_t n_points = 0;
  bool weighted = true;
};

/// Weighted least squares of the saturation-modified quadratic law. With a
/// fixed saturation power only `a` is free and the problem is linear;
/// otherwise `a` is profiled out and P_s found by a bracketed 1-D search.
IonizationFit fit_ionization(const PowerSeries& series,
                             std::optional<double> saturation_power_fixed = std::nullopt,
                             ReplicateMode mode = ReplicateMode::pool);

enum class RecombinationModel { linear, quadratic };

struct ModelScore {
  double coefficient = 0.0;  ///< c1 [1/(s W)] or c2 [1/(s W^2)]
  double sigma = 0.0;
  double chi2 = 0.0;
  double aic = 0.0;
};

struct ModelComparison {
  ModelScore linear;
  ModelScore quadratic;
  RecombinationModel selected = RecombinationModel::linear;
  bool uninformative = false;
  bool weighted = true;
  std::size_t n_points = 0;
};

/// Fits k = c1 P and k = c2 P^2, both through the origin, and selects by
/// AIC (small-sample corrected below 40 points). Ties go to linear.
ModelComparison compare_recombination_models(const PowerSeries& series,
                                             ReplicateMode mode = ReplicateMode::pool);

/// Akaike criterion with the small-sample correction applied for n < 40.
/// `neg2loglik` is chi^2 for known sigmas.
double corrected_aic(double neg2loglik, int n_params, std::size_t n_points);

const char* to_string(RecombinationModel m);

}  // namespace nvcharge
