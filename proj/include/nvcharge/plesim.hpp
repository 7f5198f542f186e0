#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nvcharge/telegraph.hpp"

namespace nvcharge {

struct PLEScanConfig {
  double detuning_start = 0.0;  ///< Hz
  double detuning_stop = 0.0;   ///< Hz
  std::size_t n_points = 0;
  double dwell_per_point = 0.0;  ///< s
  double laser_power = 0.0;      ///< W

  void validate() const;
  std::vector<double> detunings() const;
};

/// One Lorentzian line component. `amplitude` is the bright-state count rate
/// at the line center (above the shared offset).
struct LorentzPeak {
  double center = 0.0;     ///< Hz
  double fwhm = 0.0;       ///< Hz
  double amplitude = 0.0;  ///< counts/s

  double shape(double detuning) const;  ///< peak-normalized, 1 at center
  double value(double detuning) const { return amplitude * shape(detuning); }
  /// Integral over detuning: (pi / 2) * amplitude * fwhm.
  double area() const;
  void validate() const;
};

struct PLESpectrum {
  std::vector<double> detunings;    ///< Hz, strictly increasing
  std::vector<double> intensities;  ///< counts/s
  /// Standard errors per point; empty when unknown.
  std::vector<double> uncertainties;
  std::size_t n_repetitions = 1;

  std::size_t size() const noexcept { return detunings.size(); }
  void validate() const;
};

/// Maps detuning to the charge-switching rates during a scan:
/// k_ion(delta) = c * P_L * E(delta) with E the line's excitation profile
/// normalized to 1 at its strongest peak, and a constant k_rec.
struct ChargeRule {
  double ionization_coefficient = 0.0;  ///< c, 1/(s W)
  double k_rec = 0.0;                   ///< 1/s

  void validate() const;  ///< ConfigurationError on negative or non-finite values
};

struct PLELine {
  std::vector<LorentzPeak> peaks;
  double background = 0.0;  ///< counts/s from NV0 and stray light
  /// Standard deviation of a per-repetition Gaussian shift of all centers. Off by default.
  double center_jitter = 0.0;  ///< Hz

  void validate() const;
  double emission(double detuning) const;    ///< sum of peak values
  double excitation(double detuning) const;  ///< emission / largest amplitude
};

double ionization_rate_at(const ChargeRule& rule, const PLELine& line, double laser_power,
                          double detuning);

struct PLEScan {
  PLESpectrum spectrum;
  std::vector<double> bright_fraction;  ///< time fraction in NV- at each point
  ChargeState final_state = ChargeState::NVminus;
};

/// One stepwise scan. The charge state evolves exactly over each dwell with
/// the detuning-dependent rates; counts are Poisson with mean
/// t_bright * emission + dwell * background.
PLEScan simulate_ple_scan(const PLEScanConfig& config, const PLELine& line, const ChargeRule& rule,
                          std::uint64_t seed, ChargeState initial = ChargeState::NVminus);

/// Consecutive scans without repump: each repetition starts in the charge
/// state the previous one ended in. Repetition r draws from its own stream.
std::vector<PLESpectrum> simulate_ple_repetitions(const PLEScanConfig& config, const PLELine& line,
                                                  const ChargeRule& rule, std::size_t repetitions,
                                                  std::uint64_t seed,
                                                  ChargeState initial = ChargeState::NVminus);

/// Long-time average: P-(delta) * emission(delta) + background.
PLESpectrum stationary_spectrum(const PLEScanConfig& config, const PLELine& line,
                                const ChargeRule& rule);

/// Pointwise mean weighted by n_repetitions. With two or more scans the
/// standard error of the mean is filled in.
PLESpectrum average_spectra(const std::vector<PLESpectrum>& scans);

/// Trapezoidal integral of (intensity - offset) over detuning.
double spectrum_area(const PLESpectrum& spectrum, double offset = 0.0);

struct PeakUncertainty {
  double center = 0.0, fwhm = 0.0, amplitude = 0.0;
};

struct MultiLorentzFit {
  std::vector<LorentzPeak> peaks;  ///< sorted by center
  std::vector<PeakUncertainty> sigma;
  double offset = 0.0;
  double sigma_offset = 0.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
  bool weighted = false;     ///< true when the spectrum carried uncertainties
  double max_correlation = 0.0;
  bool overlapping = false;  ///< some parameter pair correlated beyond 0.99
  int iterations = 0;
};

struct MultiLorentzInit {
  std::vector<LorentzPeak> peaks;
  double offset = 0.0;
};

/// Weighted Levenberg-Marquardt fit of n_peaks Lorentzians plus a constant.
/// Without `init`, peaks are seeded from local maxima of a smoothed copy.
MultiLorentzFit fit_multi_lorentz(const PLESpectrum& spectrum, std::size_t n_peaks,
                                  const std::optional<MultiLorentzInit>& init = std::nullopt);

struct FwhmRow {
  double power = 0.0;
  std::size_t peak = 0;
  double fwhm = 0.0;
  double sigma = 0.0;
};

enum class BroadeningModel { constant, saturation };

const char* to_string(BroadeningModel m);

struct BroadeningTrend {
  std::size_t peak = 0;
  double constant_fwhm = 0.0, constant_sigma = 0.0, constant_chi2 = 0.0, constant_aic = 0.0;
  double gamma0 = 0.0, saturation_power = 0.0, saturation_chi2 = 0.0, saturation_aic = 0.0;
  BroadeningModel selected = BroadeningModel::constant;
  bool weighted = true;
};

struct FwhmTable {
  std::vector<FwhmRow> rows;
  std::vector<BroadeningTrend> trends;  ///< empty when fewer than two powers
  std::string notice;
};

/// Fits each spectrum, then per peak compares Gamma = Gamma0 with
/// Gamma = Gamma0 sqrt(1 + P / P_sat) by AIC (small-sample corrected when
/// possible). Ties go to the constant model.
FwhmTable fwhm_vs_power(const std::map<double, PLESpectrum>& spectra_by_power, std::size_t n_peaks);

/// Gamma0 sqrt(1 + P / P_sat)
double saturation_broadening(double power, double gamma0, double saturation_power);

}  // namespace nvcharge
