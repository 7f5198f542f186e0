#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvcharge/telegraph.hpp"

namespace nvcharge {

/// Occurrences of each photon number among non-overlapping counting windows.
struct CountHistogram {
  double counting_time = 0.0;
  std::map<std::int64_t, std::int64_t> bin_counts;  // photon number -> occurrences

  std::int64_t total() const;
  double mean() const;
  void validate() const;
};

/// Photon-number distribution p[n], n = 0 .. p.size()-1.
struct CountPmf {
  double counting_time = 0.0;
  std::vector<double> p;
  double tail_mass = 0.0;  ///< 1 - sum(p)

  double mean() const;
};

/// Per-parameter 1-sigma values share the layout of the parameters.
struct RateFit {
  TelegraphParams params;
  TelegraphParams sigma;              ///< reported uncertainty
  TelegraphParams sigma_information;  ///< from the observed-information matrix alone
  std::string covariance = "observed_information";
  double loglik = 0.0;
  std::size_t n_histograms = 0;
  bool unidentifiable = false;
  bool converged = false;
  int evaluations = 0;
};

struct FitBounds {
  TelegraphParams lower;
  TelegraphParams upper;
};

struct FitOptions {
  int max_restarts = 4;
  int max_evaluations = 6000;
  double rel_tolerance = 1e-11;
};

struct ThresholdEstimate {
  double k_ion = 0.0;
  double k_rec = 0.0;
  std::size_t bright_dwells = 0;
  std::size_t dark_dwells = 0;
  bool valid = false;
  std::string note;
};

/// Photon-count pmf of a switching emitter over a counting window T.
///
/// The window's bright occupation time t has two atoms (no switch inside the
/// window, weights p_b e^{-k_ion T} and p_d e^{-k_rec T}) and a continuous
/// density on (0, T) that is written with modified Bessel functions I0, I1.
/// Given t the count is Poisson with mean gamma_b t + gamma_d (T - t); the
/// mixture integral is done with Gauss-Legendre panels whose width follows
/// the Poisson kernel (unit width in 2*sqrt(mean)) and the switching scale.
///
/// Truncated at mean + 12 sqrt(mean) and extended until the tail mass is
/// below 1e-6; throws TruncationError if that is not reached.
CountPmf count_distribution(const TelegraphParams& params, double counting_time,
                            std::optional<ChargeState> initial = std::nullopt);

/// pmf at selected photon numbers only (what a likelihood needs).
std::vector<double> count_probabilities(const TelegraphParams& params, double counting_time,
                                        std::span<const std::int64_t> photon_numbers,
                                        std::optional<ChargeState> initial = std::nullopt);

/// Non-overlapping windows; a trailing partial window is dropped. Each
/// counting time must be an integer multiple of the trace bin width.
std::vector<CountHistogram> histograms_from_trace(const TimeTrace& trace,
                                                  std::span<const double> counting_times);

/// Summed log-likelihood of independent windows over all histograms.
double histogram_loglik(const TelegraphParams& params, std::span<const CountHistogram> histograms);

/// Joint maximum-likelihood fit of shared (gamma_b, gamma_d, k_ion, k_rec).
/// Bounded Nelder-Mead with restarts; sigma from the observed information.
/// Throws ConvergenceError<RateFit> when the restart budget runs out.
RateFit fit_histograms(std::span<const CountHistogram> histograms, const TelegraphParams& init,
                       const FitBounds& bounds, const FitOptions& options = {});

/// fit_histograms on windows cut from one trace, with data-driven start and
/// bounds. Windows of different counting times overlap in time, so the
/// summed likelihood is a composite one; `sigma` is the block sandwich
/// H^-1 S H^-1 where S sums window scores over time blocks that are long
/// compared with the charge correlation time.
RateFit fit_trace(const TimeTrace& trace, std::span<const double> counting_times,
                  const FitOptions& options = {});

TelegraphParams initial_guess(const TimeTrace& trace);
FitBounds default_bounds(const TimeTrace& trace);

/// Dwell-time estimator: bins above `threshold` are NV-, runs are dwells,
/// the first and last (censored) runs are discarded and each rate is the
/// inverse mean dwell. Dwells shorter than about one bin are merged into
/// their neighbours, so both rates are biased low once 1/k approaches the
/// bin width. Throws InsufficientEvents below 5 switches; `valid` is false
/// when the threshold does not separate the two count modes.
ThresholdEstimate threshold_dwell_estimate(const TimeTrace& trace, double threshold);

namespace detail {

/// e^{-z} I_nu(z) for nu in {0, 1}.
double scaled_bessel_i(int nu, double z);

/// Continuous part of the bright occupation-time density on (0, T), for
/// initial bright/dark probabilities p_bright, 1 - p_bright.
double occupation_density(double k_ion, double k_rec, double p_bright, double t_bright,
                          double counting_time);

}  // namespace detail

}  // namespace nvcharge
