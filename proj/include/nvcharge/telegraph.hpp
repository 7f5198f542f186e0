#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace nvcharge {

enum class ChargeState { NVminus, NVzero };

/// Rates of a blinking emitter. NV- is the bright state, NV0 the dark one.
struct TelegraphParams {
  double k_ion = 0.0;         ///< NV- -> NV0, 1/s
  double k_rec = 0.0;         ///< NV0 -> NV-, 1/s
  double gamma_bright = 0.0;  ///< detected counts/s while NV-
  double gamma_dark = 0.0;    ///< detected counts/s while NV0 (background)

  /// Throws InvalidParameter unless all rates are finite, non-negative and
  /// gamma_bright >= gamma_dark.
  void validate() const;
};

/// Binned photon counts.
struct TimeTrace {
  double bin_width = 0.0;
  double t0 = 0.0;
  std::vector<std::int64_t> counts;

  std::size_t size() const noexcept { return counts.size(); }
  double duration() const noexcept { return bin_width * static_cast<double>(counts.size()); }
  void validate() const;
};

struct DwellTimes {
  std::vector<double> bright;
  std::vector<double> dark;
};

/// Fraction of time spent in NV-: k_rec / (k_ion + k_rec).
double stationary_population(double k_ion, double k_rec);

/// Exact event-driven simulation. Dwell times are exponential; photons of a
/// dwell are a Poisson number spread uniformly over it, so a bin that
/// straddles a switch gets counts in proportion to the time spent in each
/// state. `initial == std::nullopt` draws the first state from the
/// stationary distribution.
///
/// The switching events come from an RNG stream that depends only on the
/// seed, so traces simulated with different bin widths share the same charge
/// history and the same total photon count.
TimeTrace simulate_trace(const TelegraphParams& params, double duration, double bin_width,
                         std::optional<ChargeState> initial, std::uint64_t seed);

/// Dwell durations of the switching process over [0, duration). The last
/// dwell of each trajectory is truncated at `duration` and still reported.
DwellTimes dwell_times(const TelegraphParams& params, double duration, std::uint64_t seed,
                       std::optional<ChargeState> initial = std::nullopt);

/// Sums `factor` consecutive bins; a trailing partial group is dropped.
TimeTrace rebin(const TimeTrace& trace, std::size_t factor);

namespace detail {

// Independent, reproducible RNG streams derived from one user seed.
enum class Stream : std::uint64_t { switching = 1, photon_totals = 2, photon_split = 3, misc = 4 };

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

}  // namespace detail

}  // namespace nvcharge
