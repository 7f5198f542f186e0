#include "nvcharge/telegraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nvcharge/errors.hpp"

namespace nvcharge {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidParameter(std::string(name) + " must be finite");
}

// Generates the alternating sequence of dwells. The first state is drawn
// from the stationary distribution when no initial state is given.
class ChargePath {
 public:
  ChargePath(const TelegraphParams& p, std::optional<ChargeState> initial, std::uint64_t seed)
      : params_(p), rng_(detail::make_engine(seed, detail::Stream::switching)) {
    if (initial) {
      state_ = *initial;
    } else {
      const double p_bright = stationary_population(p.k_ion, p.k_rec);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      state_ = u(rng_) < p_bright ? ChargeState::NVminus : ChargeState::NVzero;
    }
  }

  ChargeState state() const noexcept { return state_; }

  // Duration of the current dwell; +inf when the leaving rate is zero.
  double draw_dwell() {
    const double rate = state_ == ChargeState::NVminus ? params_.k_ion : params_.k_rec;
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return unit_exp_(rng_) / rate;
  }

  void flip() noexcept {
    state_ = state_ == ChargeState::NVminus ? ChargeState::NVzero : ChargeState::NVminus;
  }

 private:
  TelegraphParams params_;
  std::mt19937_64 rng_;
  std::exponential_distribution<double> unit_exp_{1.0};
  ChargeState state_{ChargeState::NVminus};
};

}  // namespace

namespace detail {

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace detail

void TelegraphParams::validate() const {
  require_finite(k_ion, "k_ion");
  require_finite(k_rec, "k_rec");
  require_finite(gamma_bright, "gamma_bright");
  require_finite(gamma_dark, "gamma_dark");
  if (k_ion < 0 || k_rec < 0 || gamma_bright < 0 || gamma_dark < 0)
    throw InvalidParameter("telegraph rates must be non-negative");
  if (gamma_bright < gamma_dark)
    throw InvalidParameter("gamma_bright must be >= gamma_dark");
}

void TimeTrace::validate() const {
  if (!(bin_width > 0) || !std::isfinite(bin_width))
    throw InvalidParameter("trace bin_width must be positive");
  if (counts.empty()) throw InvalidParameter("trace has no bins");
  for (auto c : counts)
    if (c < 0) throw InvalidParameter("trace counts must be non-negative");
}

double stationary_population(double k_ion, double k_rec) {
  require_finite(k_ion, "k_ion");
  require_finite(k_rec, "k_rec");
  if (k_ion < 0 || k_rec < 0) throw InvalidParameter("rates must be non-negative");
  if (k_ion + k_rec <= 0) throw UndefinedStationaryState();
  return k_rec / (k_ion + k_rec);
}

TimeTrace simulate_trace(const TelegraphParams& params, double duration, double bin_width,
                         std::optional<ChargeState> initial, std::uint64_t seed) {
  params.validate();
  require_finite(duration, "duration");
  require_finite(bin_width, "bin_width");
  if (!(bin_width > 0)) throw InvalidParameter("bin_width must be positive");
  if (duration < bin_width) throw InvalidParameter("duration must be >= bin_width");

  const auto n_bins = static_cast<std::size_t>(std::floor(duration / bin_width * (1.0 + 1e-12)));
  double t_end = static_cast<double>(n_bins) * bin_width;
  if (std::abs(t_end - duration) < 1e-9 * duration) t_end = duration;

  TimeTrace trace;
  trace.bin_width = bin_width;
  trace.counts.assign(n_bins, 0);

  ChargePath path(params, initial, seed);
  auto totals_rng = detail::make_engine(seed, detail::Stream::photon_totals);
  auto split_rng = detail::make_engine(seed, detail::Stream::photon_split);

  const auto bin_of = [&](double t) {
    return std::min(n_bins - 1, static_cast<std::size_t>(t / bin_width));
  };

  double t = 0.0;
  while (t < t_end) {
    const double t1 = std::min(t_end, t + path.draw_dwell());
    const double rate =
        path.state() == ChargeState::NVminus ? params.gamma_bright : params.gamma_dark;
    const double len = t1 - t;
    if (rate > 0 && len > 0) {
      std::poisson_distribution<std::int64_t> total(rate * len);
      std::int64_t remaining = total(totals_rng);
      double remaining_len = len;
      const std::size_t b0 = bin_of(t);
      const std::size_t b1 = bin_of(std::nextafter(t1, t));
      for (std::size_t b = b0; b <= b1 && remaining > 0; ++b) {
        if (b == b1) {
          trace.counts[b] += remaining;
          break;
        }
        const double lo = std::max(t, static_cast<double>(b) * bin_width);
        const double hi = std::min(t1, static_cast<double>(b + 1) * bin_width);
        const double p = std::clamp((hi - lo) / remaining_len, 0.0, 1.0);
        std::binomial_distribution<std::int64_t> piece(remaining, p);
        const std::int64_t k = piece(split_rng);
        trace.counts[b] += k;
        remaining -= k;
        remaining_len -= hi - lo;
      }
    }
    t = t1;
    path.flip();
  }
  return trace;
}

DwellTimes dwell_times(const TelegraphParams& params, double duration, std::uint64_t seed,
                       std::optional<ChargeState> initial) {
  params.validate();
  require_finite(duration, "duration");
  if (!(duration > 0)) throw InvalidParameter("duration must be positive");

  DwellTimes out;
  ChargePath path(params, initial, seed);
  double t = 0.0;
  while (t < duration) {
    const double dwell = std::min(duration - t, path.draw_dwell());
    (path.state() == ChargeState::NVminus ? out.bright : out.dark).push_back(dwell);
    t += dwell;
    path.flip();
  }
  return out;
}

TimeTrace rebin(const TimeTrace& trace, std::size_t factor) {
  trace.validate();
  if (factor == 0) throw RebinningError("rebin factor must be positive");
  TimeTrace out;
  out.bin_width = trace.bin_width * static_cast<double>(factor);
  out.t0 = trace.t0;
  const std::size_t n = trace.counts.size() / factor;
  if (n == 0) throw RebinningError("rebin factor exceeds the number of bins");
  out.counts.resize(n, 0);
  for (std::size_t i = 0; i < n * factor; ++i) out.counts[i / factor] += trace.counts[i];
  return out;
}

}  // namespace nvcharge
