#include "nvcharge/countstats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <spdlog/spdlog.h>

#include "nvcharge/errors.hpp"
#include "nvcharge/optimize.hpp"

namespace nvcharge {

namespace detail {

double scaled_bessel_i(int nu, double z) {
  if (z < 0) throw DomainError("scaled_bessel_i: negative argument");
  if (z <= 500.0) return std::cyl_bessel_i(static_cast<double>(nu), z) * std::exp(-z);
  // Hankel expansion; at z > 500 six terms are far below double precision.
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (k * 8.0 * z);
    sum += term;
  }
  return sum / std::sqrt(2.0 * M_PI * z);
}

double occupation_density(double k_ion, double k_rec, double p_bright, double t_bright,
                          double counting_time) {
  const double a = k_ion, b = k_rec;
  const double tau = t_bright, s = counting_time - t_bright;
  if (tau <= 0 || s <= 0) return 0.0;
  const double p_dark = 1.0 - p_bright;
  const double z = 2.0 * std::sqrt(a * b * tau * s);
  // 2 I1(z)/z scaled by e^{-z}; tends to 1 at z = 0.
  const double ratio1 = z < 1e-6 ? std::exp(-z) * (1.0 + z * z / 8.0)
                                 : 2.0 * scaled_bessel_i(1, z) / z;
  const double bracket = (p_bright * a + p_dark * b) * scaled_bessel_i(0, z) +
                         a * b * (p_bright * tau + p_dark * s) * ratio1;
  return std::exp(-a * tau - b * s + z) * bracket;
}

}  // namespace detail

namespace {

constexpr double kTailTolerance = 1e-6;

double log_poisson(std::int64_t n, double lambda, double log_factorial) {
  if (lambda <= 0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::log(lambda) - lambda - log_factorial;
}

// Discretized occupation-time mixture: two atoms plus weighted nodes in
// increasing order of the conditional Poisson mean.
struct Mixture {
  bool single_poisson = false;
  double lambda_lo = 0.0, lambda_hi = 0.0;
  double atom_dark = 0.0, atom_bright = 0.0;
  std::vector<double> lambda, log_lambda, weight;

  double pmf(std::int64_t n) const {
    const double lf = std::lgamma(static_cast<double>(n) + 1.0);
    if (single_poisson) return std::exp(log_poisson(n, lambda_lo, lf));
    double p = atom_bright * std::exp(log_poisson(n, lambda_hi, lf)) +
               atom_dark * std::exp(log_poisson(n, lambda_lo, lf));
    const double root = std::sqrt(static_cast<double>(n));
    const double lo = root > 8.0 ? (root - 8.0) * (root - 8.0) : 0.0;
    const double hi = (root + 8.0) * (root + 8.0);
    auto first = std::lower_bound(lambda.begin(), lambda.end(), lo);
    auto last = std::upper_bound(first, lambda.end(), hi);
    const double dn = static_cast<double>(n);
    for (auto it = first; it != last; ++it) {
      const std::size_t j = static_cast<std::size_t>(it - lambda.begin());
      p += weight[j] * std::exp(dn * log_lambda[j] - lambda[j] - lf);
    }
    return p;
  }
};

double initial_bright_probability(const TelegraphParams& p, std::optional<ChargeState> initial) {
  if (initial) return *initial == ChargeState::NVminus ? 1.0 : 0.0;
  return stationary_population(p.k_ion, p.k_rec);
}

Mixture build_mixture(const TelegraphParams& p, double T, double p_bright) {
  Mixture m;
  m.lambda_lo = p.gamma_dark * T;
  m.lambda_hi = p.gamma_bright * T;
  const double contrast = p.gamma_bright - p.gamma_dark;
  if (!(contrast * T > 0)) {
    m.single_poisson = true;
    return m;
  }
  const double a = p.k_ion, b = p.k_rec;
  m.atom_bright = p_bright * std::exp(-a * T);
  m.atom_dark = (1.0 - p_bright) * std::exp(-b * T);
  if (a == 0.0 && p_bright == 1.0) return m;
  if (b == 0.0 && p_bright == 0.0) return m;

  // Panel edges: uniform in u = 2 sqrt(lambda) (the Poisson kernel is about
  // one unit wide there) merged with a grid that resolves the switching
  // time scale 1/(k_ion + k_rec).
  std::vector<double> edges{0.0, T};
  const double u_lo = 2.0 * std::sqrt(m.lambda_lo), u_hi = 2.0 * std::sqrt(m.lambda_hi);
  const auto n_u = static_cast<std::size_t>(std::ceil(u_hi - u_lo));
  for (std::size_t k = 1; k < n_u; ++k) {
    const double u = u_lo + (u_hi - u_lo) * static_cast<double>(k) / static_cast<double>(n_u);
    edges.push_back((0.25 * u * u - m.lambda_lo) / contrast);
  }
  const double n_t = std::clamp(std::ceil(2.0 * (a + b) * T), 4.0, 20000.0);
  for (int k = 1; k < static_cast<int>(n_t); ++k) edges.push_back(T * k / n_t);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [T](double x, double y) { return y - x < 1e-13 * T; }),
              edges.end());
  edges.back() = T;

  using Rule = boost::math::quadrature::gauss<double, 10>;
  const auto& xs = Rule::abscissa();
  const auto& ws = Rule::weights();
  const std::size_t n_panels = edges.size() - 1;
  m.lambda.reserve(n_panels * 10);
  m.weight.reserve(n_panels * 10);
  for (std::size_t k = 0; k < n_panels; ++k) {
    const double mid = 0.5 * (edges[k] + edges[k + 1]);
    const double half = 0.5 * (edges[k + 1] - edges[k]);
    std::array<double, 10> taus{}, wts{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      taus[2 * i] = mid - half * xs[i];
      taus[2 * i + 1] = mid + half * xs[i];
      wts[2 * i] = wts[2 * i + 1] = half * ws[i];
    }
    std::array<std::size_t, 10> order{};
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return taus[x] < taus[y]; });
    for (auto i : order) {
      const double w = wts[i] * detail::occupation_density(a, b, p_bright, taus[i], T);
      m.lambda.push_back(m.lambda_lo + contrast * taus[i]);
      m.weight.push_back(w);
    }
  }
  m.log_lambda.resize(m.lambda.size());
  std::transform(m.lambda.begin(), m.lambda.end(), m.log_lambda.begin(),
                 [](double l) { return std::log(l); });
  return m;
}

void validate_window(double T) {
  if (!std::isfinite(T) || !(T > 0)) throw InvalidParameter("counting_time must be positive");
}

}  // namespace

std::int64_t CountHistogram::total() const {
  std::int64_t t = 0;
  for (const auto& [n, c] : bin_counts) t += c;
  return t;
}

double CountHistogram::mean() const {
  double s = 0.0;
  for (const auto& [n, c] : bin_counts) s += static_cast<double>(n) * static_cast<double>(c);
  return s / static_cast<double>(total());
}

void CountHistogram::validate() const {
  validate_window(counting_time);
  for (const auto& [n, c] : bin_counts) {
    if (n < 0) throw InvalidParameter("photon numbers must be non-negative");
    if (c < 0) throw InvalidParameter("occurrence counts must be non-negative");
  }
  if (total() < 1) throw InvalidParameter("histogram has no occurrences");
}

double CountPmf::mean() const {
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) s += static_cast<double>(n) * p[n];
  return s;
}

CountPmf count_distribution(const TelegraphParams& params, double counting_time,
                            std::optional<ChargeState> initial) {
  params.validate();
  validate_window(counting_time);
  const Mixture mix =
      build_mixture(params, counting_time, initial_bright_probability(params, initial));

  const double top = std::max(mix.lambda_hi, mix.lambda_lo);
  auto n_max = static_cast<std::int64_t>(std::ceil(top + 12.0 * std::sqrt(top))) + 12;
  const std::int64_t cap = 64 * n_max + 1024;

  CountPmf out;
  out.counting_time = counting_time;
  double sum = 0.0;
  for (;;) {
    for (auto n = static_cast<std::int64_t>(out.p.size()); n <= n_max; ++n) {
      out.p.push_back(mix.pmf(n));
      sum += out.p.back();
    }
    out.tail_mass = 1.0 - sum;
    if (std::abs(out.tail_mass) < kTailTolerance) break;
    if (out.tail_mass < 0 || n_max >= cap)
      throw TruncationError(out.tail_mass, "count distribution could not be normalized; tail mass " +
                                               std::to_string(out.tail_mass));
    n_max = std::min(cap, 2 * n_max);
  }
  return out;
}

std::vector<double> count_probabilities(const TelegraphParams& params, double counting_time,
                                        std::span<const std::int64_t> photon_numbers,
                                        std::optional<ChargeState> initial) {
  params.validate();
  validate_window(counting_time);
  const Mixture mix =
      build_mixture(params, counting_time, initial_bright_probability(params, initial));
  std::vector<double> out;
  out.reserve(photon_numbers.size());
  for (auto n : photon_numbers) {
    if (n < 0) throw InvalidParameter("photon numbers must be non-negative");
    out.push_back(mix.pmf(n));
  }
  return out;
}

std::vector<CountHistogram> histograms_from_trace(const TimeTrace& trace,
                                                  std::span<const double> counting_times) {
  trace.validate();
  std::vector<CountHistogram> out;
  for (double T : counting_times) {
    validate_window(T);
    const double ratio = T / trace.bin_width;
    const double factor = std::round(ratio);
    if (factor < 1 || std::abs(ratio - factor) > 1e-6 * ratio)
      throw RebinningError("counting time " + std::to_string(T) +
                           " s is not an integer multiple of the bin width " +
                           std::to_string(trace.bin_width) + " s");
    const auto f = static_cast<std::size_t>(factor);
    if (f > trace.size())
      throw RebinningError("counting time " + std::to_string(T) + " s exceeds the trace length");
    CountHistogram h;
    h.counting_time = T;
    for (auto c : rebin(trace, f).counts) ++h.bin_counts[c];
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

double loglik_unchecked(const TelegraphParams& p, std::span<const CountHistogram> hs) {
  double ll = 0.0;
  const double p_bright = stationary_population(p.k_ion, p.k_rec);
  for (const auto& h : hs) {
    const Mixture mix = build_mixture(p, h.counting_time, p_bright);
    for (const auto& [n, c] : h.bin_counts) {
      if (c == 0) continue;
      ll += static_cast<double>(c) * std::log(std::max(mix.pmf(n), 1e-300));
    }
  }
  return ll;
}

TelegraphParams from_vector(std::span<const double> x) {
  return TelegraphParams{x[2], x[3], x[0], x[1]};
}

std::vector<double> to_vector(const TelegraphParams& p) {
  return {p.gamma_bright, p.gamma_dark, p.k_ion, p.k_rec};
}

bool admissible(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v) || v < 0) return false;
  return x[0] >= x[1] && x[2] + x[3] > 0;
}

struct CoreFit {
  RateFit fit;
  std::vector<double> x;
  std::vector<double> h;  // finite-difference steps
  Eigen::MatrixXd information;
  bool information_pd = false;
  optimize::Box box;
};

// Distance along +/- e_i to a log-likelihood drop of 1/2, others held fixed.
double conditional_width(const optimize::Objective& negll, std::vector<double> x, std::size_t i,
                         double h, const optimize::Box& box) {
  const double f0 = negll(x);
  double best = std::numeric_limits<double>::infinity();
  for (double dir : {1.0, -1.0}) {
    const double limit = dir > 0 ? box.upper[i] - x[i] : x[i] - box.lower[i];
    if (limit <= 0) continue;
    auto probe = [&](double d) {
      auto y = x;
      y[i] += dir * d;
      return negll(y) - f0;
    };
    double lo = 0.0, hi = std::min(h, limit);
    while (probe(hi) < 0.5 && hi < limit) {
      lo = hi;
      hi = std::min(2.0 * hi, limit);
    }
    if (probe(hi) < 0.5) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (probe(mid) < 0.5 ? lo : hi) = mid;
    }
    best = std::min(best, hi);
  }
  return best;
}

TelegraphParams sigma_from(const Eigen::MatrixXd& cov) {
  auto s = [&](int i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  return TelegraphParams{s(2), s(3), s(0), s(1)};
}

CoreFit fit_core(std::span<const CountHistogram> histograms, const TelegraphParams& init,
                 const FitBounds& bounds, const FitOptions& options) {
  if (histograms.empty()) throw InvalidParameter("fit_histograms needs at least one histogram");
  for (const auto& h : histograms) h.validate();
  init.validate();

  CoreFit core;
  core.box.lower = to_vector(bounds.lower);
  core.box.upper = to_vector(bounds.upper);
  auto x0 = to_vector(init);
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(core.box.lower[i] <= core.box.upper[i]))
      throw InvalidParameter("fit bounds are inverted");
    if (x0[i] < core.box.lower[i] || x0[i] > core.box.upper[i])
      throw InvalidParameter("initial guess lies outside the fit bounds");
  }

  const optimize::Objective negll = [&](std::span<const double> x) {
    if (!admissible(x)) return std::numeric_limits<double>::infinity();
    return -loglik_unchecked(from_vector(x), histograms);
  };

  std::vector<double> step(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double span = core.box.upper[i] - core.box.lower[i];
    step[i] = x0[i] > 0 ? 0.1 * x0[i] : (std::isfinite(span) ? 1e-4 * span : 1e-3);
    if (!(step[i] > 0)) step[i] = 1e-6;
  }

  optimize::NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;
  nm.max_restarts = options.max_restarts;
  nm.rel_tolerance = options.rel_tolerance;
  const auto res = optimize::nelder_mead(negll, x0, step, core.box, nm);

  core.x = res.x;
  RateFit& fit = core.fit;
  fit.params = from_vector(res.x);
  fit.loglik = -res.value;
  fit.n_histograms = histograms.size();
  fit.converged = res.converged && std::isfinite(res.value);
  fit.evaluations = res.evaluations;

  core.h.resize(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double mag = std::max(std::abs(res.x[i]), 0.01 * step[i] / 0.1);
    core.h[i] = std::max(1e-4 * mag, 1e-9);
  }
  // Keep the difference stencil admissible when gamma_b and gamma_d meet.
  core.h[0] = core.h[1] = std::min(core.h[0], core.h[1]);

  core.information = optimize::hessian(negll, core.x, core.h, core.box);
  Eigen::LLT<Eigen::MatrixXd> llt(core.information);
  core.information_pd = core.information.allFinite() && llt.info() == Eigen::Success;
  if (core.information_pd) {
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(4, 4));
    fit.sigma_information = sigma_from(cov);
    const double var_contrast = cov(0, 0) + cov(1, 1) - 2.0 * cov(0, 1);
    const double contrast = res.x[0] - res.x[1];
    fit.unidentifiable = contrast <= 2.0 * std::sqrt(std::max(var_contrast, 0.0));
  } else {
    Eigen::Vector4d s;
    for (std::size_t i = 0; i < 4; ++i)
      s(static_cast<int>(i)) = conditional_width(negll, core.x, i, core.h[i], core.box);
    fit.sigma_information = TelegraphParams{s(2), s(3), s(0), s(1)};
    fit.unidentifiable = true;
  }
  fit.sigma = fit.sigma_information;
  fit.covariance = "observed_information";
  return core;
}

}  // namespace

double histogram_loglik(const TelegraphParams& params, std::span<const CountHistogram> histograms) {
  params.validate();
  for (const auto& h : histograms) h.validate();
  return loglik_unchecked(params, histograms);
}

RateFit fit_histograms(std::span<const CountHistogram> histograms, const TelegraphParams& init,
                       const FitBounds& bounds, const FitOptions& options) {
  auto core = fit_core(histograms, init, bounds, options);
  if (!core.fit.converged)
    throw ConvergenceError<RateFit>("rate fit did not converge within the restart budget",
                                    core.fit);
  return core.fit;
}

RateFit fit_trace(const TimeTrace& trace, std::span<const double> counting_times,
                  const FitOptions& options) {
  const auto histograms = histograms_from_trace(trace, counting_times);
  auto core = fit_core(histograms, initial_guess(trace), default_bounds(trace), options);
  RateFit& fit = core.fit;

  if (core.information_pd) {
    // Scores of every window, summed per time block.
    const double t_max = *std::max_element(counting_times.begin(), counting_times.end());
    const double switching = fit.params.k_ion + fit.params.k_rec;
    double block = std::max(10.0 * t_max, switching > 0 ? 20.0 / switching : 0.0);
    block = std::max(std::min(block, trace.duration() / 20.0), t_max);
    const auto n_blocks = static_cast<std::size_t>(std::ceil(trace.duration() / block)) + 1;
    Eigen::MatrixXd block_scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_blocks), 4);

    for (double T : counting_times) {
      const auto factor = static_cast<std::size_t>(std::round(T / trace.bin_width));
      const auto windows = rebin(trace, factor);
      std::vector<std::int64_t> distinct(windows.counts.begin(), windows.counts.end());
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

      std::vector<std::array<double, 4>> score(distinct.size());
      for (std::size_t k = 0; k < 4; ++k) {
        auto up = core.x, down = core.x;
        double width = 2.0 * core.h[k];
        if (down[k] - core.h[k] < core.box.lower[k]) {
          width = core.h[k];
        } else {
          down[k] -= core.h[k];
        }
        up[k] += core.h[k];
        const auto pu = count_probabilities(from_vector(up), T, distinct);
        const auto pd = count_probabilities(from_vector(down), T, distinct);
        for (std::size_t j = 0; j < distinct.size(); ++j)
          score[j][k] = (std::log(std::max(pu[j], 1e-300)) - std::log(std::max(pd[j], 1e-300))) /
                        width;
      }
      for (std::size_t w = 0; w < windows.counts.size(); ++w) {
        const auto j = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), windows.counts[w]) -
            distinct.begin());
        const auto b = static_cast<Eigen::Index>(static_cast<double>(w) * T / block);
        for (int k = 0; k < 4; ++k) block_scores(b, k) += score[j][static_cast<std::size_t>(k)];
      }
    }
    const Eigen::RowVectorXd centre = block_scores.colwise().mean();
    const Eigen::MatrixXd centred = block_scores.rowwise() - centre;
    const double n = static_cast<double>(n_blocks);
    const Eigen::MatrixXd meat = centred.transpose() * centred * (n / (n - 1.0));
    const Eigen::MatrixXd bread = core.information.inverse();
    fit.sigma = sigma_from(bread * meat * bread);
    fit.covariance = "block_sandwich";
  }

  if (!fit.converged)
    throw ConvergenceError<RateFit>("rate fit did not converge within the restart budget", fit);
  return fit;
}

namespace {

// Two-component Poisson mixture on raw bins, a few EM sweeps.
struct TwoModes {
  double lo = 0.0, hi = 0.0, weight_hi = 0.5;
};

TwoModes poisson_modes(const std::vector<std::int64_t>& counts) {
  std::vector<std::int64_t> sorted(counts);
  std::sort(sorted.begin(), sorted.end());
  TwoModes m;
  m.lo = static_cast<double>(sorted[sorted.size() / 10]) + 0.5;
  m.hi = static_cast<double>(sorted[sorted.size() * 9 / 10]) + 1.0;
  std::map<std::int64_t, std::int64_t> hist;
  for (auto c : counts) ++hist[c];
  for (int it = 0; it < 200; ++it) {
    double w_sum = 0.0, w_n = 0.0, d_sum = 0.0, d_n = 0.0;
    for (const auto& [n, c] : hist) {
      const double lf = std::lgamma(static_cast<double>(n) + 1.0);
      const double lh = std::log(m.weight_hi) + log_poisson(n, m.hi, lf);
      const double ld = std::log(1.0 - m.weight_hi) + log_poisson(n, m.lo, lf);
      const double r = 1.0 / (1.0 + std::exp(ld - lh));
      w_sum += r * static_cast<double>(c);
      w_n += r * static_cast<double>(c) * static_cast<double>(n);
      d_sum += (1.0 - r) * static_cast<double>(c);
      d_n += (1.0 - r) * static_cast<double>(c) * static_cast<double>(n);
    }
    if (w_sum <= 0 || d_sum <= 0) break;
    m.hi = std::max(w_n / w_sum, 1e-3);
    m.lo = std::max(d_n / d_sum, 1e-3);
    m.weight_hi = std::clamp(w_sum / (w_sum + d_sum), 1e-6, 1.0 - 1e-6);
  }
  if (m.lo > m.hi) {
    std::swap(m.lo, m.hi);
    m.weight_hi = 1.0 - m.weight_hi;
  }
  return m;
}

}  // namespace

TelegraphParams initial_guess(const TimeTrace& trace) {
  trace.validate();
  const double bw = trace.bin_width;
  const TwoModes modes = poisson_modes(trace.counts);
  TelegraphParams p;
  p.gamma_bright = modes.hi / bw;
  p.gamma_dark = modes.lo / bw;

  const double threshold = 0.25 * std::pow(std::sqrt(modes.lo) + std::sqrt(modes.hi), 2);
  std::size_t up = 0, down = 0, bright_bins = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool bright = static_cast<double>(trace.counts[i]) > threshold;
    bright_bins += bright;
    if (i > 0) {
      const bool prev = static_cast<double>(trace.counts[i - 1]) > threshold;
      up += !prev && bright;
      down += prev && !bright;
    }
  }
  const double floor_rate = 0.5 / trace.duration();
  const double bright_time = std::max(static_cast<double>(bright_bins) * bw, bw);
  const double dark_time = std::max(trace.duration() - bright_time, bw);
  p.k_ion = std::max(static_cast<double>(down) / bright_time, floor_rate);
  p.k_rec = std::max(static_cast<double>(up) / dark_time, floor_rate);
  if (modes.hi - modes.lo < 2.0 * std::sqrt(modes.hi)) {
    // Unresolved modes; start from a weakly contrasted guess.
    const double mean = (modes.weight_hi * modes.hi + (1 - modes.weight_hi) * modes.lo) / bw;
    p.gamma_bright = 1.05 * mean + 1.0 / bw;
    p.gamma_dark = 0.95 * mean;
  }
  return p;
}

FitBounds default_bounds(const TimeTrace& trace) {
  trace.validate();
  const double bw = trace.bin_width;
  const double top = static_cast<double>(*std::max_element(trace.counts.begin(), trace.counts.end()));
  FitBounds b;
  b.lower = TelegraphParams{0.0, 0.0, 0.0, 0.0};
  const double gamma_max = (2.0 * top + 10.0 * std::sqrt(top) + 10.0) / bw;
  b.upper = TelegraphParams{20.0 / bw, 20.0 / bw, gamma_max, gamma_max};
  return b;
}

ThresholdEstimate threshold_dwell_estimate(const TimeTrace& trace, double threshold) {
  trace.validate();
  if (!std::isfinite(threshold)) throw InvalidParameter("threshold must be finite");

  std::vector<std::pair<bool, std::size_t>> runs;  // (bright, length in bins)
  double bright_sum = 0.0, dark_sum = 0.0;
  std::size_t bright_n = 0, dark_n = 0;
  for (auto c : trace.counts) {
    const bool bright = static_cast<double>(c) > threshold;
    (bright ? bright_sum : dark_sum) += static_cast<double>(c);
    (bright ? bright_n : dark_n) += 1;
    if (runs.empty() || runs.back().first != bright)
      runs.emplace_back(bright, 1);
    else
      ++runs.back().second;
  }
  const std::size_t switches = runs.size() - 1;
  if (switches < 5)
    throw InsufficientEvents("threshold estimator found " + std::to_string(switches) +
                             " switching events; at least 5 are required");

  ThresholdEstimate est;
  double bright_time = 0.0, dark_time = 0.0;
  for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
    const double d = static_cast<double>(runs[i].second) * trace.bin_width;
    if (runs[i].first) {
      bright_time += d;
      ++est.bright_dwells;
    } else {
      dark_time += d;
      ++est.dark_dwells;
    }
  }
  est.k_ion = est.bright_dwells > 0 ? static_cast<double>(est.bright_dwells) / bright_time : 0.0;
  est.k_rec = est.dark_dwells > 0 ? static_cast<double>(est.dark_dwells) / dark_time : 0.0;

  // The threshold separates the modes only if each class is a clean Poisson
  // population on its own side of it.
  const double m_bright = bright_sum / static_cast<double>(bright_n);
  const double m_dark = dark_sum / static_cast<double>(dark_n);
  auto upper_tail = [](double mean, double t) {
    if (t > mean + 40.0 * std::sqrt(mean) + 40.0) return 0.0;
    if (t < 0) return 1.0;
    double cdf = 0.0;
    for (std::int64_t n = 0; static_cast<double>(n) <= t; ++n)
      cdf += std::exp(log_poisson(n, mean, std::lgamma(static_cast<double>(n) + 1.0)));
    return 1.0 - cdf;
  };
  const double dark_above = upper_tail(m_dark, threshold);
  const double bright_below = 1.0 - upper_tail(m_bright, threshold);
  est.valid = est.bright_dwells > 0 && est.dark_dwells > 0 && dark_above < 0.05 &&
              bright_below < 0.05;
  if (!est.valid)
    est.note = "threshold does not separate the count modes (dark class above threshold " +
               std::to_string(dark_above) + ", bright class below " +
               std::to_string(bright_below) + ")";
  else if (trace.bin_width * std::max(est.k_ion, est.k_rec) > 0.2)
    est.note = "dwells comparable to the bin width; rates are biased low";
  return est;
}

}  // namespace nvcharge
