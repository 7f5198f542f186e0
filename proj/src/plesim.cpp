#include "nvcharge/plesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <spdlog/spdlog.h>
#include <unsupported/Eigen/NonLinearOptimization>

#include "nvcharge/errors.hpp"
#include "nvcharge/powerlaws.hpp"

namespace nvcharge {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0; }

}  // namespace

void PLEScanConfig::validate() const {
  if (!std::isfinite(detuning_start) || !std::isfinite(detuning_stop) ||
      !(detuning_stop > detuning_start))
    throw InvalidParameter("scan needs detuning_stop > detuning_start");
  if (n_points < 2) throw InvalidParameter("scan needs at least 2 points");
  if (!finite_positive(dwell_per_point)) throw InvalidParameter("dwell_per_point must be positive");
  if (!std::isfinite(laser_power) || laser_power < 0)
    throw InvalidParameter("laser_power must be >= 0");
}

std::vector<double> PLEScanConfig::detunings() const {
  std::vector<double> d(n_points);
  const double step = (detuning_stop - detuning_start) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) d[i] = detuning_start + step * static_cast<double>(i);
  d.back() = detuning_stop;
  return d;
}

double LorentzPeak::shape(double detuning) const {
  const double t = 2.0 * (detuning - center) / fwhm;
  return 1.0 / (1.0 + t * t);
}

double LorentzPeak::area() const { return 0.5 * M_PI * amplitude * fwhm; }

void LorentzPeak::validate() const {
  if (!std::isfinite(center)) throw InvalidParameter("peak center must be finite");
  if (!finite_positive(fwhm)) throw InvalidParameter("peak fwhm must be positive");
  if (!std::isfinite(amplitude) || amplitude < 0)
    throw InvalidParameter("peak amplitude must be >= 0");
}

void PLESpectrum::validate() const {
  if (detunings.size() != intensities.size())
    throw InvalidParameter("spectrum detunings and intensities differ in length");
  if (!uncertainties.empty() && uncertainties.size() != detunings.size())
    throw InvalidParameter("spectrum uncertainties differ in length");
  if (detunings.empty()) throw InvalidParameter("spectrum is empty");
  if (n_repetitions == 0) throw InvalidParameter("spectrum n_repetitions must be >= 1");
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    if (!std::isfinite(detunings[i]) || (i > 0 && !(detunings[i] > detunings[i - 1])))
      throw InvalidParameter("spectrum detunings must be finite and strictly increasing");
    if (!std::isfinite(intensities[i]) || intensities[i] < 0)
      throw InvalidParameter("spectrum intensities must be finite and >= 0");
  }
  for (double u : uncertainties)
    if (!std::isfinite(u) || u < 0) throw InvalidParameter("spectrum uncertainties must be >= 0");
}

void ChargeRule::validate() const {
  if (!std::isfinite(ionization_coefficient) || ionization_coefficient < 0)
    throw ConfigurationError("ionization coefficient must be finite and >= 0");
  if (!std::isfinite(k_rec) || k_rec < 0)
    throw ConfigurationError("recombination rate must be finite and >= 0");
}

void PLELine::validate() const {
  if (peaks.empty()) throw InvalidParameter("line needs at least one peak");
  for (const auto& p : peaks) p.validate();
  if (!std::isfinite(background) || background < 0)
    throw InvalidParameter("background must be >= 0");
  if (!std::isfinite(center_jitter) || center_jitter < 0)
    throw InvalidParameter("center jitter must be >= 0");
}

double PLELine::emission(double detuning) const {
  double s = 0.0;
  for (const auto& p : peaks) s += p.value(detuning);
  return s;
}

double PLELine::excitation(double detuning) const {
  double amax = 0.0;
  for (const auto& p : peaks) amax = std::max(amax, p.amplitude);
  return amax > 0 ? emission(detuning) / amax : 0.0;
}

double ionization_rate_at(const ChargeRule& rule, const PLELine& line, double laser_power,
                          double detuning) {
  return rule.ionization_coefficient * laser_power * line.excitation(detuning);
}

namespace {

PLEScan scan_with_engine(const PLEScanConfig& config, PLELine line, const ChargeRule& rule,
                         std::mt19937_64& rng, ChargeState initial) {
  if (line.center_jitter > 0) {
    std::normal_distribution<double> jitter(0.0, line.center_jitter);
    const double shift = jitter(rng);
    for (auto& p : line.peaks) p.center += shift;
  }
  std::exponential_distribution<double> unit_exp(1.0);
  PLEScan out;
  out.spectrum.detunings = config.detunings();
  out.spectrum.intensities.reserve(config.n_points);
  out.bright_fraction.reserve(config.n_points);
  ChargeState state = initial;
  const double dwell = config.dwell_per_point;
  for (double delta : out.spectrum.detunings) {
    const double k_ion = ionization_rate_at(rule, line, config.laser_power, delta);
    double t = 0.0, bright = 0.0;
    for (;;) {
      const bool is_bright = state == ChargeState::NVminus;
      const double rate = is_bright ? k_ion : rule.k_rec;
      const double stay = rate > 0 ? unit_exp(rng) / rate : std::numeric_limits<double>::infinity();
      const double remaining = dwell - t;
      if (stay >= remaining) {
        if (is_bright) bright += remaining;
        break;
      }
      if (is_bright) bright += stay;
      t += stay;
      state = is_bright ? ChargeState::NVzero : ChargeState::NVminus;
    }
    const double mean = bright * line.emission(delta) + dwell * line.background;
    std::poisson_distribution<std::int64_t> counts(mean);
    const std::int64_t n = mean > 0 ? counts(rng) : 0;
    out.spectrum.intensities.push_back(static_cast<double>(n) / dwell);
    out.bright_fraction.push_back(bright / dwell);
  }
  out.final_state = state;
  return out;
}

}  // namespace

PLEScan simulate_ple_scan(const PLEScanConfig& config, const PLELine& line, const ChargeRule& rule,
                          std::uint64_t seed, ChargeState initial) {
  config.validate();
  line.validate();
  rule.validate();
  auto rng = detail::make_engine(seed, detail::Stream::misc, 0);
  return scan_with_engine(config, line, rule, rng, initial);
}

std::vector<PLESpectrum> simulate_ple_repetitions(const PLEScanConfig& config, const PLELine& line,
                                                  const ChargeRule& rule, std::size_t repetitions,
                                                  std::uint64_t seed, ChargeState initial) {
  config.validate();
  line.validate();
  rule.validate();
  if (repetitions == 0) throw InvalidParameter("repetitions must be >= 1");
  std::vector<PLESpectrum> out;
  out.reserve(repetitions);
  ChargeState state = initial;
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto rng = detail::make_engine(seed, detail::Stream::misc, r);
    auto scan = scan_with_engine(config, line, rule, rng, state);
    state = scan.final_state;
    out.push_back(std::move(scan.spectrum));
  }
  return out;
}

PLESpectrum stationary_spectrum(const PLEScanConfig& config, const PLELine& line,
                                const ChargeRule& rule) {
  config.validate();
  line.validate();
  rule.validate();
  PLESpectrum out;
  out.detunings = config.detunings();
  for (double delta : out.detunings) {
    const double k_ion = ionization_rate_at(rule, line, config.laser_power, delta);
    const double p_bright = k_ion + rule.k_rec > 0 ? rule.k_rec / (k_ion + rule.k_rec) : 1.0;
    out.intensities.push_back(p_bright * line.emission(delta) + line.background);
  }
  return out;
}

PLESpectrum average_spectra(const std::vector<PLESpectrum>& scans) {
  if (scans.empty()) throw InvalidParameter("no spectra to average");
  for (const auto& s : scans) s.validate();
  const auto& grid = scans.front().detunings;
  const double span = grid.back() - grid.front();
  for (const auto& s : scans) {
    if (s.detunings.size() != grid.size())
      throw AlignmentError("spectra have different numbers of points");
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(s.detunings[i] - grid[i]) > 1e-9 * std::max(span, 1.0))
        throw AlignmentError("spectra have different detuning grids");
  }
  if (scans.size() == 1) return scans.front();

  PLESpectrum out;
  out.detunings = grid;
  out.n_repetitions = 0;
  for (const auto& s : scans) out.n_repetitions += s.n_repetitions;
  const double total = static_cast<double>(out.n_repetitions);
  out.intensities.assign(grid.size(), 0.0);
  out.uncertainties.assign(grid.size(), 0.0);
  for (const auto& s : scans) {
    const double w = static_cast<double>(s.n_repetitions) / total;
    for (std::size_t i = 0; i < grid.size(); ++i) out.intensities[i] += w * s.intensities[i];
  }
  // Standard error of a weighted mean of scans with per-scan weights n_r.
  double w2 = 0.0;
  for (const auto& s : scans) {
    const double w = static_cast<double>(s.n_repetitions) / total;
    w2 += w * w;
  }
  const double m = static_cast<double>(scans.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double ss = 0.0;
    for (const auto& s : scans) {
      const double w = static_cast<double>(s.n_repetitions) / total;
      const double d = s.intensities[i] - out.intensities[i];
      ss += w * d * d;
    }
    const double var_unit = ss * m / (m - 1.0);  // weighted per-scan variance
    out.uncertainties[i] = std::sqrt(var_unit * w2);
  }
  return out;
}

double spectrum_area(const PLESpectrum& spectrum, double offset) {
  spectrum.validate();
  double a = 0.0;
  for (std::size_t i = 1; i < spectrum.size(); ++i)
    a += 0.5 * (spectrum.intensities[i] + spectrum.intensities[i - 1] - 2.0 * offset) *
         (spectrum.detunings[i] - spectrum.detunings[i - 1]);
  return a;
}

namespace {

// Residuals in scaled coordinates u = (delta - mid) / half, y / y_scale.
// Parameters per peak: center, log fwhm, amplitude; last entry the offset.
struct LorentzResiduals {
  Eigen::VectorXd u, y, inv_sigma;
  std::size_t n_peaks = 0;

  int inputs() const { return static_cast<int>(3 * n_peaks + 1); }
  int values() const { return static_cast<int>(u.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      double model = p(inputs() - 1);
      for (std::size_t k = 0; k < n_peaks; ++k) {
        const double h = 0.5 * std::exp(p(3 * k + 1));
        const double t = (u(i) - p(3 * k)) / h;
        model += p(3 * k + 2) / (1.0 + t * t);
      }
      r(i) = (y(i) - model) * inv_sigma(i);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      for (std::size_t k = 0; k < n_peaks; ++k) {
        const double h = 0.5 * std::exp(p(3 * k + 1));
        const double t = (u(i) - p(3 * k)) / h;
        const double D = 1.0 + t * t;
        const double A = p(3 * k + 2);
        const auto c = static_cast<Eigen::Index>(3 * k);
        J(i, c) = -inv_sigma(i) * A * 2.0 * t / (D * D * h);
        J(i, c + 1) = -inv_sigma(i) * A * 2.0 * t * t / (D * D);
        J(i, c + 2) = -inv_sigma(i) / D;
      }
      J(i, inputs() - 1) = -inv_sigma(i);
    }
    return 0;
  }
};

std::vector<double> smooth(const std::vector<double>& y, std::size_t half_window) {
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t lo = i >= half_window ? i - half_window : 0;
    const std::size_t hi = std::min(y.size() - 1, i + half_window);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += y[j];
    s[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return s;
}

MultiLorentzInit initial_peaks(const PLESpectrum& sp, std::size_t n_peaks) {
  const auto& x = sp.detunings;
  const std::size_t n = x.size();
  const std::size_t half_window = std::max<std::size_t>(1, n / 100);
  const auto s = smooth(sp.intensities, half_window);
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const double baseline = sorted[n / 10];
  const double step = (x.back() - x.front()) / static_cast<double>(n - 1);

  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || s[i] > s[i - 1];
    const bool right = i + 1 == n || s[i] >= s[i + 1];
    if (left && right && s[i] > baseline) maxima.push_back(i);
  }
  std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return s[a] > s[b]; });

  auto half_width_at = [&](std::size_t i) {
    const double half = baseline + 0.5 * (s[i] - baseline);
    std::size_t l = i, r = i;
    while (l > 0 && s[l] > half) --l;
    while (r + 1 < n && s[r] > half) ++r;
    return std::max(x[r] - x[l], 2.0 * step);
  };

  MultiLorentzInit init;
  init.offset = baseline;
  std::vector<std::size_t> chosen;
  for (std::size_t i : maxima) {
    if (chosen.size() == n_peaks) break;
    const bool far = std::all_of(chosen.begin(), chosen.end(), [&](std::size_t j) {
      return (i > j ? i - j : j - i) > 2 * half_window + 1;
    });
    if (!far) continue;
    chosen.push_back(i);
    init.peaks.push_back(LorentzPeak{x[i], half_width_at(i), s[i] - baseline});
  }
  // Too few maxima: seed the rest where the current model misses most.
  while (init.peaks.size() < n_peaks) {
    double width = init.peaks.empty() ? 4.0 * step : init.peaks.front().fwhm;
    std::size_t worst = 0;
    double worst_res = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double model = baseline;
      for (const auto& p : init.peaks) model += p.value(x[i]);
      if (s[i] - model > worst_res) {
        worst_res = s[i] - model;
        worst = i;
      }
    }
    init.peaks.push_back(LorentzPeak{x[worst], width, std::max(worst_res, 0.0) + 1e-3 *
                                                         std::max(std::abs(baseline), 1.0)});
  }
  return init;
}

}  // namespace

MultiLorentzFit fit_multi_lorentz(const PLESpectrum& spectrum, std::size_t n_peaks,
                                  const std::optional<MultiLorentzInit>& init) {
  spectrum.validate();
  if (n_peaks == 0) throw InvalidParameter("n_peaks must be >= 1");
  const std::size_t n_params = 3 * n_peaks + 1;
  if (spectrum.size() < 3 * n_params)
    throw InvalidParameter("spectrum needs at least " + std::to_string(3 * n_params) +
                           " points for " + std::to_string(n_peaks) + " peaks");
  if (init && init->peaks.size() != n_peaks)
    throw InvalidParameter("initial guess has the wrong number of peaks");
  if (init)
    for (const auto& p : init->peaks) p.validate();

  const auto& x = spectrum.detunings;
  const std::size_t n = x.size();
  const double mid = 0.5 * (x.front() + x.back());
  const double half = 0.5 * (x.back() - x.front());
  const double ymax = *std::max_element(spectrum.intensities.begin(), spectrum.intensities.end());
  const double yscale = ymax > 0 ? ymax : 1.0;

  const bool weighted =
      !spectrum.uncertainties.empty() &&
      std::all_of(spectrum.uncertainties.begin(), spectrum.uncertainties.end(),
                  [](double s) { return s > 0; });
  if (!spectrum.uncertainties.empty() && !weighted)
    spdlog::warn("fit_multi_lorentz: some uncertainties are zero, using equal weights");

  LorentzResiduals f;
  f.n_peaks = n_peaks;
  f.u.resize(static_cast<Eigen::Index>(n));
  f.y.resize(static_cast<Eigen::Index>(n));
  f.inv_sigma.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    f.u(j) = (x[i] - mid) / half;
    f.y(j) = spectrum.intensities[i] / yscale;
    f.inv_sigma(j) = weighted ? yscale / spectrum.uncertainties[i] : 1.0;
  }

  const MultiLorentzInit start = init ? *init : initial_peaks(spectrum, n_peaks);
  Eigen::VectorXd p(static_cast<Eigen::Index>(n_params));
  for (std::size_t k = 0; k < n_peaks; ++k) {
    const auto& pk = start.peaks[k];
    p(3 * k) = (pk.center - mid) / half;
    p(3 * k + 1) = std::log(pk.fwhm / half);
    p(3 * k + 2) = pk.amplitude / yscale;
  }
  p(static_cast<Eigen::Index>(n_params - 1)) = start.offset / yscale;

  Eigen::LevenbergMarquardt<LorentzResiduals> lm(f);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.maxfev = static_cast<Eigen::Index>(2000 * n_params);
  const auto status = lm.minimize(p);

  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  f(p, r);
  MultiLorentzFit out;
  out.weighted = weighted;
  out.dof = n - n_params;
  out.iterations = static_cast<int>(lm.iter);
  const double chi2_scaled = r.squaredNorm();
  out.chi2 = weighted ? chi2_scaled : chi2_scaled * yscale * yscale;

  for (std::size_t k = 0; k < n_peaks; ++k)
    out.peaks.push_back(LorentzPeak{mid + half * p(3 * k), half * std::exp(p(3 * k + 1)),
                                    yscale * p(3 * k + 2)});
  out.offset = yscale * p(static_cast<Eigen::Index>(n_params - 1));

  Eigen::MatrixXd J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_params));
  f.df(p, J);
  const Eigen::MatrixXd info = J.transpose() * J;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(info.rows(), info.cols(),
                                                  std::numeric_limits<double>::infinity());
  if (lu.isInvertible()) {
    cov = lu.inverse();
    if (!weighted && out.dof > 0) cov *= chi2_scaled / static_cast<double>(out.dof);
  }
  for (std::size_t k = 0; k < n_peaks; ++k) {
    const auto c = static_cast<Eigen::Index>(3 * k);
    out.sigma.push_back(PeakUncertainty{half * std::sqrt(cov(c, c)),
                                        out.peaks[k].fwhm * std::sqrt(cov(c + 1, c + 1)),
                                        yscale * std::sqrt(cov(c + 2, c + 2))});
  }
  const auto last = static_cast<Eigen::Index>(n_params - 1);
  out.sigma_offset = yscale * std::sqrt(cov(last, last));
  if (lu.isInvertible()) {
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
      for (Eigen::Index j = i + 1; j < cov.cols(); ++j) {
        const double denom = std::sqrt(cov(i, i) * cov(j, j));
        if (denom > 0) out.max_correlation = std::max(out.max_correlation, std::abs(cov(i, j)) / denom);
      }
  } else {
    out.max_correlation = 1.0;
  }
  out.overlapping = out.max_correlation > 0.99;
  if (out.overlapping)
    spdlog::warn("fit_multi_lorentz: parameter correlation {:.4f}; peaks may be unresolved",
                 out.max_correlation);

  std::vector<std::size_t> order(n_peaks);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return out.peaks[a].center < out.peaks[b].center; });
  std::vector<LorentzPeak> peaks;
  std::vector<PeakUncertainty> sig;
  for (auto k : order) {
    peaks.push_back(out.peaks[k]);
    sig.push_back(out.sigma[k]);
  }
  out.peaks = std::move(peaks);
  out.sigma = std::move(sig);

  const bool failed = status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
                      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation ||
                      !p.allFinite();
  if (failed)
    throw ConvergenceError<MultiLorentzFit>(
        "multi-Lorentz fit did not converge (status " + std::to_string(static_cast<int>(status)) +
            ", chi2 " + std::to_string(out.chi2) + ", dof " + std::to_string(out.dof) + ")",
        out);
  for (const auto& pk : out.peaks)
    if (pk.amplitude < 0)
      throw ConvergenceError<MultiLorentzFit>(
          "multi-Lorentz fit produced a negative amplitude at " + std::to_string(pk.center) +
              " Hz; fewer peaks may describe the data",
          out);
  return out;
}

double saturation_broadening(double power, double gamma0, double saturation_power) {
  return gamma0 * std::sqrt(1.0 + power / saturation_power);
}

const char* to_string(BroadeningModel m) {
  return m == BroadeningModel::constant ? "constant" : "saturation";
}

namespace {

struct ScaleFit {
  double c = 0.0, sigma = 0.0, chi2 = 0.0;
};

// Least squares for y = c * basis, weights w.
ScaleFit fit_scale(const std::vector<double>& y, const std::vector<double>& basis,
                   const std::vector<double>& w) {
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxx += w[i] * basis[i] * basis[i];
    sxy += w[i] * basis[i] * y[i];
  }
  ScaleFit f;
  f.c = sxy / sxx;
  f.sigma = 1.0 / std::sqrt(sxx);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double res = y[i] - f.c * basis[i];
    f.chi2 += w[i] * res * res;
  }
  return f;
}

BroadeningTrend broadening_trend(std::size_t peak, const std::vector<double>& power,
                                 const std::vector<double>& fwhm,
                                 const std::vector<double>& sigma) {
  BroadeningTrend t;
  t.peak = peak;
  t.weighted = std::all_of(sigma.begin(), sigma.end(), finite_positive);
  const std::size_t n = power.size();
  std::vector<double> w(n, 1.0);
  if (t.weighted)
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (sigma[i] * sigma[i]);

  const auto constant = fit_scale(fwhm, std::vector<double>(n, 1.0), w);
  t.constant_fwhm = constant.c;
  t.constant_sigma = constant.sigma;
  t.constant_chi2 = constant.chi2;

  auto basis_for = [&](double log_ps) {
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = saturation_broadening(power[i], 1.0, std::exp(log_ps));
    return b;
  };
  auto profile = [&](double log_ps) { return fit_scale(fwhm, basis_for(log_ps), w).chi2; };
  const auto [pmin, pmax] = std::minmax_element(power.begin(), power.end());
  const double lo = std::log(*pmin * 1e-3), hi = std::log(*pmax * 1e4);
  constexpr int kScan = 200;
  int best = 0;
  double best_chi2 = profile(lo);
  for (int i = 1; i <= kScan; ++i) {
    const double v = profile(lo + (hi - lo) * i / kScan);
    if (v < best_chi2) {
      best_chi2 = v;
      best = i;
    }
  }
  const double step = (hi - lo) / kScan;
  const auto [log_ps, chi2] = boost::math::tools::brent_find_minima(
      profile, lo + std::max(0, best - 1) * step, lo + std::min(kScan, best + 1) * step, 52);
  const auto sat = fit_scale(fwhm, basis_for(log_ps), w);
  t.gamma0 = sat.c;
  t.saturation_power = std::exp(log_ps);
  t.saturation_chi2 = std::min(chi2, constant.chi2);

  if (t.weighted) {
    t.constant_aic = corrected_aic(t.constant_chi2, 1, n);
    t.saturation_aic = corrected_aic(t.saturation_chi2, 2, n);
  } else {
    double scale = 0.0;
    for (double v : fwhm) scale += v * v;
    const double floor = 1e-300 + 1e-30 * scale;
    const double nn = static_cast<double>(n);
    t.constant_aic = corrected_aic(nn * std::log(std::max(t.constant_chi2, floor) / nn), 2, n);
    t.saturation_aic = corrected_aic(nn * std::log(std::max(t.saturation_chi2, floor) / nn), 3, n);
  }
  t.selected = t.saturation_aic < t.constant_aic ? BroadeningModel::saturation
                                                 : BroadeningModel::constant;
  return t;
}

}  // namespace

FwhmTable fwhm_vs_power(const std::map<double, PLESpectrum>& spectra_by_power,
                        std::size_t n_peaks) {
  if (spectra_by_power.empty()) throw InvalidParameter("no spectra given");
  FwhmTable table;
  std::vector<std::vector<double>> fwhm(n_peaks), sigma(n_peaks);
  std::vector<double> powers;
  for (const auto& [power, spectrum] : spectra_by_power) {
    if (!finite_positive(power)) throw InvalidParameter("laser powers must be positive");
    const auto fit = fit_multi_lorentz(spectrum, n_peaks);
    powers.push_back(power);
    for (std::size_t k = 0; k < n_peaks; ++k) {
      table.rows.push_back(FwhmRow{power, k, fit.peaks[k].fwhm, fit.sigma[k].fwhm});
      fwhm[k].push_back(fit.peaks[k].fwhm);
      sigma[k].push_back(fit.sigma[k].fwhm);
    }
  }
  if (powers.size() < 2) {
    table.notice = "single laser power: trend fit skipped";
    spdlog::info("fwhm_vs_power: {}", table.notice);
    return table;
  }
  for (std::size_t k = 0; k < n_peaks; ++k)
    table.trends.push_back(broadening_trend(k, powers, fwhm[k], sigma[k]));
  return table;
}

}  // namespace nvcharge
