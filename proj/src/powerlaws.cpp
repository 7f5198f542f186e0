#include "nvcharge/powerlaws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <boost/math/tools/minima.hpp>
#include <spdlog/spdlog.h>

#include "nvcharge/errors.hpp"

namespace nvcharge {

bool PowerSeries::all_sigmas() const {
  return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.sigma.has_value(); });
}

std::size_t PowerSeries::distinct_powers() const {
  std::set<double> s;
  for (const auto& p : points) s.insert(p.power);
  return s.size();
}

void PowerSeries::validate() const {
  if (points.empty()) throw InvalidParameter("power series is empty");
  for (const auto& p : points) {
    if (!std::isfinite(p.power) || !(p.power > 0))
      throw InvalidParameter("laser powers must be positive and finite");
    if (!std::isfinite(p.rate)) throw InvalidParameter("rates must be finite");
    if (p.sigma && (!std::isfinite(*p.sigma) || !(*p.sigma > 0)))
      throw InvalidParameter("rate uncertainties must be positive");
  }
}

PowerSeries average_replicates(const PowerSeries& series) {
  series.validate();
  const bool weighted = series.all_sigmas();
  std::map<double, std::vector<PowerPoint>> groups;
  for (const auto& p : series.points) groups[p.power].push_back(p);
  PowerSeries out;
  for (const auto& [power, pts] : groups) {
    PowerPoint q;
    q.power = power;
    if (weighted) {
      double wsum = 0.0, wr = 0.0;
      for (const auto& p : pts) {
        const double w = 1.0 / (*p.sigma * *p.sigma);
        wsum += w;
        wr += w * p.rate;
      }
      q.rate = wr / wsum;
      q.sigma = 1.0 / std::sqrt(wsum);
    } else {
      double s = 0.0;
      for (const auto& p : pts) s += p.rate;
      q.rate = s / static_cast<double>(pts.size());
    }
    out.points.push_back(q);
  }
  return out;
}

double ionization_law(double power, double a, double saturation_power) {
  return a * power * power / (1.0 + power / saturation_power);
}

double corrected_aic(double neg2loglik, int n_params, std::size_t n_points) {
  const double k = n_params, n = static_cast<double>(n_points);
  double aic = neg2loglik + 2.0 * k;
  if (n_points < 40 && n - k - 1.0 > 0) aic += 2.0 * k * (k + 1.0) / (n - k - 1.0);
  return aic;
}

const char* to_string(RecombinationModel m) {
  return m == RecombinationModel::linear ? "linear" : "quadratic";
}

namespace {

struct Prepared {
  std::vector<double> power, rate, weight;
  bool weighted = true;
};

Prepared prepare(const PowerSeries& input, ReplicateMode mode, const char* who) {
  input.validate();
  const PowerSeries series = mode == ReplicateMode::average ? average_replicates(input) : input;
  Prepared p;
  p.weighted = series.all_sigmas();
  if (!p.weighted)
    spdlog::warn("{}: rate uncertainties missing, using equal weights", who);
  for (const auto& pt : series.points) {
    p.power.push_back(pt.power);
    p.rate.push_back(pt.rate);
    p.weight.push_back(p.weighted ? 1.0 / (*pt.sigma * *pt.sigma) : 1.0);
  }
  return p;
}

// Weighted least squares for k = c * basis(P), through the origin.
struct OneParam {
  double c = 0.0, sigma = 0.0, chi2 = 0.0;
};

template <typename Basis>
OneParam fit_one(const Prepared& d, Basis basis) {
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < d.power.size(); ++i) {
    const double x = basis(d.power[i]);
    sxx += d.weight[i] * x * x;
    sxy += d.weight[i] * x * d.rate[i];
  }
  if (!(sxx > 0)) throw DegenerateData("design matrix is singular");
  OneParam r;
  r.c = sxy / sxx;
  r.sigma = 1.0 / std::sqrt(sxx);
  for (std::size_t i = 0; i < d.power.size(); ++i) {
    const double res = d.rate[i] - r.c * basis(d.power[i]);
    r.chi2 += d.weight[i] * res * res;
  }
  return r;
}

}  // namespace

IonizationFit fit_ionization(const PowerSeries& series, std::optional<double> saturation_power_fixed,
                             ReplicateMode mode) {
  const Prepared d = prepare(series, mode, "fit_ionization");
  std::set<double> distinct(d.power.begin(), d.power.end());
  const std::size_t needed = saturation_power_fixed ? 2 : 3;
  if (d.power.size() < needed)
    throw InvalidParameter("ionization fit needs at least " + std::to_string(needed) + " points");
  if (distinct.size() < 2) throw DegenerateData("all laser powers are equal");

  IonizationFit out;
  out.n_points = d.power.size();
  out.weighted = d.weighted;

  if (saturation_power_fixed) {
    const double ps = *saturation_power_fixed;
    if (!std::isfinite(ps) || !(ps > 0)) throw InvalidParameter("saturation power must be positive");
    const auto r = fit_one(d, [ps](double p) { return ionization_law(p, 1.0, ps); });
    out.a = r.c;
    out.sigma_a = r.sigma;
    out.chi2 = r.chi2;
    out.saturation_power = ps;
    out.saturation_fixed = true;
    return out;
  }

  // Profile chi^2 over log P_s; a is linear for fixed P_s.
  const double p_min = *distinct.begin(), p_max = *distinct.rbegin();
  const double log_lo = std::log(p_min * 1e-3), log_hi = std::log(p_max * 1e4);
  auto profile = [&](double log_ps) {
    const double ps = std::exp(log_ps);
    return fit_one(d, [ps](double p) { return ionization_law(p, 1.0, ps); }).chi2;
  };
  constexpr int kScan = 200;
  int best = 0;
  double best_chi2 = profile(log_lo);
  for (int i = 1; i <= kScan; ++i) {
    const double v = profile(log_lo + (log_hi - log_lo) * i / kScan);
    if (v < best_chi2) {
      best_chi2 = v;
      best = i;
    }
  }
  const double step = (log_hi - log_lo) / kScan;
  const double lo = log_lo + std::max(0, best - 1) * step;
  const double hi = log_lo + std::min(kScan, best + 1) * step;
  const auto [log_ps, chi2] = boost::math::tools::brent_find_minima(profile, lo, hi, 52);
  const double ps = std::exp(log_ps);
  const auto r = fit_one(d, [ps](double p) { return ionization_law(p, 1.0, ps); });
  out.a = r.c;
  out.saturation_power = ps;
  out.chi2 = chi2;

  // Linearized covariance of (a, P_s).
  double j11 = 0, j12 = 0, j22 = 0;
  for (std::size_t i = 0; i < d.power.size(); ++i) {
    const double P = d.power[i];
    const double da = ionization_law(P, 1.0, ps);
    const double q = 1.0 + P / ps;
    const double dps = out.a * P * P * (P / (ps * ps)) / (q * q);
    j11 += d.weight[i] * da * da;
    j12 += d.weight[i] * da * dps;
    j22 += d.weight[i] * dps * dps;
  }
  const double det = j11 * j22 - j12 * j12;
  if (det > 0) {
    out.sigma_a = std::sqrt(j22 / det);
    out.sigma_saturation_power = std::sqrt(j11 / det);
  } else {
    out.sigma_a = r.sigma;
    out.sigma_saturation_power = std::numeric_limits<double>::infinity();
  }
  if (best == kScan)
    spdlog::warn("fit_ionization: saturation power ran to the search limit; data look purely quadratic");
  return out;
}

ModelComparison compare_recombination_models(const PowerSeries& series, ReplicateMode mode) {
  const Prepared d = prepare(series, mode, "compare_recombination_models");
  std::set<double> distinct(d.power.begin(), d.power.end());
  if (d.power.size() < 3) throw InvalidParameter("model comparison needs at least 3 points");
  if (distinct.size() < 2) throw DegenerateData("all laser powers are equal");

  ModelComparison out;
  out.n_points = d.power.size();
  out.weighted = d.weighted;
  const auto lin = fit_one(d, [](double p) { return p; });
  const auto quad = fit_one(d, [](double p) { return p * p; });

  const std::size_t n = d.power.size();
  auto score = [&](const OneParam& r) {
    ModelScore s{r.c, r.sigma, r.chi2, 0.0};
    if (d.weighted) {
      s.aic = corrected_aic(r.chi2, 1, n);
    } else {
      // Unknown noise level is one more fitted parameter.
      const double rss = std::max(r.chi2, 1e-300);
      s.aic = corrected_aic(static_cast<double>(n) * std::log(rss / static_cast<double>(n)), 2, n);
    }
    return s;
  };
  out.linear = score(lin);
  out.quadratic = score(quad);

  const bool all_zero = std::all_of(d.rate.begin(), d.rate.end(), [](double r) { return r == 0.0; });
  out.uninformative = all_zero || lin.chi2 == quad.chi2;
  out.selected = out.quadratic.aic < out.linear.aic && !out.uninformative
                     ? RecombinationModel::quadratic
                     : RecombinationModel::linear;
  return out;
}

}  // namespace nvcharge
