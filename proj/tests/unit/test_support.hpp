#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "nvcharge/telegraph.hpp"

namespace testing {

/// Asymptotic Kolmogorov distribution tail P(K > lambda).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    s += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS test p-value against a continuous CDF.
template <typename Cdf>
double ks_pvalue(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

/// Pearson chi-square goodness of fit of integer data against a pmf;
/// cells with expectation below 5 are pooled into their neighbours.
template <typename Pmf>
double chi_square_pvalue(const std::map<std::int64_t, std::int64_t>& observed, Pmf pmf,
                         int fitted_params = 0) {
  std::int64_t total = 0;
  std::int64_t lo = observed.begin()->first, hi = observed.rbegin()->first;
  for (const auto& [n, k] : observed) total += k;
  const double N = static_cast<double>(total);
  std::vector<double> exp_cells, obs_cells;
  double e_acc = 0.0, o_acc = 0.0;
  double cdf_lo = 0.0;
  for (std::int64_t n = 0; n < lo; ++n) cdf_lo += pmf(n);
  e_acc = cdf_lo * N;
  for (std::int64_t n = lo; n <= hi; ++n) {
    e_acc += pmf(n) * N;
    auto it = observed.find(n);
    o_acc += it == observed.end() ? 0.0 : static_cast<double>(it->second);
    if (e_acc >= 5.0) {
      exp_cells.push_back(e_acc);
      obs_cells.push_back(o_acc);
      e_acc = o_acc = 0.0;
    }
  }
  double used = 0.0;
  for (double e : exp_cells) used += e;
  e_acc = N - used;
  if (!exp_cells.empty() && e_acc < 5.0) {
    exp_cells.back() += e_acc;
    obs_cells.back() += o_acc;
  } else {
    exp_cells.push_back(e_acc);
    obs_cells.push_back(o_acc);
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < exp_cells.size(); ++i)
    chi2 += (obs_cells[i] - exp_cells[i]) * (obs_cells[i] - exp_cells[i]) / exp_cells[i];
  const double dof = static_cast<double>(exp_cells.size()) - 1.0 - fitted_params;
  if (dof < 1) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
}

inline double poisson_pmf(double mean, std::int64_t n) {
  return boost::math::pdf(boost::math::poisson(mean), static_cast<double>(n));
}

/// Independent oracle for the count pmf: the counting process of a
/// Markov-modulated Poisson process, p_n(T) from the matrix exponential of
/// the block-bidiagonal forward generator. Exact for n <= n_max.
inline std::vector<double> mmpp_pmf(const nvcharge::TelegraphParams& p, double T, int n_max,
                                    double p_bright) {
  const int m = 2 * (n_max + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  for (int n = 0; n <= n_max; ++n) {
    const int b = 2 * n, d = 2 * n + 1;
    M(b, b) = -p.k_ion - p.gamma_bright;
    M(b, d) = p.k_ion;
    M(d, d) = -p.k_rec - p.gamma_dark;
    M(d, b) = p.k_rec;
    if (n < n_max) {
      M(b, b + 2) = p.gamma_bright;
      M(d, d + 2) = p.gamma_dark;
    }
  }
  Eigen::MatrixXd E = (M * T).exp();
  std::vector<double> out(n_max + 1);
  for (int n = 0; n <= n_max; ++n)
    out[n] = p_bright * (E(0, 2 * n) + E(0, 2 * n + 1)) +
             (1.0 - p_bright) * (E(1, 2 * n) + E(1, 2 * n + 1));
  return out;
}

}  // namespace testing

#include <random>

#include "nvcharge/dopant.hpp"

namespace testing {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Importance-sampled Monte Carlo for the screened-kernel integral of g over
/// a ball of radius R around r_nv: distances from Gamma(2, L) (the kernel's
/// own radial law), directions uniform on the sphere.
template <typename G>
McEstimate screened_kernel_mc(double L, double R, const nvcharge::Vec3& r_nv, G g,
                              std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> dist(2.0, L);
  std::uniform_real_distribution<double> u(-1.0, 1.0), phi(0.0, 2.0 * M_PI);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double d = dist(rng);
    const double mu = u(rng), ph = phi(rng);
    double v = 0.0;
    if (d < R) {
      const double st = std::sqrt(1.0 - mu * mu);
      v = g(r_nv + d * nvcharge::Vec3(st * std::cos(ph), st * std::sin(ph), mu));
    }
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = s / n;
  return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0))};
}

}  // namespace testing
