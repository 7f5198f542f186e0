#include "nvcharge/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nvcharge::optimize {

void Box::clamp(std::span<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

namespace {

struct Simplex {
  std::vector<std::vector<double>> points;
  std::vector<double> values;

  void sort() {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> p;
    std::vector<double> v;
    for (auto i : idx) {
      p.push_back(points[i]);
      v.push_back(values[i]);
    }
    points = std::move(p);
    values = std::move(v);
  }
};

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

// One Nelder-Mead descent from x0; returns when the simplex collapses or the
// evaluation budget is gone.
bool descend(const Objective& f, std::vector<double>& best, double& best_value,
             const std::vector<double>& step, const Box& box, const NelderMeadOptions& opt,
             int& evaluations) {
  const std::size_t n = best.size();
  Simplex s;
  s.points.push_back(best);
  s.values.push_back(best_value);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = best;
    p[i] += step[i];
    if (p[i] > box.upper[i]) p[i] = best[i] - step[i];
    box.clamp(p);
    s.points.push_back(p);
    s.values.push_back(safe_eval(f, p));
    ++evaluations;
  }

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  auto eval = [&](std::vector<double>& p) {
    box.clamp(p);
    ++evaluations;
    return safe_eval(f, p);
  };

  bool collapsed = false;
  while (evaluations < opt.max_evaluations) {
    s.sort();
    const double spread = s.values.back() - s.values.front();
    double diameter = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        diameter = std::max(diameter, std::abs(s.points[k][i] - s.points[0][i]) / step[i]);
    if (spread <= opt.rel_tolerance * std::abs(s.values.front()) + opt.abs_tolerance &&
        diameter <= opt.x_tolerance * 1e3) {
      collapsed = true;
      break;
    }
    if (diameter <= opt.x_tolerance) {
      collapsed = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += s.points[k][i] / static_cast<double>(n);

    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (s.points[n][i] - centroid[i]);
      return p;
    };

    auto reflected = along(-alpha);
    const double fr = eval(reflected);
    if (fr < s.values[0]) {
      auto expanded = along(-alpha * gamma);
      const double fe = eval(expanded);
      if (fe < fr) {
        s.points[n] = expanded;
        s.values[n] = fe;
      } else {
        s.points[n] = reflected;
        s.values[n] = fr;
      }
    } else if (fr < s.values[n - 1]) {
      s.points[n] = reflected;
      s.values[n] = fr;
    } else {
      const bool outside = fr < s.values[n];
      auto contracted = along(outside ? -alpha * rho : rho);
      const double fc = eval(contracted);
      if (fc < std::min(fr, s.values[n])) {
        s.points[n] = contracted;
        s.values[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          for (std::size_t i = 0; i < n; ++i)
            s.points[k][i] = s.points[0][i] + sigma * (s.points[k][i] - s.points[0][i]);
          s.values[k] = eval(s.points[k]);
        }
      }
    }
  }
  s.sort();
  best = s.points[0];
  best_value = s.values[0];
  return collapsed;
}

}  // namespace

MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, std::vector<double> step,
                           const Box& box, const NelderMeadOptions& options) {
  MinimizeResult result;
  box.clamp(x0);
  result.x = x0;
  result.value = safe_eval(f, x0);
  result.evaluations = 1;

  for (int round = 0; round <= options.max_restarts; ++round) {
    const double before = result.value;
    const bool collapsed =
        descend(f, result.x, result.value, step, box, options, result.evaluations);
    result.restarts = round;
    if (!collapsed) break;  // budget exhausted
    const double gain = before - result.value;
    if (round > 0 &&
        gain <= options.rel_tolerance * std::abs(result.value) + options.abs_tolerance) {
      result.converged = true;
      break;
    }
    // Later restarts probe a smaller neighbourhood.
    for (auto& s : step) s *= 0.3;
  }
  return result;
}

namespace {

std::vector<double> inward(std::span<const double> x, std::span<const double> h, const Box& box) {
  std::vector<double> c(x.begin(), x.end());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] - h[i] < box.lower[i]) c[i] = box.lower[i] + h[i];
    if (c[i] + h[i] > box.upper[i]) c[i] = box.upper[i] - h[i];
  }
  return c;
}

}  // namespace

Eigen::MatrixXd hessian(const Objective& f, std::span<const double> x, std::span<const double> h,
                        const Box& box) {
  const std::size_t n = x.size();
  auto c = inward(x, h, box);
  Eigen::MatrixXd H(n, n);
  const double f0 = f(c);
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    auto p = c;
    p[i] += di;
    p[j] += dj;
    return f(p);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double fp = at(i, h[i], i, 0.0);
    const double fm = at(i, -h[i], i, 0.0);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return H;
}

Eigen::VectorXd gradient(const Objective& f, std::span<const double> x, std::span<const double> h,
                         const Box& box) {
  const std::size_t n = x.size();
  auto c = inward(x, h, box);
  Eigen::VectorXd g(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = c, m = c;
    p[i] += h[i];
    m[i] -= h[i];
    g(i) = (f(p) - f(m)) / (2.0 * h[i]);
  }
  return g;
}

}  // namespace nvcharge::optimize
