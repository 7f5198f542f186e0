#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nvcharge::optimize {

using Objective = std::function<double(std::span<const double>)>;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
  void clamp(std::span<double> x) const;
};

struct NelderMeadOptions {
  int max_evaluations = 5000;
  int max_restarts = 4;
  double rel_tolerance = 1e-11;  ///< spread of simplex values, relative to |f|
  double abs_tolerance = 1e-10;
  double x_tolerance = 1e-9;     ///< simplex diameter in the scaled coordinates
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  int restarts = 0;
  bool converged = false;
};

/// Minimizes f over a box. Trial points are clamped into the box. `step`
/// gives the initial simplex edge per coordinate and doubles as the
/// coordinate scale. After each convergence the simplex is rebuilt around
/// the best point; the run is converged once a restart no longer improves.
MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, std::vector<double> step,
                           const Box& box, const NelderMeadOptions& options = {});

/// Central-difference Hessian. Coordinates closer than h to a bound are
/// evaluated around a point moved inward by h.
Eigen::MatrixXd hessian(const Objective& f, std::span<const double> x, std::span<const double> h,
                        const Box& box);

/// Central-difference gradient with the same bound handling.
Eigen::VectorXd gradient(const Objective& f, std::span<const double> x, std::span<const double> h,
                         const Box& box);

}  // namespace nvcharge::optimize
