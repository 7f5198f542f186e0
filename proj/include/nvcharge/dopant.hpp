#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "nvcharge/powerlaws.hpp"

namespace nvcharge {

using Vec3 = Eigen::Vector3d;

/// Focused Gaussian beam propagating along z.
struct BeamProfile {
  double power = 0.0;           ///< P_L, W
  double waist = 0.0;           ///< w0, m
  double rayleigh_range = 0.0;  ///< z_R, m
  Vec3 center = Vec3::Zero();   ///< focus, m

  double width_at(double z) const;
  /// Transverse-normalized profile f(r): integrates to 1 over every plane z = const.
  double normalized(const Vec3& r) const;
  void validate() const;
};

enum class KernelKind { screened_point, uniform_sphere, custom_tabulated };

/// Probability density (per unit volume) that a conduction electron created
/// at distance d from the NV ends up captured there. The total weight
/// integral of eta dV is at most 1.
class DiffusionKernel {
 public:
  /// eta(d) = exp(-d / L) / (4 pi D tau d), L = sqrt(D tau).
  static DiffusionKernel screened_point(double diffusion, double lifetime);
  /// Constant density inside a sphere of radius L = sqrt(D tau).
  static DiffusionKernel uniform_sphere(double diffusion, double lifetime);
  /// eta tabulated at ascending radii, linear in between, zero beyond.
  static DiffusionKernel tabulated(std::vector<double> radii, std::vector<double> values);

  KernelKind kind() const noexcept { return kind_; }
  double diffusion_length() const noexcept { return length_; }
  double diffusion() const noexcept { return diffusion_; }
  double lifetime() const noexcept { return lifetime_; }
  const std::vector<double>& radii() const noexcept { return radii_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double density(double distance) const;
  /// 4 pi d^2 eta(d): the kernel as a distribution over distance. Finite at d = 0.
  double radial_density(double distance) const;
  /// +inf for the screened kernel.
  double support_radius() const;
  double total_weight() const;

 private:
  KernelKind kind_ = KernelKind::screened_point;
  double diffusion_ = 0.0, lifetime_ = 0.0, length_ = 0.0;
  std::vector<double> radii_, values_;
};

struct DopantModelParams {
  double alpha = 0.0;  ///< photo-ionization coefficient, m^2 / (W s)
  double k_cp = 0.0;   ///< conduction band -> donor return rate, 1/s
  double kappa = 0.0;  ///< NV0 electron capture coefficient, m^3/s
  double n_p = 0.0;    ///< donor concentration, 1/m^3
  DiffusionKernel kernel = DiffusionKernel::screened_point(1e-4, 1e-8);

  void validate() const;
};

/// Placeholder magnitudes; nothing quantitative depends on them.
DopantModelParams default_dopant_params();
BeamProfile default_beam(double power);

struct QuadratureOptions {
  double rel_tolerance = 1e-6;  ///< requested from each adaptive level
  double max_rel_error = 1e-4;  ///< QuadratureError above this
  int max_depth = 12;
};

double intensity(const BeamProfile& beam, const Vec3& r);
double phosphorus_ionization_rate(double alpha, double intensity);
double conduction_population(double k_pc, double k_cp);

/// Integral of eta(|r - r_nv|) g(r) dV in spherical shells around the NV:
/// the radial part uses 4 pi d^2 eta(d), which removes the 1/d singularity.
/// `beam_axis_point` is any point on the z-directed line where g peaks; the
/// angular panels are split where that line crosses each shell.
double kernel_integral(const DiffusionKernel& kernel, const Vec3& r_nv, double domain_radius,
                       const std::function<double(const Vec3&)>& g, const Vec3& beam_axis_point,
                       const QuadratureOptions& options = {});

/// Integration radius: max(20 L_D, 8 w0, 4 z_R), capped at the kernel support.
double integration_radius(const DiffusionKernel& kernel, const BeamProfile& beam);

/// n_e = n_P * integral of eta P_e dV.
double electron_density(const DopantModelParams& params, const BeamProfile& beam, const Vec3& r_nv,
                        const QuadratureOptions& options = {});

/// kappa * n_e.
double recombination_rate_full(const DopantModelParams& params, const BeamProfile& beam,
                               const Vec3& r_nv, const QuadratureOptions& options = {});

/// kappa alpha n_P P_L * integral of eta f / (alpha P_L f + k_cp) dV, the
/// same quantity assembled from the combined integrand.
double recombination_rate_direct(const DopantModelParams& params, const BeamProfile& beam,
                                 const Vec3& r_nv, const QuadratureOptions& options = {});

/// Low-power slope kappa (alpha / k_cp) n_P * integral of eta f dV, in 1/(s W).
double recombination_rate_linear(const DopantModelParams& params, const BeamProfile& beam,
                                 const Vec3& r_nv, const QuadratureOptions& options = {});

/// recombination_rate_full at each power (beam_template.power is ignored).
/// Powers are evaluated on up to `threads` workers.
PowerSeries power_curve(const DopantModelParams& params, const BeamProfile& beam_template,
                        const Vec3& r_nv, const std::vector<double>& powers,
                        unsigned threads = 1, const QuadratureOptions& options = {});

}  // namespace nvcharge
