#include "nvcharge/dopant.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nvcharge/errors.hpp"

namespace nvcharge {

namespace {

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || !(v > 0)) throw InvalidParameter(std::string(name) + " must be positive");
}

}  // namespace

double BeamProfile::width_at(double z) const {
  const double q = z / rayleigh_range;
  return waist * std::sqrt(1.0 + q * q);
}

double BeamProfile::normalized(const Vec3& r) const {
  const Vec3 d = r - center;
  const double w = width_at(d.z());
  const double rho2 = d.x() * d.x() + d.y() * d.y();
  return 2.0 / (M_PI * w * w) * std::exp(-2.0 * rho2 / (w * w));
}

void BeamProfile::validate() const {
  if (!std::isfinite(power) || power < 0) throw InvalidParameter("laser power must be >= 0");
  require_positive(waist, "beam waist");
  require_positive(rayleigh_range, "rayleigh range");
  if (!center.allFinite()) throw InvalidParameter("beam center must be finite");
}

DiffusionKernel DiffusionKernel::screened_point(double diffusion, double lifetime) {
  require_positive(diffusion, "diffusion constant");
  require_positive(lifetime, "carrier lifetime");
  DiffusionKernel k;
  k.kind_ = KernelKind::screened_point;
  k.diffusion_ = diffusion;
  k.lifetime_ = lifetime;
  k.length_ = std::sqrt(diffusion * lifetime);
  return k;
}

DiffusionKernel DiffusionKernel::uniform_sphere(double diffusion, double lifetime) {
  auto k = screened_point(diffusion, lifetime);
  k.kind_ = KernelKind::uniform_sphere;
  return k;
}

DiffusionKernel DiffusionKernel::tabulated(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() < 2 || radii.size() != values.size())
    throw InvalidParameter("tabulated kernel needs matching radii and values (>= 2)");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!std::isfinite(radii[i]) || radii[i] < 0 || (i > 0 && !(radii[i] > radii[i - 1])))
      throw InvalidParameter("kernel radii must be ascending and non-negative");
    if (!std::isfinite(values[i]) || values[i] < 0)
      throw InvalidParameter("kernel values must be non-negative");
  }
  DiffusionKernel k;
  k.kind_ = KernelKind::custom_tabulated;
  k.radii_ = std::move(radii);
  k.values_ = std::move(values);
  k.length_ = k.radii_.back();
  if (k.total_weight() > 1.0 + 1e-6)
    throw InvalidParameter("tabulated kernel integrates to more than 1");
  return k;
}

double DiffusionKernel::density(double d) const {
  switch (kind_) {
    case KernelKind::screened_point:
      return std::exp(-d / length_) / (4.0 * M_PI * diffusion_ * lifetime_ * d);
    case KernelKind::uniform_sphere:
      return d < length_ ? 3.0 / (4.0 * M_PI * length_ * length_ * length_) : 0.0;
    case KernelKind::custom_tabulated: {
      if (d < radii_.front() || d > radii_.back()) return 0.0;
      auto it = std::upper_bound(radii_.begin(), radii_.end(), d);
      if (it == radii_.end()) return values_.back();
      const auto i = static_cast<std::size_t>(it - radii_.begin());
      const double t = (d - radii_[i - 1]) / (radii_[i] - radii_[i - 1]);
      return values_[i - 1] + t * (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

double DiffusionKernel::radial_density(double d) const {
  if (kind_ == KernelKind::screened_point)
    return d * std::exp(-d / length_) / (diffusion_ * lifetime_);
  return 4.0 * M_PI * d * d * density(d);
}

double DiffusionKernel::support_radius() const {
  return kind_ == KernelKind::screened_point ? std::numeric_limits<double>::infinity() : length_;
}

double DiffusionKernel::total_weight() const {
  switch (kind_) {
    case KernelKind::screened_point:
    case KernelKind::uniform_sphere:
      return 1.0;
    case KernelKind::custom_tabulated: {
      double s = 0.0;
      for (std::size_t i = 1; i < radii_.size(); ++i)
        s += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
            [this](double d) { return radial_density(d); }, radii_[i - 1], radii_[i], 0, 1e-12);
      return s;
    }
  }
  return 0.0;
}

void DopantModelParams::validate() const {
  require_positive(alpha, "alpha");
  require_positive(k_cp, "k_cp");
  require_positive(kappa, "kappa");
  require_positive(n_p, "n_P");
}

DopantModelParams default_dopant_params() {
  DopantModelParams p;
  p.alpha = 1.9e-2;
  p.k_cp = 1e6;
  p.kappa = 1.5e-20;
  p.n_p = 5e22;
  p.kernel = DiffusionKernel::screened_point(1e-3, 1e-9);  // L_D = 1 um
  return p;
}

BeamProfile default_beam(double power) {
  BeamProfile b;
  b.power = power;
  b.waist = 0.35e-6;
  b.rayleigh_range = 1.45e-6;
  return b;
}

double intensity(const BeamProfile& beam, const Vec3& r) { return beam.power * beam.normalized(r); }

double phosphorus_ionization_rate(double alpha, double intensity) {
  if (!std::isfinite(alpha) || alpha < 0) throw InvalidParameter("alpha must be >= 0");
  if (!std::isfinite(intensity) || intensity < 0) throw InvalidParameter("intensity must be >= 0");
  return alpha * intensity;
}

double conduction_population(double k_pc, double k_cp) {
  if (!(k_pc >= 0) || !(k_cp >= 0)) throw InvalidParameter("rates must be >= 0");
  if (std::isinf(k_pc)) return 1.0;
  if (k_pc + k_cp <= 0) throw InvalidParameter("conduction population undefined for k_pc = k_cp = 0");
  return k_pc / (k_pc + k_cp);
}

double integration_radius(const DiffusionKernel& kernel, const BeamProfile& beam) {
  const double r = std::max({20.0 * kernel.diffusion_length(), 8.0 * beam.waist,
                             4.0 * beam.rayleigh_range});
  return std::min(r, kernel.support_radius());
}

double kernel_integral(const DiffusionKernel& kernel, const Vec3& r_nv, double domain_radius,
                       const std::function<double(const Vec3&)>& g, const Vec3& beam_axis_point,
                       const QuadratureOptions& options) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  const double inner_tol = options.rel_tolerance * 0.1;
  const auto depth = static_cast<unsigned>(options.max_depth);

  // The beam axis pierces each shell at known directions; splitting the
  // angular ranges there keeps the narrow beam footprint at panel edges.
  const Vec3 axis_offset = beam_axis_point - r_nv;
  const double rho_axis = std::hypot(axis_offset.x(), axis_offset.y());
  const double phi_axis = rho_axis > 0 ? std::atan2(axis_offset.y(), axis_offset.x()) : 0.0;

  auto shell_average = [&](double d) {
    std::vector<double> mu_cuts{-1.0, 1.0};
    if (d > rho_axis) {
      const double half = std::sqrt(d * d - rho_axis * rho_axis);
      for (double t : {-axis_offset.z() - half, -axis_offset.z() + half})
        mu_cuts.push_back(std::clamp((axis_offset.z() + t) / d, -1.0, 1.0));
    } else {
      mu_cuts.push_back(0.0);
    }
    std::sort(mu_cuts.begin(), mu_cuts.end());
    mu_cuts.erase(std::unique(mu_cuts.begin(), mu_cuts.end()), mu_cuts.end());

    auto ring = [&](double mu) {
      const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      auto at = [&](double phi) {
        return g(r_nv + d * Vec3(s * std::cos(phi), s * std::sin(phi), mu));
      };
      return (GK::integrate(at, phi_axis - M_PI, phi_axis, depth, inner_tol) +
              GK::integrate(at, phi_axis, phi_axis + M_PI, depth, inner_tol)) /
             (2.0 * M_PI);
    };
    double sum = 0.0;
    for (std::size_t i = 1; i < mu_cuts.size(); ++i)
      sum += GK::integrate(ring, mu_cuts[i - 1], mu_cuts[i], depth, inner_tol);
    return 0.5 * sum;
  };

  std::vector<double> cuts{0.0, domain_radius};
  const double L = kernel.diffusion_length();
  for (double c : {L, 4.0 * L}) cuts.push_back(c);
  for (double c : kernel.radii()) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                            [&](double c) { return c < 0 || c > domain_radius; }),
             cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0, error = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    double err = 0.0;
    total += GK::integrate(
        [&](double d) { return kernel.radial_density(d) * shell_average(d); }, cuts[i - 1],
        cuts[i], depth, options.rel_tolerance, &err);
    error += err;
  }
  if (!std::isfinite(total)) throw QuadratureError(std::numeric_limits<double>::infinity(),
                                                   options.max_rel_error);
  const double achieved = total != 0.0 ? error / std::abs(total) : error;
  if (achieved > options.max_rel_error) throw QuadratureError(achieved, options.max_rel_error);
  return total;
}

namespace {

void validate_inputs(const DopantModelParams& params, const BeamProfile& beam, const Vec3& r_nv) {
  params.validate();
  beam.validate();
  if (!r_nv.allFinite()) throw InvalidParameter("NV position must be finite");
}

}  // namespace

double electron_density(const DopantModelParams& params, const BeamProfile& beam, const Vec3& r_nv,
                        const QuadratureOptions& options) {
  validate_inputs(params, beam, r_nv);
  if (beam.power == 0.0) return 0.0;
  const double R = integration_radius(params.kernel, beam);
  const auto occupied = [&](const Vec3& r) {
    const double k_pc = params.alpha * beam.power * beam.normalized(r);
    return k_pc / (k_pc + params.k_cp);
  };
  return params.n_p * kernel_integral(params.kernel, r_nv, R, occupied, beam.center, options);
}

double recombination_rate_full(const DopantModelParams& params, const BeamProfile& beam,
                               const Vec3& r_nv, const QuadratureOptions& options) {
  return params.kappa * electron_density(params, beam, r_nv, options);
}

double recombination_rate_direct(const DopantModelParams& params, const BeamProfile& beam,
                                 const Vec3& r_nv, const QuadratureOptions& options) {
  validate_inputs(params, beam, r_nv);
  if (beam.power == 0.0) return 0.0;
  const double R = integration_radius(params.kernel, beam);
  const auto integrand = [&](const Vec3& r) {
    const double f = beam.normalized(r);
    return f / (params.alpha * beam.power * f + params.k_cp);
  };
  const double I = kernel_integral(params.kernel, r_nv, R, integrand, beam.center, options);
  return params.kappa * params.alpha * I * params.n_p * beam.power;
}

double recombination_rate_linear(const DopantModelParams& params, const BeamProfile& beam,
                                 const Vec3& r_nv, const QuadratureOptions& options) {
  validate_inputs(params, beam, r_nv);
  const double R = integration_radius(params.kernel, beam);
  const double overlap = kernel_integral(
      params.kernel, r_nv, R, [&](const Vec3& r) { return beam.normalized(r); }, beam.center,
      options);
  return params.kappa * (params.alpha / params.k_cp) * overlap * params.n_p;
}

PowerSeries power_curve(const DopantModelParams& params, const BeamProfile& beam_template,
                        const Vec3& r_nv, const std::vector<double>& powers, unsigned threads,
                        const QuadratureOptions& options) {
  for (double p : powers)
    if (!std::isfinite(p) || !(p > 0)) throw InvalidParameter("powers must be positive");
  PowerSeries out;
  out.points.resize(powers.size());
  auto evaluate = [&](std::size_t i) {
    BeamProfile beam = beam_template;
    beam.power = powers[i];
    out.points[i] = PowerPoint{powers[i], recombination_rate_full(params, beam, r_nv, options),
                               std::nullopt};
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(powers.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < powers.size(); ++i) evaluate(i);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w)
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < powers.size(); i += workers) evaluate(i);
    }));
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace nvcharge
