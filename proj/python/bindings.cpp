#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nvcharge/countstats.hpp"
#include "nvcharge/dopant.hpp"
#include "nvcharge/errors.hpp"
#include "nvcharge/plesim.hpp"
#include "nvcharge/powerlaws.hpp"
#include "nvcharge/screening.hpp"
#include "nvcharge/telegraph.hpp"

namespace py = pybind11;
using namespace nvcharge;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

PowerSeries make_series(const std::vector<double>& powers, const std::vector<double>& rates,
                        const std::optional<std::vector<double>>& sigmas) {
  if (powers.size() != rates.size() || (sigmas && sigmas->size() != powers.size()))
    throw InvalidParameter("powers, rates and sigmas must have equal lengths");
  PowerSeries s;
  for (std::size_t i = 0; i < powers.size(); ++i)
    s.points.push_back({powers[i], rates[i],
                        sigmas ? std::optional<double>((*sigmas)[i]) : std::nullopt});
  return s;
}

void bind_errors(py::module_& m) {
  // Translators run most recent first, so the base class is registered first.
  const auto base = py::register_exception<Error>(m, "NvchargeError", PyExc_RuntimeError);
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
}

void bind_telegraph(py::module_& m) {
  py::enum_<ChargeState>(m, "ChargeState")
      .value("NVminus", ChargeState::NVminus)
      .value("NVzero", ChargeState::NVzero);

  py::class_<TelegraphParams>(m, "TelegraphParams")
      .def(py::init([](double k_ion, double k_rec, double gamma_bright, double gamma_dark) {
             TelegraphParams p{k_ion, k_rec, gamma_bright, gamma_dark};
             p.validate();
             return p;
           }),
           py::arg("k_ion"), py::arg("k_rec"), py::arg("gamma_bright"), py::arg("gamma_dark"))
      .def_readwrite("k_ion", &TelegraphParams::k_ion)
      .def_readwrite("k_rec", &TelegraphParams::k_rec)
      .def_readwrite("gamma_bright", &TelegraphParams::gamma_bright)
      .def_readwrite("gamma_dark", &TelegraphParams::gamma_dark)
      .def("__repr__", [](const TelegraphParams& p) {
        return "TelegraphParams(k_ion=" + std::to_string(p.k_ion) +
               ", k_rec=" + std::to_string(p.k_rec) +
               ", gamma_bright=" + std::to_string(p.gamma_bright) +
               ", gamma_dark=" + std::to_string(p.gamma_dark) + ")";
      });

  py::class_<TimeTrace>(m, "TimeTrace")
      .def(py::init([](double bin_width, std::vector<std::int64_t> counts, double t0) {
             TimeTrace t{bin_width, t0, std::move(counts)};
             t.validate();
             return t;
           }),
           py::arg("bin_width"), py::arg("counts"), py::arg("t0") = 0.0)
      .def_readonly("bin_width", &TimeTrace::bin_width)
      .def_readonly("t0", &TimeTrace::t0)
      .def_property_readonly("counts",
                             [](const TimeTrace& t) {
                               return py::array_t<std::int64_t>(
                                   static_cast<py::ssize_t>(t.counts.size()), t.counts.data());
                             })
      .def_property_readonly("duration", &TimeTrace::duration)
      .def("__len__", &TimeTrace::size);

  m.def("stationary_population", &stationary_population, py::arg("k_ion"), py::arg("k_rec"));
  m.def("simulate_trace", &simulate_trace, py::arg("params"), py::arg("duration"),
        py::arg("bin_width"), py::arg("initial") = std::nullopt, py::arg("seed") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("rebin", &rebin, py::arg("trace"), py::arg("factor"));
}

void bind_countstats(py::module_& m) {
  py::class_<RateFit>(m, "RateFit")
      .def_readonly("params", &RateFit::params)
      .def_readonly("sigma", &RateFit::sigma)
      .def_readonly("sigma_information", &RateFit::sigma_information)
      .def_readonly("covariance", &RateFit::covariance)
      .def_readonly("loglik", &RateFit::loglik)
      .def_readonly("unidentifiable", &RateFit::unidentifiable)
      .def_readonly("converged", &RateFit::converged);

  m.def(
      "count_distribution",
      [](const TelegraphParams& p, double T, std::optional<ChargeState> initial) {
        return to_array(count_distribution(p, T, initial).p);
      },
      py::arg("params"), py::arg("counting_time"), py::arg("initial") = std::nullopt,
      "Photon-number probabilities p[n] for one counting window.");
  m.def(
      "fit_trace",
      [](const TimeTrace& t, std::vector<double> counting_times) {
        py::gil_scoped_release release;
        return fit_trace(t, counting_times);
      },
      py::arg("trace"), py::arg("counting_times") = std::vector<double>{0.01, 0.02, 0.05, 0.1});
}

void bind_powerlaws(py::module_& m) {
  py::class_<IonizationFit>(m, "IonizationFit")
      .def_readonly("a", &IonizationFit::a)
      .def_readonly("sigma_a", &IonizationFit::sigma_a)
      .def_readonly("saturation_power", &IonizationFit::saturation_power)
      .def_readonly("sigma_saturation_power", &IonizationFit::sigma_saturation_power)
      .def_readonly("saturation_fixed", &IonizationFit::saturation_fixed)
      .def_readonly("chi2", &IonizationFit::chi2);
  py::class_<ModelScore>(m, "ModelScore")
      .def_readonly("coefficient", &ModelScore::coefficient)
      .def_readonly("sigma", &ModelScore::sigma)
      .def_readonly("chi2", &ModelScore::chi2)
      .def_readonly("aic", &ModelScore::aic);
  py::class_<ModelComparison>(m, "ModelComparison")
      .def_readonly("linear", &ModelComparison::linear)
      .def_readonly("quadratic", &ModelComparison::quadratic)
      .def_property_readonly("selected",
                             [](const ModelComparison& c) { return to_string(c.selected); })
      .def_readonly("uninformative", &ModelComparison::uninformative);

  m.def("ionization_law", &ionization_law, py::arg("power"), py::arg("a"),
        py::arg("saturation_power"));
  m.def(
      "fit_ionization",
      [](const std::vector<double>& powers, const std::vector<double>& rates,
         const std::optional<std::vector<double>>& sigmas, std::optional<double> ps) {
        return fit_ionization(make_series(powers, rates, sigmas), ps);
      },
      py::arg("powers"), py::arg("rates"), py::arg("sigmas") = std::nullopt,
      py::arg("saturation_power") = std::nullopt);
  m.def(
      "compare_recombination_models",
      [](const std::vector<double>& powers, const std::vector<double>& rates,
         const std::optional<std::vector<double>>& sigmas) {
        return compare_recombination_models(make_series(powers, rates, sigmas));
      },
      py::arg("powers"), py::arg("rates"), py::arg("sigmas") = std::nullopt);
}

void bind_dopant(py::module_& m) {
  m.def(
      "recombination_rate",
      [](double power, double alpha, double k_cp, double kappa, double n_p, double diffusion,
         double lifetime, double waist, double rayleigh_range, std::vector<double> nv) {
        if (nv.size() != 3) throw InvalidParameter("nv_position must have three components");
        auto params = default_dopant_params();
        params.alpha = alpha;
        params.k_cp = k_cp;
        params.kappa = kappa;
        params.n_p = n_p;
        params.kernel = DiffusionKernel::screened_point(diffusion, lifetime);
        auto beam = default_beam(power);
        beam.waist = waist;
        beam.rayleigh_range = rayleigh_range;
        py::gil_scoped_release release;
        return recombination_rate_full(params, beam, Vec3(nv[0], nv[1], nv[2]));
      },
      py::arg("power"), py::arg("alpha") = default_dopant_params().alpha,
      py::arg("k_cp") = default_dopant_params().k_cp,
      py::arg("kappa") = default_dopant_params().kappa,
      py::arg("n_p") = default_dopant_params().n_p,
      py::arg("diffusion") = default_dopant_params().kernel.diffusion(),
      py::arg("lifetime") = default_dopant_params().kernel.lifetime(),
      py::arg("waist") = default_beam(0.0).waist,
      py::arg("rayleigh_range") = default_beam(0.0).rayleigh_range,
      py::arg("nv_position") = std::vector<double>{0.0, 0.0, 0.0},
      "Recombination rate k_rec (1/s) of an NV at nv_position for laser power (W); screened "
      "point diffusion kernel.");
  m.def("conduction_population", &conduction_population, py::arg("k_pc"), py::arg("k_cp"));
}

void bind_plesim(py::module_& m) {
  py::class_<LorentzPeak>(m, "LorentzPeak")
      .def(py::init<double, double, double>(), py::arg("center"), py::arg("fwhm"),
           py::arg("amplitude"))
      .def_readwrite("center", &LorentzPeak::center)
      .def_readwrite("fwhm", &LorentzPeak::fwhm)
      .def_readwrite("amplitude", &LorentzPeak::amplitude)
      .def("value", &LorentzPeak::value)
      .def_property_readonly("area", &LorentzPeak::area);

  py::class_<PLESpectrum>(m, "PLESpectrum")
      .def(py::init([](std::vector<double> x, std::vector<double> y, std::vector<double> err,
                       std::size_t reps) {
             PLESpectrum s{std::move(x), std::move(y), std::move(err), reps};
             s.validate();
             return s;
           }),
           py::arg("detunings"), py::arg("intensities"),
           py::arg("uncertainties") = std::vector<double>{}, py::arg("n_repetitions") = 1)
      .def_property_readonly("detunings", [](const PLESpectrum& s) { return to_array(s.detunings); })
      .def_property_readonly("intensities",
                             [](const PLESpectrum& s) { return to_array(s.intensities); })
      .def_property_readonly("uncertainties",
                             [](const PLESpectrum& s) { return to_array(s.uncertainties); })
      .def_readonly("n_repetitions", &PLESpectrum::n_repetitions)
      .def("__len__", &PLESpectrum::size);

  py::class_<MultiLorentzFit>(m, "MultiLorentzFit")
      .def_readonly("peaks", &MultiLorentzFit::peaks)
      .def_readonly("offset", &MultiLorentzFit::offset)
      .def_readonly("chi2", &MultiLorentzFit::chi2)
      .def_readonly("overlapping", &MultiLorentzFit::overlapping)
      .def_readonly("max_correlation", &MultiLorentzFit::max_correlation);

  m.def(
      "simulate_ple_repetitions",
      [](double start, double stop, std::size_t n_points, double dwell, double power,
         std::vector<LorentzPeak> peaks, double background, double ionization_coefficient,
         double k_rec, std::size_t repetitions, std::uint64_t seed) {
        const PLEScanConfig cfg{start, stop, n_points, dwell, power};
        const PLELine line{std::move(peaks), background, 0.0};
        const ChargeRule rule{ionization_coefficient, k_rec};
        py::gil_scoped_release release;
        return simulate_ple_repetitions(cfg, line, rule, repetitions, seed);
      },
      py::arg("detuning_start"), py::arg("detuning_stop"), py::arg("n_points"),
      py::arg("dwell_per_point"), py::arg("laser_power"), py::arg("peaks"),
      py::arg("background"), py::arg("ionization_coefficient"), py::arg("k_rec"),
      py::arg("repetitions"), py::arg("seed") = 1);
  m.def("average_spectra", &average_spectra, py::arg("scans"));
  m.def("spectrum_area", &spectrum_area, py::arg("spectrum"), py::arg("offset") = 0.0);
  m.def(
      "fit_multi_lorentz",
      [](const PLESpectrum& s, std::size_t n_peaks) { return fit_multi_lorentz(s, n_peaks); },
      py::arg("spectrum"), py::arg("n_peaks"));
}

void bind_screening(py::module_& m) {
  py::enum_<ScreeningModel>(m, "ScreeningModel")
      .value("thomas_fermi", ScreeningModel::thomas_fermi)
      .value("debye", ScreeningModel::debye);
  py::class_<ScreeningParams>(m, "ScreeningParams")
      .def(py::init<>())
      .def_readwrite("epsilon_r", &ScreeningParams::epsilon_r)
      .def_readwrite("distance", &ScreeningParams::distance)
      .def_readwrite("c_q", &ScreeningParams::c_q)
      .def_readwrite("model", &ScreeningParams::model)
      .def_readwrite("temperature", &ScreeningParams::temperature)
      .def_readwrite("effective_mass_ratio", &ScreeningParams::effective_mass_ratio);
  py::class_<InsensitiveRange>(m, "InsensitiveRange")
      .def_readonly("n_lo", &InsensitiveRange::n_lo)
      .def_readonly("n_hi", &InsensitiveRange::n_hi)
      .def_readonly("n_max", &InsensitiveRange::n_max)
      .def_readonly("tol", &InsensitiveRange::tol);
  m.def("screening_length", &screening_length, py::arg("n_e"), py::arg("params"));
  m.def("screened_field", &screened_field, py::arg("n_e"), py::arg("params"));
  m.def("field_insensitive_range", &field_insensitive_range, py::arg("params"),
        py::arg("tol") = 0.5, py::arg("search_lo") = 1.0, py::arg("search_hi") = 1e40);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Charge-state dynamics of NV centers: simulation, estimation and models";
  bind_errors(m);
  bind_telegraph(m);
  bind_countstats(m);
  bind_powerlaws(m);
  bind_dopant(m);
  bind_plesim(m);
  bind_screening(m);
}
