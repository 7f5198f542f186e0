#include "commands.hpp"

#include <array>
#include <functional>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "config.hpp"
#include "nvcharge/countstats.hpp"
#include "nvcharge/dopant.hpp"
#include "nvcharge/errors.hpp"
#include "nvcharge/io.hpp"
#include "nvcharge/plesim.hpp"
#include "nvcharge/powerlaws.hpp"
#include "nvcharge/screening.hpp"
#include "nvcharge/svg.hpp"
#include "nvcharge/telegraph.hpp"
#include "report.hpp"

namespace nvt {

using namespace nvcharge;
namespace io = nvcharge::io;

namespace {

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                               "#9467bd", "#ff7f0e", "#8c564b"};

const char* color(std::size_t i) { return kPalette[i % kPalette.size()]; }

// Shared front matter of every command: the configuration, the global keys,
// and the report that collects outputs.
struct Context {
  const Invocation& inv;
  json config;
  Section root;
  std::uint64_t seed = 0;
  fs::path out_dir;

  explicit Context(const Invocation& i)
      : inv(i),
        config(i.config ? load_config(*i.config) : json::object()),
        root(config, i.config ? i.config->string() : "<defaults>") {
    const auto cfg_seed = root.integer("seed", 1);
    if (cfg_seed < 0) throw InvalidParameter(root.where("seed") + " must be >= 0");
    seed = inv.seed.value_or(static_cast<std::uint64_t>(cfg_seed));
    out_dir = inv.out.value_or(fs::path(root.text("out", ".")));
    const std::string verbosity = root.text("verbosity", "");
    if (!verbosity.empty() && !std::getenv("NVT_LOG")) {
      const auto level = spdlog::level::from_str(verbosity);
      if (level == spdlog::level::off && verbosity != "off")
        throw InvalidParameter(root.where("verbosity") + " is not a log level");
      spdlog::set_level(level);
    }
  }

  /// Configuration as hashed into the report: resolved seed, no output
  /// location or verbosity, flag overrides folded in.
  json effective(const json& overrides = json::object()) const {
    json e = config;
    e.erase("out");
    e.erase("verbosity");
    e["seed"] = seed;
    for (auto it = overrides.begin(); it != overrides.end(); ++it) e[it.key()] = *it;
    return e;
  }

  /// Input paths in configs are relative to the config file.
  fs::path resolve(const fs::path& p) const {
    if (p.is_absolute() || !inv.config) return p;
    return inv.config->parent_path() / p;
  }
};

std::string read_input(RunReport& report, const fs::path& path) {
  const std::string text = io::read_file(path);
  report.add_input(path, text);
  return text;
}

std::optional<ChargeState> parse_state(const Section& s, const std::string& key,
                                       const std::string& fallback) {
  const std::string v = s.text(key, fallback);
  if (v == "stationary") return std::nullopt;
  if (v == "NVminus") return ChargeState::NVminus;
  if (v == "NVzero") return ChargeState::NVzero;
  throw InvalidParameter(s.where(key) + " must be one of stationary, NVminus, NVzero");
}

ChargeState parse_definite_state(const Section& s, const std::string& key) {
  const auto st = parse_state(s, key, "NVminus");
  if (!st) throw InvalidParameter(s.where(key) + " must be NVminus or NVzero");
  return *st;
}

TelegraphParams read_telegraph(const Section& s) {
  TelegraphParams p;
  p.k_ion = s.number("k_ion_per_s", 0.5);
  p.k_rec = s.number("k_rec_per_s", 11.0);
  p.gamma_bright = s.number("gamma_bright_cps", 2.0e4);
  p.gamma_dark = s.number("gamma_dark_cps", 1.0e3);
  p.validate();
  return p;
}

std::string svg_number(double v) { return io::format_number(v); }

// simulate-trace ------------------------------------------------------------

int simulate_trace_cmd(const Invocation& inv) {
  Context ctx(inv);
  const auto params = read_telegraph(ctx.root.child("telegraph"));
  const double duration = ctx.root.number("duration_s", 300.0);
  const double bin_width = ctx.root.number("bin_width_s", 0.01);
  const auto initial = parse_state(ctx.root, "initial_state", "stationary");
  ctx.root.reject_unknown_keys();

  const auto trace = simulate_trace(params, duration, bin_width, initial, ctx.seed);
  RunReport report(inv.command, ctx.out_dir, ctx.effective(), ctx.seed);
  report.write_output("trace.csv", io::trace_csv(trace));
  if (inv.svg) {
    const std::size_t n = std::min<std::size_t>(trace.size(), 2000);
    svg::Series s{"counts per bin", {}, {}, svg::Style::line, color(0)};
    for (std::size_t i = 0; i < n; ++i) {
      s.x.push_back(trace.t0 + trace.bin_width * static_cast<double>(i));
      s.y.push_back(static_cast<double>(trace.counts[i]));
    }
    report.write_output("trace.svg", svg::render({"Fluorescence time trace", "time (s)",
                                                  "counts per bin", false, false, {s}}));
  }
  report.finish();
  return 0;
}

// fit-trace -----------------------------------------------------------------

int fit_trace_cmd(const Invocation& inv) {
  Context ctx(inv);
  fs::path trace_path;
  if (!inv.inputs.empty()) {
    if (inv.inputs.size() != 1) throw InvalidParameter("fit-trace takes exactly one trace file");
    trace_path = inv.inputs.front();
    ctx.root.text("trace", "");
  } else {
    const std::string p = ctx.root.text("trace", "");
    if (p.empty()) throw InvalidParameter("fit-trace needs a trace file");
    trace_path = ctx.resolve(p);
  }
  const auto counting_times = ctx.root.numbers("counting_times_s", {0.01, 0.02, 0.05, 0.1});
  const auto fit_section = ctx.root.child("fit");
  FitOptions options;
  options.max_restarts = static_cast<int>(fit_section.integer("max_restarts", options.max_restarts));
  options.max_evaluations =
      static_cast<int>(fit_section.integer("max_evaluations", options.max_evaluations));
  options.rel_tolerance = fit_section.number("rel_tolerance", options.rel_tolerance);
  ctx.root.reject_unknown_keys();

  RunReport report(inv.command, ctx.out_dir, ctx.effective(), ctx.seed);
  const auto trace = io::parse_trace_csv(read_input(report, trace_path), trace_path.string());
  trace.validate();
  const auto fit = fit_trace(trace, counting_times, options);
  const auto histograms = histograms_from_trace(trace, counting_times);

  json out = io::to_json(fit);
  out["stationary_population"] = stationary_population(fit.params.k_ion, fit.params.k_rec);
  out["counting_times_s"] = counting_times;
  report.write_output("rate_fit.json", out.dump(2) + "\n");
  for (const auto& h : histograms)
    report.write_output("histogram_" + io::format_number(h.counting_time) + "s.csv",
                        io::histogram_csv(h));
  if (inv.svg) {
    svg::Plot plot{"Photon count distributions", "photons per window", "probability", false,
                   true, {}};
    for (std::size_t k = 0; k < histograms.size(); ++k) {
      const auto& h = histograms[k];
      const std::string label = "T = " + svg_number(h.counting_time) + " s";
      svg::Series data{label, {}, {}, svg::Style::points, color(k)};
      const double total = static_cast<double>(h.total());
      for (const auto& [n, c] : h.bin_counts) {
        data.x.push_back(static_cast<double>(n));
        data.y.push_back(static_cast<double>(c) / total);
      }
      const auto pmf = count_distribution(fit.params, h.counting_time);
      svg::Series model{label + " fit", {}, {}, svg::Style::line, color(k)};
      const auto hi = static_cast<std::size_t>(h.bin_counts.rbegin()->first);
      for (std::size_t n = 0; n < pmf.p.size() && n <= hi; ++n) {
        model.x.push_back(static_cast<double>(n));
        model.y.push_back(pmf.p[n]);
      }
      plot.series.push_back(std::move(data));
      plot.series.push_back(std::move(model));
    }
    report.write_output("histograms.svg", svg::render(plot));
  }
  int status = 0;
  if (!fit.converged) {
    report.set_status("not_converged");
    status = 3;
  }
  report.finish();
  if (status) spdlog::error("rate fit did not converge; best estimate written to rate_fit.json");
  return status;
}

// fit-power -----------------------------------------------------------------

int fit_power_cmd(const Invocation& inv) {
  Context ctx(inv);
  const std::string law = inv.law.value_or(ctx.root.text("law", "recombination"));
  if (law != "recombination" && law != "ionization")
    throw InvalidParameter("law must be 'recombination' or 'ionization'");
  const auto cfg_ps = ctx.root.maybe_number("saturation_power_W");
  const std::optional<double> ps = inv.saturation_power ? inv.saturation_power : cfg_ps;
  const std::string mode_text = ctx.root.text("replicates", "pool");
  if (mode_text != "pool" && mode_text != "average")
    throw InvalidParameter(ctx.root.where("replicates") + " must be 'pool' or 'average'");
  const auto mode = mode_text == "pool" ? ReplicateMode::pool : ReplicateMode::average;
  std::vector<fs::path> files = inv.inputs;
  for (const auto& p : ctx.root.texts("series")) files.push_back(ctx.resolve(p));
  ctx.root.reject_unknown_keys();
  if (files.empty()) throw InvalidParameter("fit-power needs at least one series file");
  if (ps && law != "ionization")
    throw InvalidParameter("a saturation power only applies to the ionization law");

  json overrides = {{"law", law}};
  if (ps) overrides["saturation_power_W"] = *ps;
  RunReport report(inv.command, ctx.out_dir, ctx.effective(overrides), ctx.seed);
  PowerSeries series;
  for (const auto& f : files) {
    const auto part = io::parse_power_series_csv(read_input(report, f), f.string());
    series.points.insert(series.points.end(), part.points.begin(), part.points.end());
  }

  svg::Plot plot{law == "ionization" ? "Ionization rate vs power" : "Recombination rate vs power",
                 "laser power (W)", "rate (1/s)", false, false, {}};
  svg::Series data{"data", {}, {}, svg::Style::points, color(0)};
  double pmax = 0.0;
  for (const auto& p : series.points) {
    data.x.push_back(p.power);
    data.y.push_back(p.rate);
    pmax = std::max(pmax, p.power);
  }
  plot.series.push_back(data);
  auto curve = [&](const std::string& label, std::size_t c, const std::function<double(double)>& f) {
    svg::Series s{label, {}, {}, svg::Style::line, color(c)};
    for (int i = 0; i <= 100; ++i) {
      const double P = pmax * 1.05 * i / 100.0;
      s.x.push_back(P);
      s.y.push_back(f(P));
    }
    plot.series.push_back(std::move(s));
  };

  if (law == "ionization") {
    const auto fit = fit_ionization(series, ps, mode);
    report.write_output("ionization_fit.json", io::to_json(fit).dump(2) + "\n");
    curve("a P^2 / (1 + P / P_s)", 1,
          [&](double P) { return ionization_law(P, fit.a, fit.saturation_power); });
  } else {
    const auto cmp = compare_recombination_models(series, mode);
    report.write_output("model_comparison.json", io::to_json(cmp).dump(2) + "\n");
    curve("linear", 1, [&](double P) { return cmp.linear.coefficient * P; });
    curve("quadratic", 2, [&](double P) { return cmp.quadratic.coefficient * P * P; });
  }
  if (inv.svg) report.write_output("power_fit.svg", svg::render(plot));
  report.finish();
  return 0;
}

// eval-dopant ---------------------------------------------------------------

DiffusionKernel read_kernel(const Section& s, const DiffusionKernel& fallback) {
  const std::string kind = s.text("kind", "screened_point");
  if (kind == "custom_tabulated")
    return DiffusionKernel::tabulated(s.numbers("radii_m"), s.numbers("values_per_m3"));
  const double D = s.number("diffusion_m2_per_s", fallback.diffusion());
  const double tau = s.number("lifetime_s", fallback.lifetime());
  if (kind == "screened_point") return DiffusionKernel::screened_point(D, tau);
  if (kind == "uniform_sphere") return DiffusionKernel::uniform_sphere(D, tau);
  throw InvalidParameter(s.where("kind") +
                         " must be screened_point, uniform_sphere or custom_tabulated");
}

Vec3 read_vec3(const Section& s, const std::string& key) {
  const auto v = s.numbers(key, {0.0, 0.0, 0.0});
  if (v.size() != 3) throw InvalidParameter(s.where(key) + " must have three components");
  return {v[0], v[1], v[2]};
}

int eval_dopant_cmd(const Invocation& inv) {
  Context ctx(inv);
  auto params = default_dopant_params();
  const auto d = ctx.root.child("dopant");
  params.alpha = d.number("alpha_m2_per_W_s", params.alpha);
  params.k_cp = d.number("k_cp_per_s", params.k_cp);
  params.kappa = d.number("kappa_m3_per_s", params.kappa);
  params.n_p = d.number("n_p_per_m3", params.n_p);
  params.kernel = read_kernel(d.child("kernel"), params.kernel);
  auto beam = default_beam(0.0);
  const auto b = ctx.root.child("beam");
  beam.waist = b.number("waist_m", beam.waist);
  beam.rayleigh_range = b.number("rayleigh_range_m", beam.rayleigh_range);
  beam.center = read_vec3(b, "center_m");
  const Vec3 nv = read_vec3(ctx.root, "nv_position_m");
  const auto powers = ctx.root.numbers("powers_W");
  const auto q = ctx.root.child("quadrature");
  QuadratureOptions qopt;
  qopt.rel_tolerance = q.number("rel_tolerance", qopt.rel_tolerance);
  qopt.max_rel_error = q.number("max_rel_error", qopt.max_rel_error);
  qopt.max_depth = static_cast<int>(q.integer("max_depth", qopt.max_depth));
  ctx.root.reject_unknown_keys();
  params.validate();
  beam.validate();

  RunReport report(inv.command, ctx.out_dir, ctx.effective(), ctx.seed);
  const auto curve = power_curve(params, beam, nv, powers, inv.threads, qopt);
  const double slope = recombination_rate_linear(params, beam, nv, qopt);
  json out = {{"linear_slope_per_s_W", slope},
              {"integration_radius_m", integration_radius(params.kernel, beam)},
              {"kernel_weight", params.kernel.total_weight()},
              {"powers_W", json::array()},
              {"k_rec_per_s", json::array()},
              {"ratio_to_linear", json::array()}};
  for (const auto& p : curve.points) {
    out["powers_W"].push_back(p.power);
    out["k_rec_per_s"].push_back(p.rate);
    out["ratio_to_linear"].push_back(p.power > 0 ? p.rate / (slope * p.power) : 1.0);
  }
  report.write_output("power_curve.csv", io::power_series_csv(curve));
  report.write_output("dopant.json", out.dump(2) + "\n");
  if (inv.svg) {
    svg::Series model{"k_rec (full model)", {}, {}, svg::Style::points, color(0)};
    svg::Series lin{"low-power slope", {}, {}, svg::Style::line, color(1)};
    for (const auto& p : curve.points) {
      model.x.push_back(p.power);
      model.y.push_back(p.rate);
      lin.x.push_back(p.power);
      lin.y.push_back(slope * p.power);
    }
    report.write_output("power_curve.svg",
                        svg::render({"Recombination rate vs power", "laser power (W)",
                                     "k_rec (1/s)", true, true, {model, lin}}));
  }
  report.finish();
  return 0;
}

// simulate-ple / fit-ple ----------------------------------------------------

LorentzPeak read_peak(const Section& s) {
  LorentzPeak p{s.number("center_Hz"), s.number("fwhm_Hz"), s.number("amplitude_cps")};
  p.validate();
  return p;
}

svg::Plot spectrum_plot(const PLESpectrum& s, const MultiLorentzFit* fit) {
  svg::Plot plot{"PLE spectrum", "detuning (GHz)", "intensity (counts/s)", false, false, {}};
  svg::Series data{"data", {}, {}, svg::Style::points, color(0)};
  for (std::size_t i = 0; i < s.size(); ++i) {
    data.x.push_back(s.detunings[i] * 1e-9);
    data.y.push_back(s.intensities[i]);
  }
  plot.series.push_back(std::move(data));
  if (fit) {
    svg::Series model{"multi-Lorentz fit", {}, {}, svg::Style::line, color(1)};
    const double lo = s.detunings.front(), hi = s.detunings.back();
    for (int i = 0; i <= 800; ++i) {
      const double x = lo + (hi - lo) * i / 800.0;
      double y = fit->offset;
      for (const auto& p : fit->peaks) y += p.value(x);
      model.x.push_back(x * 1e-9);
      model.y.push_back(y);
    }
    plot.series.push_back(std::move(model));
  }
  return plot;
}

// Runs the fit; on failure writes the best estimate and reports status 3.
int fit_and_write(RunReport& report, const PLESpectrum& s, std::size_t n_peaks,
                  const std::optional<MultiLorentzInit>& init, bool svg_out) {
  try {
    const auto fit = fit_multi_lorentz(s, n_peaks, init);
    report.write_output("fit.json", io::to_json(fit).dump(2) + "\n");
    if (svg_out) report.write_output("spectrum.svg", svg::render(spectrum_plot(s, &fit)));
    return 0;
  } catch (const ConvergenceError<MultiLorentzFit>& e) {
    json out = io::to_json(e.best_so_far());
    out["error"] = e.what();
    report.write_output("fit.json", out.dump(2) + "\n");
    report.set_status("not_converged");
    spdlog::error("{}", e.what());
    return 3;
  }
}

int simulate_ple_cmd(const Invocation& inv) {
  Context ctx(inv);
  const auto sc = ctx.root.child("scan");
  PLEScanConfig scan;
  scan.detuning_start = sc.number("detuning_start_Hz", -5e9);
  scan.detuning_stop = sc.number("detuning_stop_Hz", 5e9);
  const auto n_points = sc.integer("n_points", 101);
  if (n_points < 2) throw InvalidParameter(sc.where("n_points") + " must be >= 2");
  scan.n_points = static_cast<std::size_t>(n_points);
  scan.dwell_per_point = sc.number("dwell_per_point_s", 0.05);
  scan.laser_power = sc.number("laser_power_W", 148e-9);
  scan.validate();
  const auto ls = ctx.root.child("line");
  PLELine line;
  for (const auto& p : ls.children("peaks")) line.peaks.push_back(read_peak(p));
  if (line.peaks.empty()) line.peaks.push_back({0.0, 1e9, 2.0e4});
  line.background = ls.number("background_cps", 1.0e3);
  line.center_jitter = ls.number("center_jitter_Hz", 0.0);
  line.validate();
  const auto rs = ctx.root.child("charge_rule");
  ChargeRule rule{rs.number("ionization_coefficient_per_s_W", 0.5 / 148e-9),
                  rs.number("k_rec_per_s", 11.0)};
  rule.validate();
  const auto reps = ctx.root.integer("repetitions", 50);
  if (reps < 1) throw InvalidParameter(ctx.root.where("repetitions") + " must be >= 1");
  const auto initial = parse_definite_state(ctx.root, "initial_state");
  const auto fit_peaks = ctx.root.integer("fit_peaks", static_cast<std::int64_t>(line.peaks.size()));
  if (fit_peaks < 0) throw InvalidParameter(ctx.root.where("fit_peaks") + " must be >= 0");
  ctx.root.reject_unknown_keys();

  RunReport report(inv.command, ctx.out_dir, ctx.effective(), ctx.seed);
  const auto scans = simulate_ple_repetitions(scan, line, rule, static_cast<std::size_t>(reps),
                                              ctx.seed, initial);
  json index = {{"repetitions", reps}, {"seed", ctx.seed}, {"files", json::array()}};
  for (std::size_t r = 0; r < scans.size(); ++r) {
    const std::string name = fmt::format("rep_{:04d}.csv", r);
    report.write_output("scans/" + name, io::spectrum_csv(scans[r]));
    index["files"].push_back(name);
  }
  report.write_output("scans/index.json", index.dump(2) + "\n");
  const auto avg = average_spectra(scans);
  report.write_output("average.csv", io::spectrum_csv(avg));
  int status = 0;
  if (fit_peaks > 0) {
    status = fit_and_write(report, avg, static_cast<std::size_t>(fit_peaks), std::nullopt, inv.svg);
  } else if (inv.svg) {
    report.write_output("spectrum.svg", svg::render(spectrum_plot(avg, nullptr)));
  }
  report.finish();
  return status;
}

int fit_ple_cmd(const Invocation& inv) {
  Context ctx(inv);
  const auto n_peaks = ctx.root.integer("n_peaks", 1);
  if (n_peaks < 1) throw InvalidParameter(ctx.root.where("n_peaks") + " must be >= 1");
  std::vector<fs::path> files = inv.inputs;
  for (const auto& p : ctx.root.texts("spectra")) files.push_back(ctx.resolve(p));
  const auto powers = ctx.root.numbers("laser_powers_W", {});
  std::optional<MultiLorentzInit> init;
  if (ctx.root.has("init")) {
    const auto is = ctx.root.child("init");
    MultiLorentzInit mi;
    for (const auto& p : is.children("peaks")) mi.peaks.push_back(read_peak(p));
    mi.offset = is.number("offset_cps", 0.0);
    init = mi;
  }
  ctx.root.reject_unknown_keys();
  if (files.empty()) throw InvalidParameter("fit-ple needs at least one spectrum file");
  if (!powers.empty() && powers.size() != files.size())
    throw InvalidParameter("laser_powers_W must give one power per spectrum file");

  RunReport report(inv.command, ctx.out_dir, ctx.effective(), ctx.seed);
  std::vector<PLESpectrum> spectra;
  for (const auto& f : files) {
    auto s = io::parse_spectrum_csv(read_input(report, f), f.string());
    s.validate();
    spectra.push_back(std::move(s));
  }
  int status = 0;
  if (powers.empty()) {
    const auto avg = average_spectra(spectra);
    if (spectra.size() > 1) report.write_output("average.csv", io::spectrum_csv(avg));
    status = fit_and_write(report, avg, static_cast<std::size_t>(n_peaks), init, inv.svg);
  } else {
    std::map<double, PLESpectrum> by_power;
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      if (by_power.count(powers[i]))
        throw InvalidParameter("laser_powers_W contains a repeated power");
      by_power[powers[i]] = spectra[i];
    }
    FwhmTable table;
    try {
      table = fwhm_vs_power(by_power, static_cast<std::size_t>(n_peaks));
    } catch (const ConvergenceError<MultiLorentzFit>& e) {
      spdlog::error("{}", e.what());
      report.set_status("not_converged");
      report.finish();
      return 3;
    }
    report.write_output("fwhm.json", io::to_json(table).dump(2) + "\n");
    std::string csv = "power_W,peak,fwhm_Hz,sigma_Hz\n";
    for (const auto& r : table.rows)
      csv += io::format_number(r.power) + "," + std::to_string(r.peak) + "," +
             io::format_number(r.fwhm) + "," + io::format_number(r.sigma) + "\n";
    report.write_output("fwhm.csv", csv);
    if (inv.svg) {
      svg::Plot plot{"PLE linewidth vs power", "laser power (W)", "FWHM (GHz)", true, false, {}};
      for (std::size_t k = 0; k < static_cast<std::size_t>(n_peaks); ++k) {
        svg::Series s{"peak " + std::to_string(k), {}, {}, svg::Style::points, color(k)};
        for (const auto& r : table.rows)
          if (r.peak == k) {
            s.x.push_back(r.power);
            s.y.push_back(r.fwhm * 1e-9);
          }
        plot.series.push_back(std::move(s));
      }
      report.write_output("fwhm.svg", svg::render(plot));
    }
  }
  report.finish();
  return status;
}

// screening -----------------------------------------------------------------

int screening_cmd(const Invocation& inv) {
  Context ctx(inv);
  const auto s = ctx.root.child("screening");
  ScreeningParams p;
  p.epsilon_r = s.number("epsilon_r", p.epsilon_r);
  p.distance = s.number("distance_m", p.distance);
  p.c_q = s.number("c_q", p.c_q);
  const std::string model = s.text("model", "thomas_fermi");
  if (model == "thomas_fermi") p.model = ScreeningModel::thomas_fermi;
  else if (model == "debye") p.model = ScreeningModel::debye;
  else throw InvalidParameter(s.where("model") + " must be 'thomas_fermi' or 'debye'");
  p.temperature = s.number("temperature_K", p.temperature);
  p.effective_mass_ratio = s.number("effective_mass_ratio", p.effective_mass_ratio);
  p.validate();
  const auto c = ctx.root.child("curve");
  const double n_lo = c.number("n_lo_per_m3", 1e6);
  const double n_hi = c.number("n_hi_per_m3", 1e24);
  const auto ppd = c.integer("points_per_decade", 20);
  const double tol = ctx.root.number("tol", 0.5);
  const auto r = ctx.root.child("search");
  const double search_lo = r.number("lo_per_m3", 1.0);
  const double search_hi = r.number("hi_per_m3", 1e40);
  ctx.root.reject_unknown_keys();

  RunReport report(inv.command, ctx.out_dir, ctx.effective(), ctx.seed);
  const auto curve = field_curve(p, n_lo, n_hi, static_cast<int>(ppd), tol);
  const auto range = field_insensitive_range(p, tol, search_lo, search_hi);
  json out = io::to_json(range);
  out["field_at_max_V_per_m"] = screened_field(range.n_max, p);
  out["screening_length_at_max_m"] = screening_length(range.n_max, p);
  out["decades"] = std::log10(range.n_hi / range.n_lo);
  report.write_output("field_curve.csv", io::field_curve_csv(curve));
  report.write_output("range.json", out.dump(2) + "\n");
  if (inv.svg) {
    svg::Series f{"screened field", curve.n_e, curve.field, svg::Style::line, color(0)};
    svg::Series edges{"plateau edges", {range.n_lo, range.n_hi},
                      {screened_field(range.n_lo, p), screened_field(range.n_hi, p)},
                      svg::Style::points, color(1)};
    report.write_output("field_curve.svg",
                        svg::render({"Screened field vs electron density",
                                     "n_e (1/m^3)", "E (V/m)", true, true, {f, edges}}));
  }
  report.finish();
  return 0;
}

}  // namespace

int run(const Invocation& inv) {
  static const std::map<std::string, std::function<int(const Invocation&)>> commands{
      {"simulate-trace", simulate_trace_cmd}, {"fit-trace", fit_trace_cmd},
      {"fit-power", fit_power_cmd},           {"eval-dopant", eval_dopant_cmd},
      {"simulate-ple", simulate_ple_cmd},     {"fit-ple", fit_ple_cmd},
      {"screening", screening_cmd}};
  const auto it = commands.find(inv.command);
  if (it == commands.end()) throw InvalidParameter("unknown command '" + inv.command + "'");
  return it->second(inv);
}

}  // namespace nvt
