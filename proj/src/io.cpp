#include "nvcharge/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include <fmt/format.h>

#include "nvcharge/errors.hpp"

namespace nvcharge::io {

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

std::string format_number(double v) { return fmt::format("{}", v); }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

// Line-oriented CSV reader: collects `# key=value` comments, checks the
// header, and hands out data rows with their 1-based line numbers.
struct CsvTable {
  std::string source;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::size_t header_line = 0;

  const std::string* find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return &v;
    return nullptr;
  }
};

CsvTable read_table(const std::string& text, const std::string& source,
                    const std::vector<std::vector<std::string>>& accepted_headers) {
  CsvTable t;
  t.source = source;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const std::string body = trim(std::string_view(s).substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos)
        t.meta.emplace_back(trim(std::string_view(body).substr(0, eq)),
                            trim(std::string_view(body).substr(eq + 1)));
      continue;
    }
    auto cells = split(s);
    if (t.header.empty()) {
      bool ok = false;
      for (const auto& h : accepted_headers) ok = ok || cells == h;
      if (!ok) {
        std::string expected;
        for (std::size_t i = 0; i < accepted_headers.front().size(); ++i)
          expected += (i ? "," : "") + accepted_headers.front()[i];
        throw ParseError(source, lineno, "expected header '" + expected + "'");
      }
      t.header = std::move(cells);
      t.header_line = lineno;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(source, lineno,
                       "expected " + std::to_string(t.header.size()) + " columns, found " +
                           std::to_string(cells.size()));
    t.rows.emplace_back(lineno, std::move(cells));
  }
  if (t.header.empty()) throw ParseError(source, lineno, "missing header row");
  return t;
}

double parse_double(const std::string& cell, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ParseError(source, line, "'" + cell + "' is not a finite number");
  return v;
}

std::int64_t parse_int(const std::string& cell, const std::string& source, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError(source, line, "'" + cell + "' is not an integer");
  return v;
}

template <typename Fn>
auto with_line(const std::string& source, std::size_t line, Fn fn) {
  try {
    return fn();
  } catch (const InvalidParameter& e) {
    throw ParseError(source, line, e.what());
  }
}

}  // namespace

std::string trace_csv(const TimeTrace& trace) {
  trace.validate();
  std::string out = "# bin_width_s=" + format_number(trace.bin_width) + "\nbin_start_s,counts\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out += format_number(trace.t0 + trace.bin_width * static_cast<double>(i)) + "," +
           std::to_string(trace.counts[i]) + "\n";
  return out;
}

TimeTrace parse_trace_csv(const std::string& text, const std::string& source) {
  const auto t = read_table(text, source, {{"bin_start_s", "counts"}});
  if (t.rows.empty()) throw ParseError(source, t.header_line, "trace has no bins");
  TimeTrace trace;
  std::vector<double> starts;
  for (const auto& [line, cells] : t.rows) {
    starts.push_back(parse_double(cells[0], source, line));
    const auto c = parse_int(cells[1], source, line);
    if (c < 0) throw ParseError(source, line, "counts must be >= 0");
    trace.counts.push_back(c);
  }
  trace.t0 = starts.front();
  if (const auto* w = t.find_meta("bin_width_s")) {
    trace.bin_width = parse_double(*w, source, 1);
  } else if (starts.size() >= 2) {
    trace.bin_width = starts[1] - starts[0];
  } else {
    throw ParseError(source, t.rows.front().first,
                     "single-bin trace needs a '# bin_width_s=' comment");
  }
  if (!(trace.bin_width > 0)) throw ParseError(source, t.header_line, "bin width must be positive");
  for (std::size_t i = 1; i < starts.size(); ++i) {
    const double expected = trace.t0 + trace.bin_width * static_cast<double>(i);
    if (std::abs(starts[i] - expected) > 1e-6 * trace.bin_width)
      throw ParseError(source, t.rows[i].first, "bin start is not on the uniform grid");
  }
  return trace;
}

std::string histogram_csv(const CountHistogram& h) {
  h.validate();
  std::string out =
      "# counting_time_s=" + format_number(h.counting_time) + "\nphoton_count,occurrences\n";
  for (const auto& [n, k] : h.bin_counts) out += std::to_string(n) + "," + std::to_string(k) + "\n";
  return out;
}

CountHistogram parse_histogram_csv(const std::string& text, const std::string& source) {
  const auto t = read_table(text, source, {{"photon_count", "occurrences"}});
  const auto* ct = t.find_meta("counting_time_s");
  if (!ct) throw ParseError(source, t.header_line, "missing '# counting_time_s=' comment");
  CountHistogram h;
  h.counting_time = parse_double(*ct, source, 1);
  for (const auto& [line, cells] : t.rows) {
    const auto n = parse_int(cells[0], source, line);
    const auto k = parse_int(cells[1], source, line);
    if (n < 0 || k < 0) throw ParseError(source, line, "values must be >= 0");
    if (h.bin_counts.count(n)) throw ParseError(source, line, "duplicate photon count");
    h.bin_counts[n] = k;
  }
  with_line(source, t.header_line, [&] { h.validate(); });
  return h;
}

std::string power_series_csv(const PowerSeries& series) {
  std::string out = "power_W,rate_per_s,sigma_per_s\n";
  for (const auto& p : series.points)
    out += format_number(p.power) + "," + format_number(p.rate) + "," +
           (p.sigma ? format_number(*p.sigma) : std::string()) + "\n";
  return out;
}

PowerSeries parse_power_series_csv(const std::string& text, const std::string& source) {
  const auto t = read_table(text, source,
                            {{"power_W", "rate_per_s", "sigma_per_s"}, {"power_W", "rate_per_s"}});
  PowerSeries s;
  for (const auto& [line, cells] : t.rows) {
    PowerPoint p;
    p.power = parse_double(cells[0], source, line);
    p.rate = parse_double(cells[1], source, line);
    if (cells.size() > 2 && !cells[2].empty()) p.sigma = parse_double(cells[2], source, line);
    PowerSeries one{{p}};
    with_line(source, line, [&] { one.validate(); });
    s.points.push_back(p);
  }
  if (s.points.empty()) throw ParseError(source, t.header_line, "power series has no rows");
  return s;
}

std::string spectrum_csv(const PLESpectrum& spectrum) {
  const bool with_err = !spectrum.uncertainties.empty();
  std::string out;
  if (spectrum.n_repetitions != 1)
    out += "# n_repetitions=" + std::to_string(spectrum.n_repetitions) + "\n";
  out += with_err ? "detuning_Hz,intensity_cps,stderr_cps\n" : "detuning_Hz,intensity_cps\n";
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    out += format_number(spectrum.detunings[i]) + "," + format_number(spectrum.intensities[i]);
    if (with_err) out += "," + format_number(spectrum.uncertainties[i]);
    out += "\n";
  }
  return out;
}

PLESpectrum parse_spectrum_csv(const std::string& text, const std::string& source) {
  const auto t = read_table(
      text, source,
      {{"detuning_Hz", "intensity_cps"}, {"detuning_Hz", "intensity_cps", "stderr_cps"}});
  PLESpectrum s;
  for (const auto& [line, cells] : t.rows) {
    const double d = parse_double(cells[0], source, line);
    if (!s.detunings.empty() && !(d > s.detunings.back()))
      throw ParseError(source, line, "detunings must be strictly increasing");
    const double v = parse_double(cells[1], source, line);
    if (v < 0) throw ParseError(source, line, "intensity must be >= 0");
    s.detunings.push_back(d);
    s.intensities.push_back(v);
    if (cells.size() > 2) {
      const double e = parse_double(cells[2], source, line);
      if (e < 0) throw ParseError(source, line, "stderr must be >= 0");
      s.uncertainties.push_back(e);
    }
  }
  if (s.detunings.empty()) throw ParseError(source, t.header_line, "spectrum has no rows");
  if (const auto* reps = t.find_meta("n_repetitions"))
    s.n_repetitions = static_cast<std::size_t>(std::max<std::int64_t>(1, parse_int(*reps, source, 1)));
  return s;
}

std::string field_curve_csv(const FieldCurve& curve) {
  std::string out = "n_e_per_m3,field_V_per_m\n";
  for (std::size_t i = 0; i < curve.n_e.size(); ++i)
    out += format_number(curve.n_e[i]) + "," + format_number(curve.field[i]) + "\n";
  return out;
}

nlohmann::json to_json(const TelegraphParams& p) {
  return {{"k_ion", p.k_ion},
          {"k_rec", p.k_rec},
          {"gamma_bright", p.gamma_bright},
          {"gamma_dark", p.gamma_dark}};
}

nlohmann::json to_json(const RateFit& fit) {
  nlohmann::json j = to_json(fit.params);
  j["sigma"] = to_json(fit.sigma);
  j["sigma_information"] = to_json(fit.sigma_information);
  j["covariance"] = fit.covariance;
  j["loglik"] = fit.loglik;
  j["n_histograms"] = fit.n_histograms;
  j["unidentifiable"] = fit.unidentifiable;
  j["converged"] = fit.converged;
  j["evaluations"] = fit.evaluations;
  return j;
}

nlohmann::json to_json(const IonizationFit& fit) {
  return {{"a", fit.a},
          {"sigma_a", fit.sigma_a},
          {"saturation_power", fit.saturation_power},
          {"sigma_saturation_power", std::isfinite(fit.sigma_saturation_power)
                                         ? nlohmann::json(fit.sigma_saturation_power)
                                         : nlohmann::json(nullptr)},
          {"saturation_fixed", fit.saturation_fixed},
          {"chi2", fit.chi2},
          {"n_points", fit.n_points},
          {"weighted", fit.weighted}};
}

nlohmann::json to_json(const ModelComparison& cmp) {
  auto score = [](const ModelScore& s) {
    return nlohmann::json{
        {"coefficient", s.coefficient}, {"sigma", s.sigma}, {"chi2", s.chi2}, {"aic", s.aic}};
  };
  return {{"linear", score(cmp.linear)},
          {"quadratic", score(cmp.quadratic)},
          {"selected", to_string(cmp.selected)},
          {"uninformative", cmp.uninformative},
          {"weighted", cmp.weighted},
          {"n_points", cmp.n_points}};
}

nlohmann::json to_json(const MultiLorentzFit& fit) {
  nlohmann::json peaks = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.peaks.size(); ++i) {
    const auto& p = fit.peaks[i];
    const auto& s = fit.sigma[i];
    peaks.push_back({{"center", p.center},
                     {"fwhm", p.fwhm},
                     {"amplitude", p.amplitude},
                     {"area", p.area()},
                     {"sigma_center", s.center},
                     {"sigma_fwhm", s.fwhm},
                     {"sigma_amplitude", s.amplitude}});
  }
  return {{"peaks", peaks},
          {"offset", fit.offset},
          {"sigma_offset", fit.sigma_offset},
          {"chi2", fit.chi2},
          {"dof", fit.dof},
          {"weighted", fit.weighted},
          {"max_correlation", fit.max_correlation},
          {"overlapping", fit.overlapping},
          {"iterations", fit.iterations}};
}

nlohmann::json to_json(const FwhmTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"power", r.power}, {"peak", r.peak}, {"fwhm", r.fwhm}, {"sigma", r.sigma}});
  nlohmann::json trends = nlohmann::json::array();
  for (const auto& t : table.trends)
    trends.push_back({{"peak", t.peak},
                      {"constant", {{"fwhm", t.constant_fwhm},
                                    {"sigma", t.constant_sigma},
                                    {"chi2", t.constant_chi2},
                                    {"aic", t.constant_aic}}},
                      {"saturation", {{"gamma0", t.gamma0},
                                      {"saturation_power", t.saturation_power},
                                      {"chi2", t.saturation_chi2},
                                      {"aic", t.saturation_aic}}},
                      {"selected", to_string(t.selected)},
                      {"weighted", t.weighted}});
  nlohmann::json j{{"rows", rows}, {"trends", trends}};
  if (!table.notice.empty()) j["notice"] = table.notice;
  return j;
}

nlohmann::json to_json(const InsensitiveRange& r) {
  return {{"n_lo", r.n_lo}, {"n_hi", r.n_hi}, {"n_max", r.n_max}, {"tol", r.tol}};
}

}  // namespace nvcharge::io
