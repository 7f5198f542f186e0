#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "nvcharge/countstats.hpp"
#include "nvcharge/plesim.hpp"
#include "nvcharge/powerlaws.hpp"
#include "nvcharge/screening.hpp"
#include "nvcharge/telegraph.hpp"

namespace nvcharge::io {

namespace fs = std::filesystem;

/// Writes to a sibling temporary file, then renames it over `path`.
void atomic_write(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

/// Shortest representation that round-trips.
std::string format_number(double v);

// CSV tables. Readers throw ParseError naming the offending line and
// IoError when the file cannot be read.

/// `# bin_width_s=<w>` then `bin_start_s,counts`.
std::string trace_csv(const TimeTrace& trace);
TimeTrace parse_trace_csv(const std::string& text, const std::string& source = "<trace>");

/// `# counting_time_s=<T>` then `photon_count,occurrences`.
std::string histogram_csv(const CountHistogram& histogram);
CountHistogram parse_histogram_csv(const std::string& text, const std::string& source = "<histogram>");

/// `power_W,rate_per_s,sigma_per_s`; an empty sigma cell means unknown.
std::string power_series_csv(const PowerSeries& series);
PowerSeries parse_power_series_csv(const std::string& text, const std::string& source = "<series>");

/// `detuning_Hz,intensity_cps`, plus `stderr_cps` when uncertainties are known.
std::string spectrum_csv(const PLESpectrum& spectrum);
PLESpectrum parse_spectrum_csv(const std::string& text, const std::string& source = "<spectrum>");

/// `n_e_per_m3,field_V_per_m`.
std::string field_curve_csv(const FieldCurve& curve);

nlohmann::json to_json(const TelegraphParams& p);
nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const IonizationFit& fit);
nlohmann::json to_json(const ModelComparison& cmp);
nlohmann::json to_json(const MultiLorentzFit& fit);
nlohmann::json to_json(const FwhmTable& table);
nlohmann::json to_json(const InsensitiveRange& range);

}  // namespace nvcharge::io
