#include <doctest.h>

#include <filesystem>
#include <random>

#include "nvcharge/errors.hpp"
#include "nvcharge/io.hpp"

using namespace nvcharge;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "nvcharge_test_io";
  fs::create_directories(dir);
  return dir;
}

std::size_t parse_error_line(const auto& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("numbers round-trip through their text form") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, u(rng)) * (i % 2 ? -1.0 : 1.0);
    CHECK(std::stod(io::format_number(v)) == v);
  }
  CHECK(io::format_number(0.01) == "0.01");
}

TEST_CASE("trace CSV round-trips") {
  const TimeTrace t{0.01, 2.5, {3, 0, 17, 200, 1}};
  const auto back = io::parse_trace_csv(io::trace_csv(t));
  CHECK(back.bin_width == t.bin_width);
  CHECK(back.t0 == t.t0);
  CHECK(back.counts == t.counts);
  const auto no_meta = io::parse_trace_csv("bin_start_s,counts\n0,1\n0.5,2\n1.0,3\n");
  CHECK(no_meta.bin_width == doctest::Approx(0.5));
  CHECK(parse_error_line([] { io::parse_trace_csv("bin_start_s,counts\n0,1\n0.5,x\n"); }) == 3);
  CHECK(parse_error_line([] { io::parse_trace_csv("time,counts\n0,1\n"); }) == 1);
  CHECK(parse_error_line([] { io::parse_trace_csv("bin_start_s,counts\n0,1\n0.5,2\n1.7,3\n"); }) ==
        4);
  CHECK(parse_error_line([] { io::parse_trace_csv("bin_start_s,counts\n0,-1\n1,2\n"); }) == 2);
  CHECK(parse_error_line([] { io::parse_trace_csv("bin_start_s,counts\n0,1,5\n"); }) == 2);
  CHECK(parse_error_line([] { io::parse_trace_csv("bin_start_s,counts\n0,4\n"); }) == 2);
}

TEST_CASE("histogram CSV round-trips") {
  CountHistogram h;
  h.counting_time = 0.02;
  h.bin_counts = {{0, 5}, {3, 10}, {40, 1}};
  const auto back = io::parse_histogram_csv(io::histogram_csv(h));
  CHECK(back.counting_time == h.counting_time);
  CHECK(back.bin_counts == h.bin_counts);
  CHECK_THROWS_AS(io::parse_histogram_csv("photon_count,occurrences\n1,2\n"), ParseError);
  CHECK(parse_error_line([] {
          io::parse_histogram_csv("# counting_time_s=0.1\nphoton_count,occurrences\n1,2\n1,3\n");
        }) == 4);
}

TEST_CASE("power series CSV round-trips with missing uncertainties") {
  PowerSeries s;
  s.points = {{5e-8, 1.5, 0.1}, {1e-7, 3.25, std::nullopt}, {1e-7, 3.0, 0.2}};
  const auto back = io::parse_power_series_csv(io::power_series_csv(s));
  REQUIRE(back.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.points[i].power == s.points[i].power);
    CHECK(back.points[i].rate == s.points[i].rate);
    CHECK(back.points[i].sigma == s.points[i].sigma);
  }
  const auto two = io::parse_power_series_csv("power_W,rate_per_s\n1e-7,2\n2e-7,4\n");
  CHECK(two.points.size() == 2);
  CHECK_FALSE(two.points[0].sigma.has_value());
  CHECK_THROWS_AS(io::parse_power_series_csv("power_W,rate_per_s\n"), ParseError);
}

TEST_CASE("spectrum CSV round-trips with and without standard errors") {
  PLESpectrum s;
  s.detunings = {-1e9, 0.0, 1e9};
  s.intensities = {10.0, 2000.5, 12.0};
  auto back = io::parse_spectrum_csv(io::spectrum_csv(s));
  CHECK(back.detunings == s.detunings);
  CHECK(back.intensities == s.intensities);
  CHECK(back.uncertainties.empty());
  s.uncertainties = {1.0, 20.0, 1.5};
  s.n_repetitions = 50;
  back = io::parse_spectrum_csv(io::spectrum_csv(s));
  CHECK(back.uncertainties == s.uncertainties);
  CHECK(back.n_repetitions == 50);
  CHECK(parse_error_line([] {
          io::parse_spectrum_csv("detuning_Hz,intensity_cps\n0,1\n# note\n-1,2\n");
        }) == 4);
}

TEST_CASE("field curve CSV has one row per grid point") {
  FieldCurve c;
  c.n_e = {1e10, 1e11};
  c.field = {1.0, 2.0};
  const auto text = io::field_curve_csv(c);
  CHECK(text.rfind("n_e_per_m3,field_V_per_m\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("atomic write replaces the target and leaves no temporary") {
  const auto path = scratch_dir() / "out.csv";
  io::atomic_write(path, "first");
  io::atomic_write(path, "second");
  CHECK(io::read_file(path) == "second");
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  CHECK_THROWS_AS(io::atomic_write(scratch_dir() / "missing" / "x.csv", "x"), IoError);
  CHECK_THROWS_AS(io::read_file(scratch_dir() / "does_not_exist"), IoError);
  fs::remove_all(scratch_dir());
}

TEST_CASE("JSON summaries carry the named fields") {
  const auto j = io::to_json(TelegraphParams{0.5, 11.0, 2e4, 1e3});
  CHECK(j.at("k_ion") == 0.5);
  CHECK(j.at("gamma_dark") == 1e3);
  const auto r = io::to_json(InsensitiveRange{1.0, 3.0, 2.0, 0.5});
  CHECK(r.at("n_max") == 2.0);
  CHECK(r.at("tol") == 0.5);
}
