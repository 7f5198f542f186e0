#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "nvcharge/errors.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

int exit_code(nvcharge::ErrorCategory c) {
  switch (c) {
    case nvcharge::ErrorCategory::validation: return kExitValidation;
    case nvcharge::ErrorCategory::convergence: return kExitConvergence;
    case nvcharge::ErrorCategory::io: return kExitIo;
  }
  return kExitValidation;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("nvt");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("nvt: [%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("NVT_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"nvt: NV charge-state dynamics toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NVT_VERSION);

  nvt::Invocation inv;
  std::string config, out;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  double saturation_power = 0.0;
  std::string law;

  struct CommandInfo {
    const char* name;
    const char* help;
    bool takes_inputs;
  };
  const CommandInfo specs[] = {
      {"simulate-trace", "Simulate a blinking fluorescence time trace", false},
      {"fit-trace", "Fit switching rates to a trace via count histograms", true},
      {"fit-power", "Fit rate-versus-power laws to series CSV files", true},
      {"eval-dopant", "Evaluate the dopant-assisted recombination rate", false},
      {"simulate-ple", "Simulate and average repeated PLE scans", false},
      {"fit-ple", "Fit multi-Lorentzian PLE spectra and linewidth trends", true},
      {"screening", "Screened field versus electron density", false}};
  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config, "JSON configuration file");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_option("--threads", inv.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--svg", inv.svg, "Also write SVG plots");
    if (s.takes_inputs) sub->add_option("inputs", inputs, "Input files");
    if (std::string(s.name) == "fit-power") {
      sub->add_option("--law", law, "recombination or ionization");
      sub->add_option("--saturation-power", saturation_power,
                      "Hold the saturation power fixed (W)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  const auto* sub = app.get_subcommands().front();
  inv.command = sub->get_name();
  if (sub->count("--config")) inv.config = config;
  if (sub->count("--seed")) inv.seed = seed;
  if (sub->count("--out")) inv.out = out;
  for (const auto& p : inputs) inv.inputs.emplace_back(p);
  if (inv.command == "fit-power") {
    if (sub->count("--law")) inv.law = law;
    if (sub->count("--saturation-power")) inv.saturation_power = saturation_power;
  }

  try {
    return nvt::run(inv);
  } catch (const nvcharge::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.category());
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("configuration: {}", e.what());
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
}
