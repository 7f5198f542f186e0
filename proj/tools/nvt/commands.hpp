#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nvt {

namespace fs = std::filesystem;

struct Invocation {
  std::string command;
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  unsigned threads = 1;
  bool svg = false;
  std::vector<fs::path> inputs;
  std::optional<std::string> law;
  std::optional<double> saturation_power;
};

/// Runs one subcommand and returns its exit status (0 or 3); validation and
/// IO failures are thrown as nvcharge::Error.
int run(const Invocation& inv);

}  // namespace nvt
