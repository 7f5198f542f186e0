#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace nvt {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes);

/// Collects what one command read and wrote, and writes `report.json` into
/// the output directory. Outputs are written atomically and listed with their
/// content digest; the report itself is not part of its own manifest.
class RunReport {
 public:
  RunReport(std::string command, fs::path out_dir, nlohmann::json effective_config,
            std::uint64_t seed);

  void add_input(const fs::path& path, const std::string& content);
  /// `relative` is a path below the output directory.
  void write_output(const std::string& relative, const std::string& content);
  void set_status(const std::string& status) { status_ = status; }
  void finish();

  const fs::path& out_dir() const noexcept { return out_dir_; }

 private:
  std::string command_;
  fs::path out_dir_;
  nlohmann::json config_;
  std::uint64_t seed_;
  std::string status_ = "ok";
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  std::chrono::steady_clock::time_point start_;
};

}  // namespace nvt
