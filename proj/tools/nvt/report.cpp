#include "report.hpp"

#include <memory>

#include <openssl/evp.h>

#include "nvcharge/errors.hpp"
#include "nvcharge/io.hpp"

namespace nvt {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw nvcharge::IoError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

RunReport::RunReport(std::string command, fs::path out_dir, nlohmann::json effective_config,
                     std::uint64_t seed)
    : command_(std::move(command)),
      out_dir_(std::move(out_dir)),
      config_(std::move(effective_config)),
      seed_(seed),
      start_(std::chrono::steady_clock::now()) {
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  if (ec) throw nvcharge::IoError("cannot create output directory " + out_dir_.string());
}

void RunReport::add_input(const fs::path& path, const std::string& content) {
  inputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(content)},
                     {"bytes", content.size()}});
}

void RunReport::write_output(const std::string& relative, const std::string& content) {
  const fs::path target = out_dir_ / relative;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw nvcharge::IoError("cannot create directory " + target.parent_path().string());
  nvcharge::io::atomic_write(target, content);
  outputs_.push_back(
      {{"path", relative}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
}

void RunReport::finish() {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json report = {{"command", command_},
                           {"tool_version", NVT_VERSION},
                           {"status", status_},
                           {"seed", seed_},
                           {"config_sha256", sha256_hex(config_.dump())},
                           {"config", config_},
                           {"inputs", inputs_},
                           {"outputs", outputs_},
                           {"wall_time_s", wall}};
  nvcharge::io::atomic_write(out_dir_ / "report.json", report.dump(2) + "\n");
}

}  // namespace nvt
