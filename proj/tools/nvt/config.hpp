#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace nvt {

using nlohmann::json;
namespace fs = std::filesystem;

/// Typed, path-aware view of one JSON object in a configuration. Every key
/// read through any view is recorded so that the root can reject keys nobody
/// asked for.
class Section {
 public:
  /// Root view; `source` names the file in error messages.
  Section(const json& root, std::string source);

  bool has(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> maybe_number(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> texts(const std::string& key) const;

  /// Nested object; an absent key yields an empty object.
  Section child(const std::string& key) const;
  /// Array of objects; an absent key yields no elements.
  std::vector<Section> children(const std::string& key) const;

  /// InvalidParameter naming the first key that was never read.
  void reject_unknown_keys() const;

  std::string where(const std::string& key) const;

 private:
  struct Shared {
    std::string source;
    std::set<std::string> used;
  };
  Section(const json* node, std::string path, std::shared_ptr<Shared> shared);
  const json* lookup(const std::string& key) const;
  void check_unknown(const json& node, const std::string& path) const;

  const json* node_;
  std::string path_;
  std::shared_ptr<Shared> shared_;
  static const json& empty_object();
};

/// Parses a JSON configuration file; missing file is an IoError, malformed
/// JSON or a non-object top level an InvalidParameter.
json load_config(const fs::path& path);

}  // namespace nvt
