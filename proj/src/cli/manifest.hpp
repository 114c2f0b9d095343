// Strict JSON manifest access: every lookup records the key, type mismatches and
// missing keys are reported with their JSON path, and finish() rejects unknown keys.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsar/cov2.hpp"
#include "polsar/error.hpp"
#include "polsar/grid.hpp"

namespace polsar::cli {

class ManifestError : public Error {
 public:
  using Error::Error;
};

class JsonReader {
 public:
  JsonReader(const nlohmann::json& node, std::string path);

  const std::string& path() const noexcept { return path_; }
  bool has(const std::string& key) const;

  std::string required_string(const std::string& key);
  double required_number(const std::string& key);
  std::uint64_t required_uint(const std::string& key);
  bool required_bool(const std::string& key);

  std::string optional_string(const std::string& key, const std::string& fallback);
  double optional_number(const std::string& key, double fallback);
  std::uint64_t optional_uint(const std::string& key, std::uint64_t fallback);
  bool optional_bool(const std::string& key, bool fallback);
  std::optional<double> maybe_number(const std::string& key);

  JsonReader object(const std::string& key);
  std::optional<JsonReader> optional_object(const std::string& key);
  std::vector<JsonReader> object_array(const std::string& key, bool required = true);
  std::vector<std::string> string_array(const std::string& key);
  std::vector<double> number_array(const std::string& key, std::optional<std::size_t> length = std::nullopt);

  /// [row0, col0, height, width]
  Rect rect(const std::string& key);
  /// {"c11": .., "c22": .., "c12": [re, im]}  (c12 optional, default 0)
  Cov2 cov2(const std::string& key);

  /// Throws ManifestError if the object has keys that were never read.
  void finish() const;

 private:
  const nlohmann::json& at(const std::string& key) const;
  std::string child(const std::string& key) const { return path_ + "." + key; }

  const nlohmann::json* node_;
  std::string path_;
  std::set<std::string> seen_;
};

struct Manifest {
  nlohmann::json doc;
  std::filesystem::path base_dir;  ///< relative paths resolve against this
  std::string digest;              ///< FNV-1a 64 of the canonical JSON dump

  std::filesystem::path resolve(const std::string& p) const;
};

Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);

std::string fnv1a_hex(std::string_view data);

}  // namespace polsar::cli
