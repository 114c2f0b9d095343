#include "cli/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace polsar::cli {

using nlohmann::json;

JsonReader::JsonReader(const json& node, std::string path) : node_(&node), path_(std::move(path)) {
  if (!node_->is_object()) throw ManifestError(path_ + ": expected an object");
}

bool JsonReader::has(const std::string& key) const { return node_->contains(key) && !(*node_)[key].is_null(); }

const json& JsonReader::at(const std::string& key) const {
  if (!node_->contains(key)) throw ManifestError(child(key) + ": required key is missing");
  return (*node_)[key];
}

std::string JsonReader::required_string(const std::string& key) {
  seen_.insert(key);
  const auto& v = at(key);
  if (!v.is_string()) throw ManifestError(child(key) + ": expected a string");
  return v.get<std::string>();
}

double JsonReader::required_number(const std::string& key) {
  seen_.insert(key);
  const auto& v = at(key);
  if (!v.is_number()) throw ManifestError(child(key) + ": expected a number");
  return v.get<double>();
}

std::uint64_t JsonReader::required_uint(const std::string& key) {
  seen_.insert(key);
  const auto& v = at(key);
  if (!v.is_number_unsigned()) throw ManifestError(child(key) + ": expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool JsonReader::required_bool(const std::string& key) {
  seen_.insert(key);
  const auto& v = at(key);
  if (!v.is_boolean()) throw ManifestError(child(key) + ": expected a boolean");
  return v.get<bool>();
}

std::string JsonReader::optional_string(const std::string& key, const std::string& fallback) {
  seen_.insert(key);
  return has(key) ? required_string(key) : fallback;
}

double JsonReader::optional_number(const std::string& key, double fallback) {
  seen_.insert(key);
  return has(key) ? required_number(key) : fallback;
}

std::uint64_t JsonReader::optional_uint(const std::string& key, std::uint64_t fallback) {
  seen_.insert(key);
  return has(key) ? required_uint(key) : fallback;
}

bool JsonReader::optional_bool(const std::string& key, bool fallback) {
  seen_.insert(key);
  return has(key) ? required_bool(key) : fallback;
}

std::optional<double> JsonReader::maybe_number(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) return std::nullopt;
  return required_number(key);
}

JsonReader JsonReader::object(const std::string& key) {
  seen_.insert(key);
  return JsonReader(at(key), child(key));
}

std::optional<JsonReader> JsonReader::optional_object(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) return std::nullopt;
  return JsonReader(at(key), child(key));
}

std::vector<JsonReader> JsonReader::object_array(const std::string& key, bool required) {
  seen_.insert(key);
  std::vector<JsonReader> out;
  if (!required && !has(key)) return out;
  const auto& v = at(key);
  if (!v.is_array()) throw ManifestError(child(key) + ": expected an array");
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], child(key) + "[" + std::to_string(i) + "]");
  return out;
}

std::vector<std::string> JsonReader::string_array(const std::string& key) {
  seen_.insert(key);
  const auto& v = at(key);
  if (!v.is_array()) throw ManifestError(child(key) + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw ManifestError(child(key) + "[" + std::to_string(i) + "]: expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

std::vector<double> JsonReader::number_array(const std::string& key, std::optional<std::size_t> length) {
  seen_.insert(key);
  const auto& v = at(key);
  if (!v.is_array()) throw ManifestError(child(key) + ": expected an array");
  if (length && v.size() != *length) {
    throw ManifestError(child(key) + ": expected " + std::to_string(*length) + " entries, found " +
                        std::to_string(v.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ManifestError(child(key) + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Rect JsonReader::rect(const std::string& key) {
  const auto v = number_array(key, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    if (v[i] < 0 || v[i] != static_cast<double>(static_cast<std::size_t>(v[i]))) {
      throw ManifestError(child(key) + "[" + std::to_string(i) + "]: expected a nonnegative integer");
    }
  }
  return {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2]),
          static_cast<std::size_t>(v[3])};
}

Cov2 JsonReader::cov2(const std::string& key) {
  auto obj = object(key);
  Cov2 c;
  c.c11 = obj.required_number("c11");
  c.c22 = obj.required_number("c22");
  if (obj.has("c12")) {
    const auto v = obj.number_array("c12", 2);
    c.c12 = {v[0], v[1]};
  }
  obj.finish();
  return c;
}

void JsonReader::finish() const {
  for (auto it = node_->begin(); it != node_->end(); ++it) {
    if (!seen_.contains(it.key())) throw ManifestError(child(it.key()) + ": unknown key");
  }
}

std::filesystem::path Manifest::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  try {
    m.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.doc.is_object()) throw ManifestError("$: manifest must be a JSON object");
  m.base_dir = base_dir;
  m.digest = fnv1a_hex(m.doc.dump());
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
  } catch (const ManifestError& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

}  // namespace polsar::cli
