#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sonarscale {

/// Flat namespaced key/value configuration ("simulate.n_beams = 64").
/// Unknown keys are rejected at load time, not warned about.
class ConfigMap {
public:
  static ConfigMap parse_file(const std::string& path);
  static ConfigMap parse_string(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // empty if absent

  /// Sorted "key = value" lines whose key starts with the prefix.
  std::vector<std::string> section(const std::string& prefix) const;

  /// Keys with the given prefix, sorted.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// Throws listing every key not recognized by the pipeline schema.
  void validate_keys() const;

private:
  std::map<std::string, std::string> values_;
};

/// FNV-1a over the given lines; stable provenance fingerprint.
std::string fnv1a_hex(const std::vector<std::string>& lines);

} // namespace sonarscale
