#include "sonarscale/config.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace sonarscale {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw std::runtime_error("config: duplicate key " + key);
    cfg.values_[key] = value;
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_string(buf.str());
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) > 0; }

void ConfigMap::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string ConfigMap::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error("config: " + key + " must be an integer, got '" + it->second + "'");
  }
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::runtime_error("config: " + key + " must be a number, got '" + it->second + "'");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::runtime_error("config: " + key + " must be a boolean, got '" + it->second + "'");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
  const auto it = values_.find(key);
  std::vector<double> out;
  if (it == values_.end()) return out;
  std::istringstream in(it->second);
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof())
    throw std::runtime_error("config: " + key + " must be a list of numbers");
  return out;
}

std::vector<std::string> ConfigMap::section(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k + " = " + v);
  return out;
}

std::vector<std::string> ConfigMap::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

void ConfigMap::validate_keys() const {
  static const std::vector<std::string> exact = {
      "seed",
      "simulate.n_beams", "simulate.sample_rate_hz", "simulate.duration_s",
      "simulate.noise_sigma", "simulate.seed",
      "filter.window_length", "filter.hop", "filter.n_components",
      "filter.flatness_threshold", "filter.seed", "filter.train_seconds", "filter.fit_hop",
      "train.measure", "train.latent_measure", "train.deviation", "train.latent_dim",
      "train.n_centers", "train.max_iters", "train.step_size", "train.tolerance",
      "train.seed", "train.max_pairs", "train.gaussian_uncertainty", "train.seconds",
      "train.time_stride", "train.input",
      "project.time_stride", "project.input",
      "cluster.segment_length", "cluster.overlap_fraction", "cluster.measure",
      "cluster.k", "cluster.z_threshold", "cluster.input",
  };
  static const std::regex target_key(
      R"(simulate\.target\.[0-9]+\.(freqs_hz|amps|start_beam|end_beam|beam_sigma))");
  std::vector<std::string> unknown;
  for (const auto& [k, v] : values_) {
    if (std::find(exact.begin(), exact.end(), k) != exact.end()) continue;
    if (std::regex_match(k, target_key)) continue;
    unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw std::runtime_error(msg);
  }
}

std::string fnv1a_hex(const std::vector<std::string>& lines) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= '\n';
    h *= 1099511628211ull;
  };
  for (const auto& s : lines) mix(s);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

} // namespace sonarscale
