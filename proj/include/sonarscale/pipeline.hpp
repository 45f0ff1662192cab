#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonarscale/config.hpp"

namespace sonarscale {

struct RunOptions {
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;       // --seed
  std::optional<std::string> measure;      // --measure
  std::optional<std::string> deviation;    // --deviation
  std::optional<int> latent_dim;           // --latent-dim
  bool allow_config_mismatch = false;
};

/// Raised when a stage consumes an artifact whose recorded config hash does
/// not match the current configuration.
class ConfigMismatchError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Executes one subcommand (simulate, filter, train, project, cluster, or
/// pipeline for all of them in order). Returns the one-line summaries that
/// were printed, throws on failure.
std::vector<std::string> run_stage(const std::string& subcommand, ConfigMap cfg,
                                   const RunOptions& opts);

/// Cumulative provenance hash of a stage's configuration (chained through
/// its upstream stages).
std::string stage_config_hash(const ConfigMap& cfg, const std::string& stage);

} // namespace sonarscale
