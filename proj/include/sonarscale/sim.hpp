#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace sonarscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One simulated target: a set of tonals spread across adjacent beams with
/// a Gaussian weight, drifting linearly from start_beam to end_beam.
struct TargetSpec {
  std::vector<double> tonal_freqs_hz;
  std::vector<double> amplitudes;
  double start_beam = 0.0;
  double end_beam = 0.0;
  double beam_sigma = 0.5;
};

struct SimConfig {
  Eigen::Index n_beams = 64;
  double sample_rate_hz = 4096.0;
  double duration_s = 8.0;
  std::vector<TargetSpec> targets;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  Eigen::Index n_samples() const;
  void validate() const;
};

/// Desk-scale default scenario: three static targets with sub-kHz tonals
/// at roughly -5 dB per tone.
SimConfig default_scenario();

struct MultichannelSignal {
  MatrixXd data;  // n_beams x n_samples
  double sample_rate_hz = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> config_echo;  // "key = value" provenance lines
  std::string config_hash;

  Eigen::Index n_beams() const { return data.rows(); }
  Eigen::Index n_samples() const { return data.cols(); }
};

MultichannelSignal simulate(const SimConfig& cfg);

/// Same scenario and seed with the noise turned off; tonal phases match the
/// noisy variant.
MultichannelSignal simulate_clean(const SimConfig& cfg);

/// Per-beam 10 log10(power(clean) / power(signal - clean)); +inf where the
/// residual has zero power.
VectorXd snr_db(const MultichannelSignal& signal, const MultichannelSignal& clean);

/// Beams whose peak Gaussian beam weight over any target track reaches
/// min_weight; the scenario's ground-truth "target beams".
std::vector<Eigen::Index> target_beams(const SimConfig& cfg, double min_weight = 0.5);

/// Structured-text header plus raw little-endian float32 samples,
/// beam-major.
void save_signal(const MultichannelSignal& sig, const std::string& path);
MultichannelSignal load_signal(const std::string& path);

} // namespace sonarscale
