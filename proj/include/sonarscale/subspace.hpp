#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sonarscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EmbeddingConfig {
  Eigen::Index window_length = 64;
  Eigen::Index hop = 1;
  Eigen::Index n_components = 16;
  double flatness_threshold = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Latent sources extracted once from a training segment and then held
/// fixed. `analysis` takes a window to source values, `synthesis` takes
/// source values back to a window; `mixing` is the unit-norm copy of the
/// synthesis columns.
struct SourceBank {
  Eigen::Index window_length = 0;
  MatrixXd analysis;             // L x C
  MatrixXd synthesis;            // L x C
  MatrixXd mixing;               // L x C, unit-norm columns
  std::vector<bool> signal_mask; // true = signal source
  EmbeddingConfig config{};

  Eigen::Index n_components() const { return analysis.cols(); }
  Eigen::Index n_signal() const;
};

class IcaConvergenceError : public std::runtime_error {
public:
  IcaConvergenceError(const std::string& msg, int iters, double delta)
      : std::runtime_error(msg), iterations(iters), last_delta(delta) {}
  int iterations;
  double last_delta;
};

/// Trajectory matrix: row t = samples [t*hop, t*hop + window_length).
MatrixXd embed(const VectorXd& channel, Eigen::Index window_length, Eigen::Index hop);

/// PCA-whitens the stacked trajectory rows, runs FastICA (tanh contrast,
/// symmetric decorrelation), and labels each source noise or signal by the
/// spectral flatness of its time course.
SourceBank fit_sources(const MatrixXd& trajectories, const EmbeddingConfig& cfg);

/// Projects every window of the channel onto the signal-source subspace and
/// rebuilds the samples by averaging overlapping window contributions.
VectorXd reconstruct(const VectorXd& channel, const SourceBank& bank,
                     const EmbeddingConfig& cfg);

void save_source_bank(const SourceBank& bank, std::ostream& out,
                      const std::vector<std::string>& header_lines = {});
void save_source_bank(const SourceBank& bank, const std::string& path,
                      const std::vector<std::string>& header_lines = {});
SourceBank load_source_bank(std::istream& in);
SourceBank load_source_bank(const std::string& path);

} // namespace sonarscale
