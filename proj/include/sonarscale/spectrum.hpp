#pragma once

#include <Eigen/Core>

namespace sonarscale {

using Eigen::VectorXd;

/// One channel's averaged power spectrum. Bin powers sum to the signal's
/// mean power (Parseval), one-sided.
struct ChannelSpectrum {
  VectorXd psd;
  double freq_resolution_hz = 0.0;
  int channel_index = -1;

  /// Copy with entries floored and normalized to sum 1, for KL use.
  VectorXd normalized() const;
};

/// Welch estimate: Hann-windowed segments with the given overlap fraction,
/// averaged one-sided periodograms.
ChannelSpectrum welch_psd(const VectorXd& channel, Eigen::Index segment_length,
                          double overlap_fraction, double sample_rate_hz,
                          int channel_index = -1);

/// Geometric over arithmetic mean of PSD bins; near 1 for white noise,
/// near 0 for tonals.
double spectral_flatness(const VectorXd& psd);

} // namespace sonarscale
