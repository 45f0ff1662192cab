#include "sonarscale/spectrum.hpp"

#include <unsupported/Eigen/FFT>
#include <cmath>

#include "sonarscale/divergence.hpp"

namespace sonarscale {

VectorXd ChannelSpectrum::normalized() const {
  VectorXd p = psd.cwiseMax(kProbFloor);
  return p / p.sum();
}

ChannelSpectrum welch_psd(const VectorXd& channel, Eigen::Index segment_length,
                          double overlap_fraction, double sample_rate_hz,
                          int channel_index) {
  const Eigen::Index N = segment_length;
  if (channel.size() < N)
    throw InvalidInputError("welch_psd: channel shorter than segment length");
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
    throw InvalidInputError("welch_psd: overlap fraction must be in [0, 1)");
  const Eigen::Index hop =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(
                                    std::llround((1.0 - overlap_fraction) * static_cast<double>(N))));

  VectorXd window(N);
  for (Eigen::Index n = 0; n < N; ++n)
    window[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(n) / static_cast<double>(N)));
  const double win_energy = window.squaredNorm();

  Eigen::FFT<double> fft;
  const Eigen::Index n_bins = N / 2 + 1;
  VectorXd acc = VectorXd::Zero(n_bins);
  Eigen::Index n_segments = 0;
  std::vector<std::complex<double>> spec;
  std::vector<double> seg(static_cast<size_t>(N));
  for (Eigen::Index start = 0; start + N <= channel.size(); start += hop) {
    for (Eigen::Index n = 0; n < N; ++n)
      seg[static_cast<size_t>(n)] = channel[start + n] * window[n];
    fft.fwd(spec, seg);
    for (Eigen::Index k = 0; k < n_bins; ++k) {
      double p = std::norm(spec[static_cast<size_t>(k)]);
      if (k > 0 && k < N - k) p *= 2.0;  // fold the negative frequencies
      acc[k] += p;
    }
    ++n_segments;
  }
  acc /= static_cast<double>(n_segments) * static_cast<double>(N) * win_energy;
  return ChannelSpectrum{std::move(acc), sample_rate_hz / static_cast<double>(N), channel_index};
}

double spectral_flatness(const VectorXd& psd) {
  const double am = psd.mean();
  if (!(am > 0.0)) return 0.0;
  const double floor = am * 1e-30;
  double log_sum = 0.0;
  for (Eigen::Index i = 0; i < psd.size(); ++i)
    log_sum += std::log(std::max(psd[i], floor));
  return std::exp(log_sum / static_cast<double>(psd.size())) / am;
}

} // namespace sonarscale
