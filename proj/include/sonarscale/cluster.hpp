#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sonarscale/divergence.hpp"
#include "sonarscale/spectrum.hpp"

namespace sonarscale {

/// Dissimilarity between two channel spectra, applied to the normalized
/// PSDs. SymmetrizedKL is the order-free default.
enum class SpectrumMeasure { SymmetrizedKL, Euclidean };

double spectrum_dissimilarity(const ChannelSpectrum& a, const ChannelSpectrum& b,
                              SpectrumMeasure measure);

/// Density-based mode seeking: density = 1 / distance-to-kth-neighbor, each
/// point links to the densest point in its k-neighborhood (itself included),
/// modes are the link fixed points. Ties break to the lower index.
std::vector<Eigen::Index> modeseek(const MatrixXd& dissim, Eigen::Index k);

/// Channels encoded by their dissimilarities to prototype channels.
struct DissimilarityRepresentation {
  std::vector<Eigen::Index> prototypes;
  MatrixXd coords;  // n_channels x n_prototypes
};

DissimilarityRepresentation dissimilarity_representation(
    const std::vector<ChannelSpectrum>& spectra, const std::vector<Eigen::Index>& prototypes,
    SpectrumMeasure measure);

/// Same representation under a general measure applied to normalized PSDs.
DissimilarityRepresentation dissimilarity_representation(
    const std::vector<ChannelSpectrum>& spectra, const std::vector<Eigen::Index>& prototypes,
    const DissimilarityMeasure& measure);

/// Channels whose distance to the coordinate-wise median row has a robust
/// z-score above the threshold, ascending.
std::vector<Eigen::Index> flag_outlier_beams(const DissimilarityRepresentation& rep,
                                             double z_threshold);

/// Simple scatter plot of 2-D or 3-D rows (3-D drawn with an oblique
/// projection); flagged rows highlighted.
void write_scatter_svg(const MatrixXd& points, const std::vector<Eigen::Index>& flagged,
                       const std::string& path, const std::string& title);

} // namespace sonarscale
