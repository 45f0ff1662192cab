#include "sonarscale/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace sonarscale {

double spectrum_dissimilarity(const ChannelSpectrum& a, const ChannelSpectrum& b,
                              SpectrumMeasure measure) {
  const VectorXd p = a.normalized();
  const VectorXd q = b.normalized();
  switch (measure) {
    case SpectrumMeasure::Euclidean:
      return (p - q).norm();
    case SpectrumMeasure::SymmetrizedKL: {
      const ConvexGenerator gen{GeneratorKind::ShannonEntropyBits};
      return 0.5 * (bregman(p, q, gen) + bregman(q, p, gen));
    }
  }
  throw std::logic_error("unknown spectrum measure");
}

std::vector<Eigen::Index> modeseek(const MatrixXd& dissim, Eigen::Index k) {
  const Eigen::Index n = dissim.rows();
  if (dissim.cols() != n) throw InvalidInputError("modeseek: matrix must be square");
  if (k < 2 || k >= n) throw InvalidInputError("modeseek: k out of range");
  if ((dissim.diagonal().array() != 0.0).any() || (dissim.array() < 0.0).any())
    throw InvalidInputError("modeseek: need non-negative matrix with zero diagonal");

  // k nearest neighbors per row (excluding self), ties to lower index
  std::vector<std::vector<Eigen::Index>> knn(static_cast<size_t>(n));
  VectorXd density(n);
  std::vector<Eigen::Index> order(static_cast<size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index m = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) order[static_cast<size_t>(m++)] = j;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return dissim(i, a) != dissim(i, b) ? dissim(i, a) < dissim(i, b) : a < b;
    });
    knn[static_cast<size_t>(i)].assign(order.begin(), order.begin() + k);
    const double dk = dissim(i, order[static_cast<size_t>(k - 1)]);
    density[i] = dk > 0.0 ? 1.0 / dk : std::numeric_limits<double>::infinity();
  }

  std::vector<Eigen::Index> link(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = i;
    for (Eigen::Index j : knn[static_cast<size_t>(i)])
      if (density[j] > density[best] || (density[j] == density[best] && j < best)) best = j;
    link[static_cast<size_t>(i)] = best;
  }

  std::set<Eigen::Index> modes;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index cur = i;
    for (Eigen::Index hops = 0; hops <= n; ++hops) {
      const Eigen::Index next = link[static_cast<size_t>(cur)];
      if (next == cur) break;
      cur = next;
    }
    modes.insert(cur);
  }
  return {modes.begin(), modes.end()};
}

namespace {

template <typename Dist>
DissimilarityRepresentation representation_impl(const std::vector<ChannelSpectrum>& spectra,
                                                const std::vector<Eigen::Index>& prototypes,
                                                Dist&& dist) {
  const Eigen::Index n = static_cast<Eigen::Index>(spectra.size());
  for (Eigen::Index j : prototypes)
    if (j < 0 || j >= n)
      throw InvalidInputError("dissimilarity_representation: invalid prototype index");
  DissimilarityRepresentation rep;
  rep.prototypes = prototypes;
  rep.coords.resize(n, static_cast<Eigen::Index>(prototypes.size()));
  for (Eigen::Index p = 0; p < n; ++p)
    for (size_t j = 0; j < prototypes.size(); ++j)
      rep.coords(p, static_cast<Eigen::Index>(j)) =
          p == prototypes[j] ? 0.0
                             : dist(spectra[static_cast<size_t>(p)],
                                    spectra[static_cast<size_t>(prototypes[j])]);
  return rep;
}

} // namespace

DissimilarityRepresentation dissimilarity_representation(
    const std::vector<ChannelSpectrum>& spectra, const std::vector<Eigen::Index>& prototypes,
    SpectrumMeasure measure) {
  return representation_impl(spectra, prototypes,
                             [&](const ChannelSpectrum& a, const ChannelSpectrum& b) {
                               return spectrum_dissimilarity(a, b, measure);
                             });
}

DissimilarityRepresentation dissimilarity_representation(
    const std::vector<ChannelSpectrum>& spectra, const std::vector<Eigen::Index>& prototypes,
    const DissimilarityMeasure& measure) {
  return representation_impl(spectra, prototypes,
                             [&](const ChannelSpectrum& a, const ChannelSpectrum& b) {
                               return dissimilarity(a.normalized(), b.normalized(), measure);
                             });
}

std::vector<Eigen::Index> flag_outlier_beams(const DissimilarityRepresentation& rep,
                                             double z_threshold) {
  const Eigen::Index n = rep.coords.rows();
  if (n < 4) throw InvalidInputError("flag_outlier_beams: need at least 4 channels");
  if (!(z_threshold > 0.0)) throw InvalidInputError("flag_outlier_beams: z_threshold must be positive");

  auto median = [](std::vector<double> v) {
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
      const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
      return 0.5 * (lo + hi);
    }
    return hi;
  };

  VectorXd med(rep.coords.cols());
  for (Eigen::Index j = 0; j < rep.coords.cols(); ++j) {
    std::vector<double> col(rep.coords.col(j).data(), rep.coords.col(j).data() + n);
    med[j] = median(std::move(col));
  }
  std::vector<double> dist(static_cast<size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p)
    dist[static_cast<size_t>(p)] = (rep.coords.row(p).transpose() - med).norm();

  const double d_med = median(dist);
  std::vector<double> abs_dev(dist);
  for (double& v : abs_dev) v = std::abs(v - d_med);
  const double mad = median(std::move(abs_dev));
  const double scale = 1.4826 * mad;

  std::vector<Eigen::Index> flagged;
  const double eps = 1e-12 * std::max(1.0, d_med);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double dev = dist[static_cast<size_t>(p)] - d_med;
    const bool out = scale > eps ? dev / scale > z_threshold : dev > eps;
    if (out) flagged.push_back(p);
  }
  return flagged;
}

void write_scatter_svg(const MatrixXd& points, const std::vector<Eigen::Index>& flagged,
                       const std::string& path, const std::string& title) {
  if (points.cols() < 2 || points.cols() > 3)
    throw InvalidInputError("write_scatter_svg: need 2 or 3 columns");
  MatrixXd xy(points.rows(), 2);
  if (points.cols() == 2) {
    xy = points;
  } else {
    // oblique cabinet projection of the third axis
    xy.col(0) = points.col(0) + 0.35 * points.col(2);
    xy.col(1) = points.col(1) + 0.35 * points.col(2);
  }
  const double xmin = xy.col(0).minCoeff(), xmax = xy.col(0).maxCoeff();
  const double ymin = xy.col(1).minCoeff(), ymax = xy.col(1).maxCoeff();
  const double xspan = std::max(xmax - xmin, 1e-12), yspan = std::max(ymax - ymin, 1e-12);
  const double W = 640.0, H = 480.0, pad = 40.0;

  std::set<Eigen::Index> flag_set(flagged.begin(), flagged.end());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  f << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  for (Eigen::Index p = 0; p < xy.rows(); ++p) {
    const double cx = pad + (xy(p, 0) - xmin) / xspan * (W - 2 * pad);
    const double cy = H - pad - (xy(p, 1) - ymin) / yspan * (H - 2 * pad);
    const bool hot = flag_set.count(p) > 0;
    f << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << (hot ? 5 : 3)
      << "\" fill=\"" << (hot ? "#d62728" : "#1f77b4") << "\" fill-opacity=\"0.8\"/>\n";
    if (hot)
      f << "<text x=\"" << cx + 6 << "\" y=\"" << cy - 6 << "\" font-size=\"10\">" << p
        << "</text>\n";
  }
  f << "</svg>\n";
}

} // namespace sonarscale
