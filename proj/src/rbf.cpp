#include "sonarscale/rbf.hpp"

#include <Eigen/QR>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sonarscale/divergence.hpp"

namespace sonarscale {

namespace {

double basis_value(BasisKind kind, double r, double w) {
  switch (kind) {
    case BasisKind::Gaussian:
      return std::exp(-r * r / (2.0 * w * w));
    case BasisKind::ThinPlateSpline:
      return r > 0.0 ? r * r * std::log(r) : 0.0;
  }
  throw std::logic_error("unknown basis kind");
}

std::string basis_name(BasisKind kind) {
  return kind == BasisKind::Gaussian ? "gaussian" : "thin_plate_spline";
}

BasisKind basis_from_name(const std::string& name) {
  if (name == "gaussian") return BasisKind::Gaussian;
  if (name == "thin_plate_spline") return BasisKind::ThinPlateSpline;
  throw std::runtime_error("unknown basis kind: " + name);
}

} // namespace

RbfModel::RbfModel(MatrixXd centers, VectorXd widths, MatrixXd weights, BasisKind basis)
    : centers_(std::move(centers)), widths_(std::move(widths)),
      weights_(std::move(weights)), basis_(basis) {
  if (centers_.rows() < 1) throw InvalidInputError("RbfModel: need at least one center");
  if (widths_.size() == 1 && centers_.rows() > 1)
    widths_ = VectorXd::Constant(centers_.rows(), widths_[0]);
  if (widths_.size() != centers_.rows())
    throw InvalidInputError("RbfModel: widths length must match center count");
  if ((widths_.array() <= 0.0).any())
    throw InvalidInputError("RbfModel: widths must be positive");
  if (weights_.cols() != centers_.rows())
    throw InvalidInputError("RbfModel: weights must be m x K");
  const Eigen::Index m = weights_.rows();
  if (m < 1 || m > 3)
    throw InvalidInputError("RbfModel: latent_dim must be 1, 2 or 3");
}

RbfModel RbfModel::with_weights(MatrixXd w) const {
  RbfModel out = *this;
  if (w.rows() != weights_.rows() || w.cols() != weights_.cols())
    throw InvalidInputError("with_weights: shape mismatch");
  out.weights_ = std::move(w);
  return out;
}

VectorXd RbfModel::activation_row(const VectorXd& x) const {
  if (x.size() != input_dim())
    throw InvalidInputError("RbfModel: input dimension mismatch");
  VectorXd phi(n_centers());
  for (Eigen::Index k = 0; k < n_centers(); ++k) {
    const double r = (x - centers_.row(k).transpose()).norm();
    phi[k] = basis_value(basis_, r, widths_[k]);
  }
  return phi;
}

VectorXd RbfModel::forward(const VectorXd& x) const {
  return weights_ * activation_row(x);
}

MatrixXd RbfModel::activations(const MatrixXd& X) const {
  if (X.cols() != input_dim())
    throw InvalidInputError("RbfModel: batch column count mismatch");
  MatrixXd phi(X.rows(), n_centers());
  for (Eigen::Index p = 0; p < X.rows(); ++p)
    phi.row(p) = activation_row(X.row(p).transpose()).transpose();
  return phi;
}

double RbfModel::latent_sq_distance(const VectorXd& x_p, const VectorXd& x_q) const {
  const VectorXd diff = activation_row(x_q) - activation_row(x_p);
  double total = 0.0;
  for (Eigen::Index l = 0; l < latent_dim(); ++l) {
    const double s = weights_.row(l).dot(diff);
    total += s * s;
  }
  return total;
}

MatrixXd RbfModel::activation_gradients(const VectorXd& x) const {
  if (x.size() != input_dim())
    throw InvalidInputError("RbfModel: input dimension mismatch");
  MatrixXd g(n_centers(), input_dim());
  for (Eigen::Index k = 0; k < n_centers(); ++k) {
    const VectorXd d = x - centers_.row(k).transpose();
    const double r = d.norm();
    switch (basis_) {
      case BasisKind::Gaussian: {
        const double w2 = widths_[k] * widths_[k];
        g.row(k) = (-basis_value(basis_, r, widths_[k]) / w2) * d.transpose();
        break;
      }
      case BasisKind::ThinPlateSpline:
        // d/dx of r^2 log r = (2 log r + 1) (x - c); limit 0 at r = 0.
        g.row(k) = r > 0.0 ? ((2.0 * std::log(r) + 1.0) * d.transpose()).eval()
                           : Eigen::RowVectorXd::Zero(input_dim()).eval();
        break;
    }
  }
  if (!g.allFinite())
    throw std::runtime_error("activation_gradients: non-finite Jacobian (width underflow?)");
  return g;
}

MatrixXd RbfModel::jacobian(const VectorXd& x) const {
  return weights_ * activation_gradients(x);
}

MatrixXd choose_centers(const MatrixXd& X, Eigen::Index k, std::uint64_t seed) {
  const Eigen::Index P = X.rows();
  if (k < 1 || k > P) throw InvalidInputError("choose_centers: k out of range");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(P)));
  VectorXd d2 = (X.rowwise() - X.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<Eigen::Index>(chosen.size()) < k) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(P));
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      pick = P - 1;
      for (Eigen::Index i = 0; i < P; ++i) {
        acc += d2[i];
        if (acc >= target) { pick = i; break; }
      }
    }
    chosen.push_back(pick);
    d2 = d2.cwiseMin((X.rowwise() - X.row(pick)).rowwise().squaredNorm());
  }
  MatrixXd centers(k, X.cols());
  for (Eigen::Index i = 0; i < k; ++i) centers.row(i) = X.row(chosen[static_cast<size_t>(i)]);
  return centers;
}

double median_center_spacing(const MatrixXd& centers) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      d.push_back((centers.row(i) - centers.row(j)).norm());
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  const double med = d[d.size() / 2];
  return med > 0.0 ? med : 1.0;
}

Eigen::Index default_center_count(Eigen::Index n_points, Eigen::Index latent_dim) {
  const double lg = std::ceil(std::log2(std::max<double>(2.0, static_cast<double>(n_points))));
  return std::min<Eigen::Index>(n_points,
                                static_cast<Eigen::Index>(10.0 * static_cast<double>(latent_dim) * lg));
}

RbfModel init_rbf(const MatrixXd& X, Eigen::Index latent_dim, Eigen::Index n_centers,
                  std::uint64_t seed, const MatrixXd& targets, BasisKind basis) {
  if (n_centers <= 0) n_centers = default_center_count(X.rows(), latent_dim);
  MatrixXd centers = choose_centers(X, n_centers, seed);
  VectorXd widths = VectorXd::Constant(n_centers, median_center_spacing(centers));
  MatrixXd weights(latent_dim, n_centers);
  RbfModel probe(centers, widths, MatrixXd::Zero(latent_dim, n_centers), basis);
  if (targets.size() > 0) {
    if (targets.rows() != X.rows() || targets.cols() != latent_dim)
      throw InvalidInputError("init_rbf: targets must be P x latent_dim");
    const MatrixXd phi = probe.activations(X);
    // weights^T solves phi * W^T = targets in the least-squares sense
    weights = phi.colPivHouseholderQr().solve(targets).transpose();
  } else {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 0.1);
    for (Eigen::Index l = 0; l < latent_dim; ++l)
      for (Eigen::Index k = 0; k < n_centers; ++k) weights(l, k) = gauss(rng);
  }
  return probe.with_weights(std::move(weights));
}

void save_rbf_model(const RbfModel& model, std::ostream& out,
                    const std::vector<std::string>& header_lines) {
  out.precision(17);
  out << "sonarscale-rbf-model v1\n";
  for (const auto& line : header_lines) out << "# " << line << "\n";
  out << "basis = " << basis_name(model.basis()) << "\n";
  out << "input_dim = " << model.input_dim() << "\n";
  out << "latent_dim = " << model.latent_dim() << "\n";
  out << "n_centers = " << model.n_centers() << "\n";
  out << "widths =";
  for (Eigen::Index k = 0; k < model.n_centers(); ++k) out << " " << model.widths()[k];
  out << "\ncenters:\n";
  for (Eigen::Index k = 0; k < model.n_centers(); ++k) {
    for (Eigen::Index j = 0; j < model.input_dim(); ++j)
      out << (j ? " " : "") << model.centers()(k, j);
    out << "\n";
  }
  out << "weights:\n";
  for (Eigen::Index l = 0; l < model.latent_dim(); ++l) {
    for (Eigen::Index k = 0; k < model.n_centers(); ++k)
      out << (k ? " " : "") << model.weights()(l, k);
    out << "\n";
  }
}

void save_rbf_model(const RbfModel& model, const std::string& path,
                    const std::vector<std::string>& header_lines) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  save_rbf_model(model, f, header_lines);
}

RbfModel load_rbf_model(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line != "sonarscale-rbf-model v1")
    throw std::runtime_error("not an rbf model file");
  auto expect_kv = [&](const std::string& key) {
    do {
      std::getline(in, line);
    } while (in && !line.empty() && line[0] == '#');
    const std::string prefix = key + " = ";
    if (line.rfind(prefix, 0) != 0)
      throw std::runtime_error("model file: expected '" + key + "', got '" + line + "'");
    return line.substr(prefix.size());
  };
  const BasisKind basis = basis_from_name(expect_kv("basis"));
  const Eigen::Index n = std::stoll(expect_kv("input_dim"));
  const Eigen::Index m = std::stoll(expect_kv("latent_dim"));
  const Eigen::Index K = std::stoll(expect_kv("n_centers"));
  std::getline(in, line);
  if (line.rfind("widths =", 0) != 0) throw std::runtime_error("model file: missing widths");
  std::istringstream ws(line.substr(8));
  VectorXd widths(K);
  for (Eigen::Index k = 0; k < K; ++k) ws >> widths[k];
  std::getline(in, line);
  if (line != "centers:") throw std::runtime_error("model file: missing centers");
  MatrixXd centers(K, n);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index j = 0; j < n; ++j) in >> centers(k, j);
  in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  std::getline(in, line);
  if (line != "weights:") throw std::runtime_error("model file: missing weights");
  MatrixXd weights(m, K);
  for (Eigen::Index l = 0; l < m; ++l)
    for (Eigen::Index k = 0; k < K; ++k) in >> weights(l, k);
  if (!in) throw std::runtime_error("model file: truncated");
  return RbfModel(std::move(centers), std::move(widths), std::move(weights), basis);
}

RbfModel load_rbf_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return load_rbf_model(f);
}

} // namespace sonarscale
