#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

namespace sonarscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BasisKind { Gaussian, ThinPlateSpline };

/// Radial basis function network mapping R^n -> R^m,
/// y_l = sum_k weights(l,k) * phi_k(||x - center_k||).
///
/// Immutable in use: construct (or load), then call the const operations.
class RbfModel {
public:
  RbfModel() = default;
  RbfModel(MatrixXd centers, VectorXd widths, MatrixXd weights, BasisKind basis);

  Eigen::Index input_dim() const { return centers_.cols(); }
  Eigen::Index latent_dim() const { return weights_.rows(); }
  Eigen::Index n_centers() const { return centers_.rows(); }
  const MatrixXd& centers() const { return centers_; }
  const VectorXd& widths() const { return widths_; }
  const MatrixXd& weights() const { return weights_; }
  BasisKind basis() const { return basis_; }

  RbfModel with_weights(MatrixXd w) const;

  /// y = f(x).
  VectorXd forward(const VectorXd& x) const;

  /// Basis activations for a batch: Phi(p,k) = phi_k(||x_p - center_k||).
  MatrixXd activations(const MatrixXd& X) const;
  VectorXd activation_row(const VectorXd& x) const;

  /// Latent squared distance through the expanded form
  /// sum_l ( sum_k w_lk [phi_k(||x_q-c_k||) - phi_k(||x_p-c_k||)] )^2.
  double latent_sq_distance(const VectorXd& x_p, const VectorXd& x_q) const;

  /// d phi / d x at x, one row per center (K x n). Used for Jacobian
  /// propagation of input uncertainty.
  MatrixXd activation_gradients(const VectorXd& x) const;

  /// Jacobian of forward at x (m x n).
  MatrixXd jacobian(const VectorXd& x) const;

private:
  MatrixXd centers_;  // K x n
  VectorXd widths_;   // K (per-center)
  MatrixXd weights_;  // m x K
  BasisKind basis_ = BasisKind::Gaussian;
};

/// k-means++ style seeded center sampling from the rows of X.
MatrixXd choose_centers(const MatrixXd& X, Eigen::Index k, std::uint64_t seed);

/// Median pairwise distance among centers; falls back to 1 for a single
/// center or coincident centers.
double median_center_spacing(const MatrixXd& centers);

/// Default center count: min(P, 10 * m * ceil(log2 P)).
Eigen::Index default_center_count(Eigen::Index n_points, Eigen::Index latent_dim);

/// Builds a model with sampled centers, median-heuristic width, and weights
/// fitted by least squares so that forward(x_p) ~ targets row p. Passing an
/// empty target matrix leaves small seeded random weights instead.
RbfModel init_rbf(const MatrixXd& X, Eigen::Index latent_dim, Eigen::Index n_centers,
                  std::uint64_t seed, const MatrixXd& targets = MatrixXd(),
                  BasisKind basis = BasisKind::Gaussian);

/// header_lines, when given, are written as '#'-prefixed provenance lines
/// (config echo, seed, hashes) and skipped on load.
void save_rbf_model(const RbfModel& model, std::ostream& out,
                    const std::vector<std::string>& header_lines = {});
void save_rbf_model(const RbfModel& model, const std::string& path,
                    const std::vector<std::string>& header_lines = {});
RbfModel load_rbf_model(std::istream& in);
RbfModel load_rbf_model(const std::string& path);

} // namespace sonarscale
