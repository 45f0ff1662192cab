// Test-only reference computations, independent of the library's training
// and projection paths.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Classical MDS: eigendecomposition of the doubly centered squared-distance
// matrix, top-m configuration.
inline MatrixXd classical_mds(const MatrixXd& distances, Eigen::Index m) {
  const Eigen::Index n = distances.rows();
  const MatrixXd D2 = distances.array().square();
  const MatrixXd J = MatrixXd::Identity(n, n) - MatrixXd::Constant(n, n, 1.0 / n);
  const MatrixXd B = -0.5 * J * D2 * J;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(B);
  MatrixXd config(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index idx = n - 1 - j;  // eigenvalues ascend
    const double lambda = std::max(eig.eigenvalues()[idx], 0.0);
    config.col(j) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
  }
  return config;
}

inline MatrixXd pairwise_euclidean(const MatrixXd& X) {
  const Eigen::Index n = X.rows();
  MatrixXd D(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) D(i, j) = (X.row(i) - X.row(j)).norm();
  return D;
}

} // namespace oracles
