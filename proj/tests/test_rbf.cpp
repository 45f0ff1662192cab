#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sonarscale/divergence.hpp"
#include "sonarscale/rbf.hpp"

using namespace sonarscale;

namespace {

RbfModel random_model(std::mt19937_64& rng, Eigen::Index K, Eigen::Index n, Eigen::Index m) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uw(0.5, 2.0);
  MatrixXd centers(K, n), weights(m, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < n; ++j) centers(i, j) = gauss(rng);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < K; ++j) weights(i, j) = gauss(rng);
  return RbfModel(centers, VectorXd::Constant(K, uw(rng)), weights, BasisKind::Gaussian);
}

VectorXd random_vec(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> gauss;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

// independent double-loop evaluation of the network
VectorXd forward_oracle(const RbfModel& model, const VectorXd& x) {
  VectorXd y = VectorXd::Zero(model.latent_dim());
  for (Eigen::Index l = 0; l < model.latent_dim(); ++l)
    for (Eigen::Index k = 0; k < model.n_centers(); ++k) {
      const double r = (x - model.centers().row(k).transpose()).norm();
      y[l] += model.weights()(l, k) * std::exp(-r * r / (2.0 * model.widths()[k] * model.widths()[k]));
    }
  return y;
}

} // namespace

TEST_CASE("forward basic examples") {
  const RbfModel unit(MatrixXd::Zero(1, 1), VectorXd::Ones(1), MatrixXd::Ones(1, 1),
                      BasisKind::Gaussian);
  CHECK(unit.forward(VectorXd::Zero(1))[0] == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  const RbfModel model = random_model(rng, 4, 3, 2);
  const RbfModel zeroed = model.with_weights(MatrixXd::Zero(2, 4));
  CHECK(zeroed.forward(random_vec(rng, 3)).norm() == 0.0);

  for (int i = 0; i < 50; ++i) {
    const RbfModel m = random_model(rng, 2, 3, 2);
    const VectorXd x = random_vec(rng, 3);
    CHECK((m.forward(x) - forward_oracle(m, x)).norm() < 1e-12);
  }

  CHECK_THROWS_AS(model.forward(VectorXd::Zero(5)), InvalidInputError);
}

TEST_CASE("latent squared distance equals forward-difference norm") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const RbfModel m = random_model(rng, 3, 2, 2);
    const VectorXd a = random_vec(rng, 2), b = random_vec(rng, 2);
    const double lhs = m.latent_sq_distance(a, b);
    const double rhs = (m.forward(b) - m.forward(a)).squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + rhs));
    CHECK(m.latent_sq_distance(a, a) == 0.0);
  }
}

TEST_CASE("latent squared distance scalar check") {
  // K=1, weights [[1]], phi values 1 and 0.5 at the two inputs -> 0.25
  const double w = 1.0;
  const RbfModel m(MatrixXd::Zero(1, 1), VectorXd::Ones(1), MatrixXd::Ones(1, 1),
                   BasisKind::Gaussian);
  VectorXd at_center = VectorXd::Zero(1);            // phi = 1
  VectorXd off(1);
  off[0] = std::sqrt(2.0 * w * w * std::log(2.0));   // phi = 0.5
  CHECK(m.latent_sq_distance(at_center, off) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("activations") {
  std::mt19937_64 rng(3);
  const RbfModel m = random_model(rng, 4, 3, 2);

  SUBCASE("row at a center is 1 for the gaussian basis") {
    const MatrixXd phi = m.activations(m.centers());
    for (Eigen::Index k = 0; k < m.n_centers(); ++k)
      CHECK(phi(k, k) == doctest::Approx(1.0));
  }

  SUBCASE("thin plate spline is 0 at zero radius") {
    const RbfModel tps(MatrixXd::Zero(1, 2), VectorXd::Ones(1), MatrixXd::Ones(1, 1),
                       BasisKind::ThinPlateSpline);
    CHECK(tps.activation_row(VectorXd::Zero(2))[0] == 0.0);
  }

  SUBCASE("batch rows equal per-point evaluation") {
    MatrixXd X(5, 3);
    for (Eigen::Index p = 0; p < 5; ++p) X.row(p) = random_vec(rng, 3).transpose();
    const MatrixXd phi = m.activations(X);
    for (Eigen::Index p = 0; p < 5; ++p) {
      CHECK((phi.row(p).transpose() - m.activation_row(X.row(p).transpose())).norm() == 0.0);
      CHECK((m.weights() * phi.row(p).transpose() - m.forward(X.row(p).transpose())).norm() <
            1e-14);
    }
  }
}

TEST_CASE("linearity and permutation invariance") {
  std::mt19937_64 rng(4);
  const RbfModel m = random_model(rng, 5, 3, 2);
  const VectorXd x = random_vec(rng, 3);

  const RbfModel scaled = m.with_weights(2.5 * m.weights());
  CHECK((scaled.forward(x) - 2.5 * m.forward(x)).norm() <= 1e-14 * m.forward(x).norm());

  // permute centers together with weight columns
  std::vector<Eigen::Index> perm = {3, 0, 4, 1, 2};
  MatrixXd centers(5, 3), weights(2, 5);
  VectorXd widths(5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    centers.row(i) = m.centers().row(perm[static_cast<size_t>(i)]);
    weights.col(i) = m.weights().col(perm[static_cast<size_t>(i)]);
    widths[i] = m.widths()[perm[static_cast<size_t>(i)]];
  }
  const RbfModel permuted(centers, widths, weights, BasisKind::Gaussian);
  CHECK((permuted.forward(x) - m.forward(x)).norm() <= 1e-14 * m.forward(x).norm());
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(RbfModel(MatrixXd::Zero(1, 2), VectorXd::Zero(1), MatrixXd::Ones(1, 1),
                           BasisKind::Gaussian),
                  InvalidInputError);
  CHECK_THROWS_AS(RbfModel(MatrixXd::Zero(2, 2), VectorXd::Ones(2), MatrixXd::Ones(1, 3),
                           BasisKind::Gaussian),
                  InvalidInputError);
}

TEST_CASE("serialization round trip preserves forward outputs") {
  std::mt19937_64 rng(5);
  const RbfModel m = random_model(rng, 6, 4, 3);
  std::stringstream buf;
  save_rbf_model(m, buf, {"cfg example = 1"});
  const RbfModel loaded = load_rbf_model(buf);
  for (int i = 0; i < 20; ++i) {
    const VectorXd x = random_vec(rng, 4);
    CHECK((loaded.forward(x) - m.forward(x)).norm() < 1e-12);
  }
  CHECK(loaded.basis() == m.basis());
  CHECK(loaded.n_centers() == m.n_centers());
}

TEST_CASE("center selection and width heuristic") {
  std::mt19937_64 rng(6);
  MatrixXd X(30, 2);
  for (Eigen::Index p = 0; p < 30; ++p) X.row(p) = random_vec(rng, 2).transpose();
  const MatrixXd centers = choose_centers(X, 10, 42);
  CHECK(centers.rows() == 10);
  // every center is one of the data rows
  for (Eigen::Index k = 0; k < 10; ++k) {
    double best = 1e300;
    for (Eigen::Index p = 0; p < 30; ++p)
      best = std::min(best, (centers.row(k) - X.row(p)).norm());
    CHECK(best == 0.0);
  }
  CHECK(median_center_spacing(centers) > 0.0);
  // deterministic for fixed seed
  CHECK(choose_centers(X, 10, 42) == centers);
}
