#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sonarscale/divergence.hpp"
#include "sonarscale/rbf.hpp"

namespace sonarscale {

enum class DeviationKind { SquaredError, BregmanXLogX };

struct StressConfig {
  DissimilarityMeasure input_measure{};
  DissimilarityMeasure latent_measure{};  // Euclidean by default
  DeviationKind deviation = DeviationKind::SquaredError;
  int max_iters = 500;
  double step_size = 1e-2;
  double tolerance = 1e-9;  // relative stress change
  std::uint64_t seed = 0;
  // 0 = use every pair; otherwise uniform seeded subsample of q<p pairs.
  std::size_t max_pairs = 0;
};

struct TrainedProjection {
  RbfModel model;
  MatrixXd latent_points;                  // P x m
  std::optional<VectorXd> latent_variances; // present for Gaussian inputs
  std::vector<double> stress_history;      // initial value + accepted steps
};

/// Training inputs: rows of X are observations; variances (when non-empty)
/// give each row a spherical Gaussian uncertainty.
struct TrainingSet {
  MatrixXd X;
  VectorXd variances;  // size 0 for plain points

  bool gaussian() const { return variances.size() > 0; }
};

TrainingSet make_training_set(const std::vector<VectorXd>& points);
TrainingSet make_training_set(const std::vector<GaussianPoint>& points);

/// Line search could not reduce the objective on the very first iteration.
class NonConvergenceError : public std::runtime_error {
public:
  NonConvergenceError(const std::string& msg, double stress_value)
      : std::runtime_error(msg), stress(stress_value) {}
  double stress;
};

/// Deviation between one target dissimilarity and one latent discrepancy.
double pair_deviation(double target, double latent, DeviationKind deviation);

/// Sum of pair deviations over the strict lower triangle (q < p).
double stress(const MatrixXd& target, const MatrixXd& latent, DeviationKind deviation);

/// Fits model weights by gradient descent with backtracking line search.
TrainedProjection train(const TrainingSet& inputs, const StressConfig& cfg,
                        const RbfModel& model_init);

/// First-order propagation of input variance through the map:
/// latent variance = variance * ||J||_F^2 / m, floored at 1e-15.
double propagate_uncertainty(const RbfModel& model, const GaussianPoint& g);

struct Projection {
  MatrixXd latent_points;
  std::optional<VectorXd> latent_variances;
};

/// Pure application of the trained map to new inputs.
Projection project(const RbfModel& model, const TrainingSet& inputs);

/// Analytic gradient of the training objective with respect to the weight
/// matrix, at the given weights. Exposed for verification against finite
/// differences.
MatrixXd stress_weight_gradient(const TrainingSet& inputs, const StressConfig& cfg,
                                const RbfModel& model);

/// Objective value seen by the trainer for the model's current weights
/// (honors pair subsampling).
double stress_of_model(const TrainingSet& inputs, const StressConfig& cfg,
                       const RbfModel& model);

/// Scores of the top-m principal components of the rows of X; the standard
/// weight-initialization target for the mapper.
MatrixXd pca_projection(const MatrixXd& X, Eigen::Index m);

} // namespace sonarscale
