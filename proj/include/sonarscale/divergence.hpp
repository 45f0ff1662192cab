#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sonarscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown when an input lies outside a measure's validity domain.
class InvalidInputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Convex generators for Bregman divergences. Each kind defines F, its
/// gradient and a validity domain.
enum class GeneratorKind {
  SquaredNorm,        // F(x) = <x,x>, any vector
  ShannonEntropyBits, // F(x) = sum x_i log2 x_i, probability simplex
  XLogX,              // F(x) = x ln x, positive scalars
};

struct ConvexGenerator {
  GeneratorKind kind = GeneratorKind::SquaredNorm;

  double value(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;

  /// Throws InvalidInputError naming the offending index if x is outside
  /// the generator's domain.
  void check_domain(const VectorXd& x, const char* arg_name) const;
};

/// Point observation carrying spherical Gaussian uncertainty.
struct GaussianPoint {
  VectorXd mean;
  double variance = 1.0;

  GaussianPoint() = default;
  GaussianPoint(VectorXd m, double var);

  Eigen::Index dimension() const { return mean.size(); }
};

enum class MeasureKind {
  Euclidean,
  SquaredEuclidean,
  Bregman,
  GaussianKLOneSided,
};

/// Argument order for asymmetric measures: PtoQ evaluates d(p, q) with the
/// row point first, QtoP swaps them.
enum class Direction { PtoQ, QtoP };

struct DissimilarityMeasure {
  MeasureKind kind = MeasureKind::Euclidean;
  ConvexGenerator generator{};   // used when kind == Bregman
  Direction direction = Direction::PtoQ;

  bool symmetric() const {
    return kind == MeasureKind::Euclidean || kind == MeasureKind::SquaredEuclidean;
  }
};

// Values in (-kNegativeFloor, 0) from float noise clamp to 0; anything
// below the floor is treated as a domain violation.
inline constexpr double kNegativeFloor = 1e-12;

// Probability entries below this are floored before taking logs.
inline constexpr double kProbFloor = 1e-15;

/// Bregman divergence d_F(p, q) = F(p) - F(q) - <p - q, grad F(q)>.
double bregman(const VectorXd& p, const VectorXd& q, const ConvexGenerator& gen);

/// Closed-form KL( N(mu_p, s_p^2 I) || N(mu_q, s_q^2 I) ).
double gaussian_kl(const GaussianPoint& p, const GaussianPoint& q);

/// Dissimilarity between two plain vectors under the given measure.
/// GaussianKLOneSided is rejected here (needs GaussianPoint inputs).
double dissimilarity(const VectorXd& p, const VectorXd& q, const DissimilarityMeasure& m);

/// Dissimilarity between two Gaussian points. Non-Gaussian kinds apply to
/// the means.
double dissimilarity(const GaussianPoint& p, const GaussianPoint& q,
                     const DissimilarityMeasure& m);

/// P x P matrix of pairwise dissimilarities; M(p,q) = d(point_p, point_q)
/// under the measure's direction, diagonal exactly 0.
MatrixXd pairwise_dissimilarity(const std::vector<VectorXd>& points,
                                const DissimilarityMeasure& m);
MatrixXd pairwise_dissimilarity(const std::vector<GaussianPoint>& points,
                                const DissimilarityMeasure& m);

} // namespace sonarscale
