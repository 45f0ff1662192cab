#include "sonarscale/divergence.hpp"

#include <cmath>

namespace sonarscale {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

double clamp_nonneg(double v, const char* what) {
  if (v >= 0.0) return v;
  if (v >= -kNegativeFloor) return 0.0;
  throw InvalidInputError(std::string(what) + ": negative value " + std::to_string(v) +
                          " below numerical floor");
}

} // namespace

double ConvexGenerator::value(const VectorXd& x) const {
  switch (kind) {
    case GeneratorKind::SquaredNorm:
      return x.squaredNorm();
    case GeneratorKind::ShannonEntropyBits: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = std::max(x[i], kProbFloor);
        s += xi * std::log2(xi);
      }
      return s;
    }
    case GeneratorKind::XLogX: {
      const double v = std::max(x[0], kProbFloor);
      return v * std::log(v);
    }
  }
  throw std::logic_error("unknown generator kind");
}

VectorXd ConvexGenerator::gradient(const VectorXd& x) const {
  switch (kind) {
    case GeneratorKind::SquaredNorm:
      return 2.0 * x;
    case GeneratorKind::ShannonEntropyBits: {
      VectorXd g(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = std::max(x[i], kProbFloor);
        g[i] = (std::log(xi) + 1.0) / kLog2;
      }
      return g;
    }
    case GeneratorKind::XLogX: {
      VectorXd g(1);
      g[0] = std::log(std::max(x[0], kProbFloor)) + 1.0;
      return g;
    }
  }
  throw std::logic_error("unknown generator kind");
}

void ConvexGenerator::check_domain(const VectorXd& x, const char* arg_name) const {
  switch (kind) {
    case GeneratorKind::SquaredNorm:
      return;
    case GeneratorKind::ShannonEntropyBits: {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0)
          throw InvalidInputError(std::string(arg_name) + "[" + std::to_string(i) +
                                  "]: negative entry for ShannonEntropyBits");
        sum += x[i];
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInputError(std::string(arg_name) +
                                ": entries must sum to 1 for ShannonEntropyBits, got " +
                                std::to_string(sum));
      return;
    }
    case GeneratorKind::XLogX: {
      if (x.size() != 1)
        throw InvalidInputError(std::string(arg_name) + ": XLogX expects a scalar");
      if (x[0] <= 0.0)
        throw InvalidInputError(std::string(arg_name) + "[0]: XLogX requires a positive value");
      return;
    }
  }
}

GaussianPoint::GaussianPoint(VectorXd m, double var) : mean(std::move(m)), variance(var) {
  if (variance <= 0.0)
    throw InvalidInputError("GaussianPoint: variance must be positive");
}

double bregman(const VectorXd& p, const VectorXd& q, const ConvexGenerator& gen) {
  if (p.size() != q.size())
    throw InvalidInputError("bregman: length mismatch");
  gen.check_domain(p, "p");
  gen.check_domain(q, "q");
  const double d = gen.value(p) - gen.value(q) - (p - q).dot(gen.gradient(q));
  return clamp_nonneg(d, "bregman");
}

double gaussian_kl(const GaussianPoint& p, const GaussianPoint& q) {
  if (p.dimension() != q.dimension())
    throw InvalidInputError("gaussian_kl: dimension mismatch");
  if (p.variance <= 0.0 || q.variance <= 0.0)
    throw InvalidInputError("gaussian_kl: variances must be positive");
  const double k = static_cast<double>(p.dimension());
  const double ratio = p.variance / q.variance;
  const double d = 0.5 * (k * ratio + (q.mean - p.mean).squaredNorm() / q.variance - k +
                          k * std::log(q.variance / p.variance));
  return clamp_nonneg(d, "gaussian_kl");
}

double dissimilarity(const VectorXd& p, const VectorXd& q, const DissimilarityMeasure& m) {
  const VectorXd& a = (m.direction == Direction::PtoQ) ? p : q;
  const VectorXd& b = (m.direction == Direction::PtoQ) ? q : p;
  switch (m.kind) {
    case MeasureKind::Euclidean:
      return (a - b).norm();
    case MeasureKind::SquaredEuclidean:
      return (a - b).squaredNorm();
    case MeasureKind::Bregman:
      return bregman(a, b, m.generator);
    case MeasureKind::GaussianKLOneSided:
      throw InvalidInputError("GaussianKLOneSided requires GaussianPoint inputs");
  }
  throw std::logic_error("unknown measure kind");
}

double dissimilarity(const GaussianPoint& p, const GaussianPoint& q,
                     const DissimilarityMeasure& m) {
  if (m.kind == MeasureKind::GaussianKLOneSided) {
    const GaussianPoint& a = (m.direction == Direction::PtoQ) ? p : q;
    const GaussianPoint& b = (m.direction == Direction::PtoQ) ? q : p;
    return gaussian_kl(a, b);
  }
  return dissimilarity(p.mean, q.mean, m);
}

namespace {

template <typename Point>
MatrixXd pairwise_impl(const std::vector<Point>& points, const DissimilarityMeasure& m) {
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  if (n < 2) throw InvalidInputError("pairwise_dissimilarity: need at least 2 points");
  MatrixXd out = MatrixXd::Zero(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) {
      if (p == q) continue;
      try {
        out(p, q) = dissimilarity(points[static_cast<size_t>(p)],
                                  points[static_cast<size_t>(q)], m);
      } catch (const InvalidInputError& e) {
        throw InvalidInputError("pairwise_dissimilarity at (" + std::to_string(p) + "," +
                                std::to_string(q) + "): " + e.what());
      }
    }
  }
  return out;
}

} // namespace

MatrixXd pairwise_dissimilarity(const std::vector<VectorXd>& points,
                                const DissimilarityMeasure& m) {
  return pairwise_impl(points, m);
}

MatrixXd pairwise_dissimilarity(const std::vector<GaussianPoint>& points,
                                const DissimilarityMeasure& m) {
  return pairwise_impl(points, m);
}

} // namespace sonarscale
