#include "sonarscale/trainer.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace sonarscale {

namespace {

constexpr double kFloor = 1e-15;

struct PairList {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (p, q) with q < p
};

PairList build_pairs(Eigen::Index P, std::size_t max_pairs, std::uint64_t seed) {
  PairList out;
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index q = 0; q < p; ++q) out.pairs.emplace_back(p, q);
  if (max_pairs > 0 && out.pairs.size() > max_pairs) {
    std::mt19937_64 rng(seed ^ 0x7061697273ull);
    std::shuffle(out.pairs.begin(), out.pairs.end(), rng);
    out.pairs.resize(max_pairs);
    std::sort(out.pairs.begin(), out.pairs.end());
  }
  return out;
}

// State shared across iterations: fixed activations and targets.
struct TrainContext {
  const TrainingSet& inputs;
  const StressConfig& cfg;
  MatrixXd phi;                 // P x K
  std::vector<MatrixXd> act_grads;  // per-point K x n, Gaussian-latent only
  PairList pairs;
  std::vector<double> targets;  // aligned with pairs

  bool gaussian_latent() const {
    return cfg.latent_measure.kind == MeasureKind::GaussianKLOneSided;
  }
};

double target_of_pair(const TrainingSet& in, const StressConfig& cfg,
                      Eigen::Index p, Eigen::Index q) {
  if (in.gaussian()) {
    GaussianPoint a(in.X.row(p).transpose(), in.variances[p]);
    GaussianPoint b(in.X.row(q).transpose(), in.variances[q]);
    return dissimilarity(a, b, cfg.input_measure);
  }
  return dissimilarity(in.X.row(p).transpose(), in.X.row(q).transpose(), cfg.input_measure);
}

TrainContext make_context(const TrainingSet& inputs, const StressConfig& cfg,
                          const RbfModel& model) {
  if (inputs.X.rows() < 3) throw InvalidInputError("train: need at least 3 points");
  if (inputs.X.cols() != model.input_dim())
    throw InvalidInputError("train: model input_dim does not match data");
  if (cfg.input_measure.kind == MeasureKind::GaussianKLOneSided && !inputs.gaussian())
    throw InvalidInputError("train: GaussianKLOneSided input measure needs Gaussian inputs");
  TrainContext ctx{inputs, cfg, model.activations(inputs.X), {}, {}, {}};
  if (ctx.gaussian_latent()) {
    if (!inputs.gaussian())
      throw InvalidInputError("train: GaussianKLOneSided latent measure needs Gaussian inputs");
    ctx.act_grads.reserve(static_cast<size_t>(inputs.X.rows()));
    for (Eigen::Index p = 0; p < inputs.X.rows(); ++p)
      ctx.act_grads.push_back(model.activation_gradients(inputs.X.row(p).transpose()));
  }
  ctx.pairs = build_pairs(inputs.X.rows(), cfg.max_pairs, cfg.seed);
  ctx.targets.reserve(ctx.pairs.pairs.size());
  for (auto [p, q] : ctx.pairs.pairs)
    ctx.targets.push_back(target_of_pair(inputs, cfg, p, q));
  return ctx;
}

// Latent variances for the current weights (Gaussian-latent route).
VectorXd latent_variances_for(const TrainContext& ctx, const MatrixXd& W) {
  const Eigen::Index P = ctx.inputs.X.rows();
  const double m = static_cast<double>(W.rows());
  VectorXd s(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const double fro2 = (W * ctx.act_grads[static_cast<size_t>(p)]).squaredNorm();
    s[p] = std::max(ctx.inputs.variances[p] * fro2 / m, kFloor);
  }
  return s;
}

double latent_pair_value(const TrainContext& ctx, const MatrixXd& Y, const VectorXd& s,
                         Eigen::Index p, Eigen::Index q) {
  const auto& lm = ctx.cfg.latent_measure;
  Eigen::Index a = p, b = q;
  if (lm.direction == Direction::QtoP) std::swap(a, b);
  switch (lm.kind) {
    case MeasureKind::Euclidean:
      return (Y.row(a) - Y.row(b)).norm();
    case MeasureKind::SquaredEuclidean:
      return (Y.row(a) - Y.row(b)).squaredNorm();
    case MeasureKind::GaussianKLOneSided: {
      GaussianPoint ga(Y.row(a).transpose(), s[a]);
      GaussianPoint gb(Y.row(b).transpose(), s[b]);
      return gaussian_kl(ga, gb);
    }
    case MeasureKind::Bregman:
      throw InvalidInputError("train: Bregman latent measure is not supported");
  }
  throw std::logic_error("unknown latent measure");
}

double objective(const TrainContext& ctx, const MatrixXd& W) {
  const MatrixXd Y = ctx.phi * W.transpose();
  VectorXd s;
  if (ctx.gaussian_latent()) s = latent_variances_for(ctx, W);
  double E = 0.0;
  for (size_t i = 0; i < ctx.pairs.pairs.size(); ++i) {
    auto [p, q] = ctx.pairs.pairs[i];
    E += pair_deviation(ctx.targets[i], latent_pair_value(ctx, Y, s, p, q),
                        ctx.cfg.deviation);
  }
  return E;
}

// d(deviation)/d(latent value)
double deviation_slope(double t, double d, DeviationKind dev) {
  switch (dev) {
    case DeviationKind::SquaredError:
      return -2.0 * (t - d);
    case DeviationKind::BregmanXLogX: {
      const double tf = std::max(t, kFloor);
      const double df = std::max(d, kFloor);
      return d <= kFloor ? 0.0 : 1.0 - tf / df;  // floored region is flat
    }
  }
  throw std::logic_error("unknown deviation kind");
}

MatrixXd gradient(const TrainContext& ctx, const MatrixXd& W) {
  const MatrixXd Y = ctx.phi * W.transpose();
  const Eigen::Index P = ctx.inputs.X.rows();
  MatrixXd grad = MatrixXd::Zero(W.rows(), W.cols());

  if (!ctx.gaussian_latent()) {
    const bool squared = ctx.cfg.latent_measure.kind == MeasureKind::SquaredEuclidean;
    for (size_t i = 0; i < ctx.pairs.pairs.size(); ++i) {
      auto [p, q] = ctx.pairs.pairs[i];
      const VectorXd delta = (ctx.phi.row(p) - ctx.phi.row(q)).transpose();
      const VectorXd ydiff = (Y.row(p) - Y.row(q)).transpose();
      const double d2 = ydiff.squaredNorm();
      const double d = squared ? d2 : std::sqrt(d2);
      const double slope = deviation_slope(ctx.targets[i], d, ctx.cfg.deviation);
      if (slope == 0.0) continue;
      if (squared) {
        grad.noalias() += (2.0 * slope) * ydiff * delta.transpose();
      } else if (d > 0.0) {
        grad.noalias() += (slope / d) * ydiff * delta.transpose();
      }
    }
    return grad;
  }

  // Gaussian-KL latent route: d(p,q) depends on means through phi and on
  // variances through the activation Jacobians.
  const VectorXd s = latent_variances_for(ctx, W);
  const double m = static_cast<double>(W.rows());
  VectorXd var_coeff = VectorXd::Zero(P);  // sum of slope * dKL/ds_p per point
  for (size_t i = 0; i < ctx.pairs.pairs.size(); ++i) {
    auto [p, q] = ctx.pairs.pairs[i];
    Eigen::Index a = p, b = q;
    if (ctx.cfg.latent_measure.direction == Direction::QtoP) std::swap(a, b);
    const VectorXd mdiff = (Y.row(a) - Y.row(b)).transpose();
    const double md2 = mdiff.squaredNorm();
    const double d = 0.5 * (m * s[a] / s[b] + md2 / s[b] - m + m * std::log(s[b] / s[a]));
    const double slope = deviation_slope(ctx.targets[i], std::max(d, 0.0), ctx.cfg.deviation);
    if (slope == 0.0) continue;
    // mean terms
    grad.noalias() += (slope / s[b]) * mdiff * (ctx.phi.row(a) - ctx.phi.row(b));
    // variance terms
    var_coeff[a] += slope * 0.5 * (m / s[b] - m / s[a]);
    var_coeff[b] += slope * 0.5 * (m / s[b] - m * s[a] / (s[b] * s[b]) - md2 / (s[b] * s[b]));
  }
  for (Eigen::Index p = 0; p < P; ++p) {
    if (var_coeff[p] == 0.0) continue;
    const double raw = ctx.inputs.variances[p] *
                       (W * ctx.act_grads[static_cast<size_t>(p)]).squaredNorm() / m;
    if (raw <= kFloor) continue;  // floored variance: flat
    const MatrixXd& G = ctx.act_grads[static_cast<size_t>(p)];
    grad.noalias() +=
        var_coeff[p] * (2.0 * ctx.inputs.variances[p] / m) * (W * G) * G.transpose();
  }
  return grad;
}

} // namespace

TrainingSet make_training_set(const std::vector<VectorXd>& points) {
  if (points.empty()) throw InvalidInputError("make_training_set: empty input");
  TrainingSet out;
  out.X.resize(static_cast<Eigen::Index>(points.size()), points[0].size());
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != out.X.cols())
      throw InvalidInputError("make_training_set: ragged point lengths");
    out.X.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  }
  return out;
}

TrainingSet make_training_set(const std::vector<GaussianPoint>& points) {
  if (points.empty()) throw InvalidInputError("make_training_set: empty input");
  TrainingSet out;
  out.X.resize(static_cast<Eigen::Index>(points.size()), points[0].dimension());
  out.variances.resize(static_cast<Eigen::Index>(points.size()));
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].dimension() != out.X.cols())
      throw InvalidInputError("make_training_set: ragged point dimensions");
    out.X.row(static_cast<Eigen::Index>(i)) = points[i].mean.transpose();
    out.variances[static_cast<Eigen::Index>(i)] = points[i].variance;
  }
  return out;
}

double pair_deviation(double target, double latent, DeviationKind deviation) {
  switch (deviation) {
    case DeviationKind::SquaredError: {
      const double e = target - latent;
      return e * e;
    }
    case DeviationKind::BregmanXLogX: {
      const double t = std::max(target, kFloor);
      const double d = std::max(latent, kFloor);
      return std::max(t * std::log(t / d) - t + d, 0.0);
    }
  }
  throw std::logic_error("unknown deviation kind");
}

double stress(const MatrixXd& target, const MatrixXd& latent, DeviationKind deviation) {
  if (target.rows() != target.cols() || latent.rows() != latent.cols() ||
      target.rows() != latent.rows())
    throw InvalidInputError("stress: matrices must be square and of equal size");
  double E = 0.0;
  for (Eigen::Index p = 0; p < target.rows(); ++p) {
    for (Eigen::Index q = 0; q < p; ++q) {
      if (std::isnan(target(p, q)) || std::isnan(latent(p, q)))
        throw InvalidInputError("stress: NaN entry at (" + std::to_string(p) + "," +
                                std::to_string(q) + ")");
      E += pair_deviation(target(p, q), latent(p, q), deviation);
    }
  }
  return E;
}

double stress_of_model(const TrainingSet& inputs, const StressConfig& cfg,
                       const RbfModel& model) {
  return objective(make_context(inputs, cfg, model), model.weights());
}

MatrixXd stress_weight_gradient(const TrainingSet& inputs, const StressConfig& cfg,
                                const RbfModel& model) {
  return gradient(make_context(inputs, cfg, model), model.weights());
}

TrainedProjection train(const TrainingSet& inputs, const StressConfig& cfg,
                        const RbfModel& model_init) {
  TrainContext ctx = make_context(inputs, cfg, model_init);
  MatrixXd W = model_init.weights();
  double E = objective(ctx, W);
  std::vector<double> history{E};

  double step = cfg.step_size;
  int flat_streak = 0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const MatrixXd g = gradient(ctx, W);
    if (g.norm() <= 1e-13 * (1.0 + std::abs(E))) break;

    bool accepted = false;
    double E_new = E;
    MatrixXd W_new;
    for (int h = 0; h <= 30; ++h) {
      W_new = W - step * g;
      E_new = objective(ctx, W_new);
      if (std::isfinite(E_new) && E_new < E) { accepted = true; break; }
      step *= 0.5;
    }
    if (!accepted) {
      if (iter == 0)
        throw NonConvergenceError("train: line search failed at first iteration", E);
      break;
    }
    const double rel = (E - E_new) / std::max(E, kFloor);
    W.swap(W_new);
    E = E_new;
    history.push_back(E);
    step = std::min(step * 2.0, cfg.step_size * 1e6);
    flat_streak = (rel < cfg.tolerance) ? flat_streak + 1 : 0;
    if (flat_streak >= 5) break;
  }

  TrainedProjection out{model_init.with_weights(W), {}, std::nullopt, std::move(history)};
  Projection proj = project(out.model, inputs);
  out.latent_points = std::move(proj.latent_points);
  out.latent_variances = std::move(proj.latent_variances);
  return out;
}

double propagate_uncertainty(const RbfModel& model, const GaussianPoint& g) {
  if (g.dimension() != model.input_dim())
    throw InvalidInputError("propagate_uncertainty: dimension mismatch");
  const double fro2 = model.jacobian(g.mean).squaredNorm();
  return std::max(g.variance * fro2 / static_cast<double>(model.latent_dim()), kFloor);
}

Projection project(const RbfModel& model, const TrainingSet& inputs) {
  Projection out;
  const Eigen::Index P = inputs.X.rows();
  out.latent_points.resize(P, model.latent_dim());
  for (Eigen::Index p = 0; p < P; ++p)
    out.latent_points.row(p) = model.forward(inputs.X.row(p).transpose()).transpose();
  if (inputs.gaussian()) {
    VectorXd vars(P);
    for (Eigen::Index p = 0; p < P; ++p)
      vars[p] = propagate_uncertainty(
          model, GaussianPoint(inputs.X.row(p).transpose(), inputs.variances[p]));
    out.latent_variances = std::move(vars);
  }
  return out;
}

MatrixXd pca_projection(const MatrixXd& X, Eigen::Index m) {
  const MatrixXd centered = X.rowwise() - X.colwise().mean();
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  // eigenvalues ascend; take the trailing m columns
  const MatrixXd basis = eig.eigenvectors().rightCols(m).rowwise().reverse();
  return centered * basis;
}

} // namespace sonarscale
