#include "sonarscale/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sonarscale/divergence.hpp"
#include "sonarscale/spectrum.hpp"

namespace sonarscale {

void EmbeddingConfig::validate() const {
  if (window_length < 1 || hop < 1 || n_components < 1)
    throw InvalidInputError("EmbeddingConfig: window_length, hop, n_components must be positive");
  if (window_length < n_components)
    throw InvalidInputError("EmbeddingConfig: window_length must be >= n_components");
  if (!(flatness_threshold > 0.0 && flatness_threshold < 1.0))
    throw InvalidInputError("EmbeddingConfig: flatness_threshold must be in (0,1)");
}

Eigen::Index SourceBank::n_signal() const {
  Eigen::Index n = 0;
  for (bool b : signal_mask) n += b ? 1 : 0;
  return n;
}

MatrixXd embed(const VectorXd& channel, Eigen::Index window_length, Eigen::Index hop) {
  if (window_length < 1 || hop < 1)
    throw InvalidInputError("embed: window_length and hop must be positive");
  if (channel.size() < window_length)
    throw InvalidInputError("embed: channel shorter than window_length");
  const Eigen::Index T = (channel.size() - window_length) / hop + 1;
  MatrixXd traj(T, window_length);
  for (Eigen::Index t = 0; t < T; ++t)
    traj.row(t) = channel.segment(t * hop, window_length).transpose();
  return traj;
}

namespace {

// Symmetric decorrelation: W <- (W W^T)^{-1/2} W.
MatrixXd symmetric_decorrelate(const MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(W * W.transpose());
  const VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-30).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * W;
}

// FastICA with tanh contrast on whitened rows Z (T x C). Returns the
// orthogonal unmixing matrix (C x C, sources = Z * W^T rows... columns).
MatrixXd fastica(const MatrixXd& Z, std::uint64_t seed) {
  const Eigen::Index C = Z.cols();
  const double T = static_cast<double>(Z.rows());
  std::mt19937_64 rng(seed ^ 0x69636155ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd W(C, C);  // rows are unmixing vectors
  for (Eigen::Index i = 0; i < C; ++i)
    for (Eigen::Index j = 0; j < C; ++j) W(i, j) = gauss(rng);
  W = symmetric_decorrelate(W);

  const int max_iters = 500;
  const double tol = 1e-6;
  double delta = 1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    const MatrixXd U = Z * W.transpose();            // T x C source estimates
    const MatrixXd G = U.array().tanh().matrix();    // contrast
    const MatrixXd Gp = 1.0 - G.array().square();    // contrast derivative
    MatrixXd W_fp = (G.transpose() * Z) / T - Gp.colwise().mean().asDiagonal() * W;
    W_fp = symmetric_decorrelate(W_fp);
    // Convergence is judged against the raw fixed-point iterate so a slow
    // drift cannot masquerade as a solution...
    delta = 1.0 - (W_fp * W.transpose()).diagonal().cwiseAbs().minCoeff();
    if (delta < tol) return W_fp;
    // ...but the step taken is damped (sign-aligned half step): the raw map
    // oscillates on phase-degenerate sources such as delay-embedded tonals
    // and Gaussian subspaces, while the damped map shares its fixed points.
    const VectorXd sign = (W_fp * W.transpose())
                              .diagonal()
                              .unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
    W = symmetric_decorrelate(0.5 * W + 0.5 * sign.asDiagonal() * W_fp);
  }
  throw IcaConvergenceError("fit_sources: FastICA did not converge", max_iters, delta);
}

} // namespace

SourceBank fit_sources(const MatrixXd& trajectories, const EmbeddingConfig& cfg) {
  cfg.validate();
  const Eigen::Index L = cfg.window_length;
  const Eigen::Index C = cfg.n_components;
  if (trajectories.cols() != L)
    throw InvalidInputError("fit_sources: trajectory width must equal window_length");
  if (trajectories.rows() < 10 * C)
    throw InvalidInputError("fit_sources: need at least 10 * n_components rows");

  const double T = static_cast<double>(trajectories.rows());
  const MatrixXd cov = trajectories.transpose() * trajectories / T;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  // keep the C leading eigenpairs (eigenvalues ascend)
  const MatrixXd E = eig.eigenvectors().rightCols(C).rowwise().reverse();
  const VectorXd d = eig.eigenvalues().tail(C).reverse().cwiseMax(1e-30);

  const MatrixXd whiten = E * d.cwiseSqrt().cwiseInverse().asDiagonal();  // L x C
  const MatrixXd color = E * d.cwiseSqrt().asDiagonal();                  // L x C
  const MatrixXd Z = trajectories * whiten;

  const MatrixXd W = fastica(Z, cfg.seed);  // C x C orthogonal

  SourceBank bank;
  bank.window_length = L;
  bank.config = cfg;
  bank.analysis = whiten * W.transpose();
  bank.synthesis = color * W.transpose();
  bank.mixing = bank.synthesis;
  for (Eigen::Index j = 0; j < C; ++j) {
    const double n = bank.mixing.col(j).norm();
    if (n > 0.0) bank.mixing.col(j) /= n;
  }

  // Classify each source time course by spectral flatness. Overlapping
  // trajectory rows act as an FIR filter that colors even white-noise
  // sources, so sample the course one row per window: noise decorrelates
  // back to flat while tonals stay tonal.
  const MatrixXd S = Z * W.transpose();  // T x C source time courses
  Eigen::Index stride = L;
  while (stride > 1 && S.rows() / stride < 128) stride /= 2;
  const Eigen::Index n_dec = (S.rows() + stride - 1) / stride;
  bank.signal_mask.resize(static_cast<size_t>(C));
  Eigen::Index seg = 64;
  while (seg * 2 <= std::min<Eigen::Index>(1024, n_dec)) seg *= 2;
  seg = std::min<Eigen::Index>(seg, n_dec);
  for (Eigen::Index j = 0; j < C; ++j) {
    VectorXd course(n_dec);
    for (Eigen::Index t = 0; t < n_dec; ++t) course[t] = S(t * stride, j);
    const ChannelSpectrum sp = welch_psd(course, seg, 0.5, 1.0);
    bank.signal_mask[static_cast<size_t>(j)] = spectral_flatness(sp.psd) <= cfg.flatness_threshold;
  }
  return bank;
}

VectorXd reconstruct(const VectorXd& channel, const SourceBank& bank,
                     const EmbeddingConfig& cfg) {
  cfg.validate();
  if (bank.window_length != cfg.window_length)
    throw InvalidInputError("reconstruct: bank window_length does not match config");
  if (bank.analysis.cols() != static_cast<Eigen::Index>(bank.signal_mask.size()))
    throw InvalidInputError("reconstruct: bank mask length mismatch");

  const Eigen::Index L = bank.window_length;
  const Eigen::Index n_sig = bank.n_signal();
  MatrixXd U(L, n_sig), B(L, n_sig);
  for (Eigen::Index j = 0, s = 0; j < bank.analysis.cols(); ++j) {
    if (!bank.signal_mask[static_cast<size_t>(j)]) continue;
    U.col(s) = bank.analysis.col(j);
    B.col(s) = bank.synthesis.col(j);
    ++s;
  }

  const MatrixXd traj = embed(channel, L, cfg.hop);
  const MatrixXd cleaned = (traj * U) * B.transpose();  // T x L

  VectorXd acc = VectorXd::Zero(channel.size());
  VectorXd count = VectorXd::Zero(channel.size());
  for (Eigen::Index t = 0; t < cleaned.rows(); ++t) {
    acc.segment(t * cfg.hop, L) += cleaned.row(t).transpose();
    count.segment(t * cfg.hop, L).array() += 1.0;
  }
  for (Eigen::Index i = 0; i < acc.size(); ++i)
    if (count[i] > 0.0) acc[i] /= count[i];
  if (!acc.allFinite()) throw std::runtime_error("reconstruct: non-finite output");
  return acc;
}

namespace {

void write_matrix(std::ostream& out, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) in >> m(i, j);
  in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  return m;
}

} // namespace

void save_source_bank(const SourceBank& bank, std::ostream& out,
                      const std::vector<std::string>& header_lines) {
  out.precision(17);
  out << "sonarscale-source-bank v1\n";
  for (const auto& line : header_lines) out << "# " << line << "\n";
  out << "window_length = " << bank.window_length << "\n";
  out << "n_components = " << bank.n_components() << "\n";
  out << "hop = " << bank.config.hop << "\n";
  out << "flatness_threshold = " << bank.config.flatness_threshold << "\n";
  out << "seed = " << bank.config.seed << "\n";
  out << "signal_mask =";
  for (bool b : bank.signal_mask) out << " " << (b ? 1 : 0);
  out << "\nanalysis:\n";
  write_matrix(out, bank.analysis);
  out << "synthesis:\n";
  write_matrix(out, bank.synthesis);
}

void save_source_bank(const SourceBank& bank, const std::string& path,
                      const std::vector<std::string>& header_lines) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  save_source_bank(bank, f, header_lines);
}

SourceBank load_source_bank(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line != "sonarscale-source-bank v1")
    throw std::runtime_error("not a source bank file");
  auto expect_kv = [&](const std::string& key) {
    do {
      std::getline(in, line);
    } while (in && !line.empty() && line[0] == '#');
    const std::string prefix = key + " = ";
    if (line.rfind(prefix, 0) != 0)
      throw std::runtime_error("source bank file: expected '" + key + "'");
    return line.substr(prefix.size());
  };
  SourceBank bank;
  bank.window_length = std::stoll(expect_kv("window_length"));
  const Eigen::Index C = std::stoll(expect_kv("n_components"));
  bank.config.window_length = bank.window_length;
  bank.config.n_components = C;
  bank.config.hop = std::stoll(expect_kv("hop"));
  bank.config.flatness_threshold = std::stod(expect_kv("flatness_threshold"));
  bank.config.seed = std::stoull(expect_kv("seed"));
  std::getline(in, line);
  if (line.rfind("signal_mask =", 0) != 0)
    throw std::runtime_error("source bank file: missing signal_mask");
  std::istringstream ms(line.substr(13));
  bank.signal_mask.resize(static_cast<size_t>(C));
  for (Eigen::Index j = 0; j < C; ++j) {
    int v = 0;
    ms >> v;
    bank.signal_mask[static_cast<size_t>(j)] = v != 0;
  }
  std::getline(in, line);
  if (line != "analysis:") throw std::runtime_error("source bank file: missing analysis");
  bank.analysis = read_matrix(in, bank.window_length, C);
  std::getline(in, line);
  if (line != "synthesis:") throw std::runtime_error("source bank file: missing synthesis");
  bank.synthesis = read_matrix(in, bank.window_length, C);
  if (!in) throw std::runtime_error("source bank file: truncated");
  bank.mixing = bank.synthesis;
  for (Eigen::Index j = 0; j < C; ++j) {
    const double n = bank.mixing.col(j).norm();
    if (n > 0.0) bank.mixing.col(j) /= n;
  }
  return bank;
}

SourceBank load_source_bank(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return load_source_bank(f);
}

} // namespace sonarscale
