#include "sonarscale/sim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "sonarscale/divergence.hpp"

namespace sonarscale {

Eigen::Index SimConfig::n_samples() const {
  return static_cast<Eigen::Index>(std::llround(duration_s * sample_rate_hz));
}

void SimConfig::validate() const {
  if (n_beams < 1) throw InvalidInputError("SimConfig: n_beams must be >= 1");
  if (!(sample_rate_hz > 0.0)) throw InvalidInputError("SimConfig: sample_rate_hz must be positive");
  if (!(duration_s > 0.0)) throw InvalidInputError("SimConfig: duration_s must be positive");
  if (!(noise_sigma >= 0.0)) throw InvalidInputError("SimConfig: noise_sigma must be non-negative");
  for (const auto& t : targets) {
    if (t.tonal_freqs_hz.size() != t.amplitudes.size())
      throw InvalidInputError("TargetSpec: tonal_freqs_hz and amplitudes must match");
    for (double f : t.tonal_freqs_hz)
      if (!(f > 0.0 && f < sample_rate_hz / 2.0))
        throw InvalidInputError("TargetSpec: tonal frequency outside (0, rate/2)");
    if (t.start_beam < 0.0 || t.start_beam > static_cast<double>(n_beams - 1) ||
        t.end_beam < 0.0 || t.end_beam > static_cast<double>(n_beams - 1))
      throw InvalidInputError("TargetSpec: beam track outside array");
    if (!(t.beam_sigma > 0.0)) throw InvalidInputError("TargetSpec: beam_sigma must be positive");
  }
}

SimConfig default_scenario() {
  SimConfig cfg;
  cfg.targets = {
      {{140.0, 300.0}, {1.0, 1.0}, 1.5, 1.5, 0.5},
      {{420.0, 525.0}, {1.0, 1.0}, 32.5, 32.5, 0.5},
      {{650.0, 760.0}, {1.0, 1.0}, 55.0, 55.0, 0.5},
  };
  // -5 dB per unit-amplitude tone: noise power = 0.5 * 10^0.5
  cfg.noise_sigma = std::sqrt(0.5 * std::pow(10.0, 0.5));
  return cfg;
}

namespace {

std::vector<std::string> echo_config(const SimConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  std::vector<std::string> lines;
  auto add = [&](const std::string& k, auto v) {
    os.str("");
    os << "simulate." << k << " = " << v;
    lines.push_back(os.str());
  };
  add("n_beams", cfg.n_beams);
  add("sample_rate_hz", cfg.sample_rate_hz);
  add("duration_s", cfg.duration_s);
  add("noise_sigma", cfg.noise_sigma);
  add("seed", cfg.seed);
  for (size_t i = 0; i < cfg.targets.size(); ++i) {
    const auto& t = cfg.targets[i];
    const std::string p = "target." + std::to_string(i + 1) + ".";
    os.str("");
    os << "simulate." << p << "freqs_hz =";
    for (double f : t.tonal_freqs_hz) os << " " << f;
    lines.push_back(os.str());
    os.str("");
    os << "simulate." << p << "amps =";
    for (double a : t.amplitudes) os << " " << a;
    lines.push_back(os.str());
    add(p + "start_beam", t.start_beam);
    add(p + "end_beam", t.end_beam);
    add(p + "beam_sigma", t.beam_sigma);
  }
  return lines;
}

MultichannelSignal simulate_impl(const SimConfig& cfg, bool with_noise) {
  cfg.validate();
  const Eigen::Index S = cfg.n_samples();
  const Eigen::Index B = cfg.n_beams;

  // phases: one draw per (target, tone), fixed order, independent of beams
  std::mt19937_64 phase_rng(cfg.seed);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::vector<std::vector<double>> phases;
  for (const auto& t : cfg.targets) {
    auto& row = phases.emplace_back();
    for (size_t j = 0; j < t.tonal_freqs_hz.size(); ++j) row.push_back(uphase(phase_rng));
  }

  MultichannelSignal out;
  out.sample_rate_hz = cfg.sample_rate_hz;
  out.seed = cfg.seed;
  out.config_echo = echo_config(cfg);
  out.data.setZero(B, S);

  const double dt = 1.0 / cfg.sample_rate_hz;
  for (Eigen::Index b = 0; b < B; ++b) {
    VectorXd beam = VectorXd::Zero(S);
    for (size_t ti = 0; ti < cfg.targets.size(); ++ti) {
      const auto& tg = cfg.targets[ti];
      for (Eigen::Index s = 0; s < S; ++s) {
        const double frac = S > 1 ? static_cast<double>(s) / static_cast<double>(S - 1) : 0.0;
        const double center = tg.start_beam + frac * (tg.end_beam - tg.start_beam);
        const double db = static_cast<double>(b) - center;
        const double g = std::exp(-db * db / (2.0 * tg.beam_sigma * tg.beam_sigma));
        if (g < 1e-12) continue;
        const double t = static_cast<double>(s) * dt;
        double v = 0.0;
        for (size_t j = 0; j < tg.tonal_freqs_hz.size(); ++j)
          v += tg.amplitudes[j] * std::sin(2.0 * M_PI * tg.tonal_freqs_hz[j] * t + phases[ti][j]);
        beam[s] += g * v;
      }
    }
    if (with_noise && cfg.noise_sigma > 0.0) {
      std::seed_seq sseq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                         static_cast<std::uint32_t>(b)};
      std::mt19937_64 noise_rng(sseq);
      std::normal_distribution<double> gauss(0.0, cfg.noise_sigma);
      for (Eigen::Index s = 0; s < S; ++s) beam[s] += gauss(noise_rng);
    }
    out.data.row(b) = beam.transpose();
  }
  return out;
}

} // namespace

MultichannelSignal simulate(const SimConfig& cfg) { return simulate_impl(cfg, true); }

MultichannelSignal simulate_clean(const SimConfig& cfg) { return simulate_impl(cfg, false); }

VectorXd snr_db(const MultichannelSignal& signal, const MultichannelSignal& clean) {
  if (signal.data.rows() != clean.data.rows() || signal.data.cols() != clean.data.cols())
    throw InvalidInputError("snr_db: shape mismatch");
  VectorXd out(signal.n_beams());
  for (Eigen::Index b = 0; b < signal.n_beams(); ++b) {
    const double sig_power = clean.data.row(b).squaredNorm();
    const double res_power = (signal.data.row(b) - clean.data.row(b)).squaredNorm();
    out[b] = res_power > 0.0 ? 10.0 * std::log10(sig_power / res_power)
                             : std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<Eigen::Index> target_beams(const SimConfig& cfg, double min_weight) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index b = 0; b < cfg.n_beams; ++b) {
    double best = 0.0;
    for (const auto& tg : cfg.targets) {
      // peak weight over the linear track: nearest point to b on [start, end]
      const double lo = std::min(tg.start_beam, tg.end_beam);
      const double hi = std::max(tg.start_beam, tg.end_beam);
      const double c = std::clamp(static_cast<double>(b), lo, hi);
      const double db = static_cast<double>(b) - c;
      best = std::max(best, std::exp(-db * db / (2.0 * tg.beam_sigma * tg.beam_sigma)));
    }
    if (best >= min_weight) out.push_back(b);
  }
  return out;
}

void save_signal(const MultichannelSignal& sig, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(17);
  f << "sonarscale-signal v1\n";
  f << "n_beams = " << sig.n_beams() << "\n";
  f << "n_samples = " << sig.n_samples() << "\n";
  f << "sample_rate_hz = " << sig.sample_rate_hz << "\n";
  f << "endianness = little\n";
  f << "seed = " << sig.seed << "\n";
  f << "config_hash = " << sig.config_hash << "\n";
  for (const auto& line : sig.config_echo) f << "cfg " << line << "\n";
  f << "data:\n";
  std::vector<float> row(static_cast<size_t>(sig.n_samples()));
  for (Eigen::Index b = 0; b < sig.n_beams(); ++b) {
    for (Eigen::Index s = 0; s < sig.n_samples(); ++s)
      row[static_cast<size_t>(s)] = static_cast<float>(sig.data(b, s));
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

MultichannelSignal load_signal(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (line != "sonarscale-signal v1") throw std::runtime_error("not a signal file: " + path);
  MultichannelSignal sig;
  Eigen::Index n_beams = 0, n_samples = 0;
  while (std::getline(f, line)) {
    if (line == "data:") break;
    if (line.rfind("cfg ", 0) == 0) {
      sig.config_echo.push_back(line.substr(4));
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw std::runtime_error("signal file: malformed header line");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 3);
    if (key == "n_beams") n_beams = std::stoll(val);
    else if (key == "n_samples") n_samples = std::stoll(val);
    else if (key == "sample_rate_hz") sig.sample_rate_hz = std::stod(val);
    else if (key == "seed") sig.seed = std::stoull(val);
    else if (key == "config_hash") sig.config_hash = val;
    else if (key == "endianness") {
      if (val != "little") throw std::runtime_error("signal file: unsupported endianness");
    } else throw std::runtime_error("signal file: unknown header key " + key);
  }
  if (n_beams < 1 || n_samples < 1) throw std::runtime_error("signal file: missing shape");
  sig.data.resize(n_beams, n_samples);
  std::vector<float> row(static_cast<size_t>(n_samples));
  for (Eigen::Index b = 0; b < n_beams; ++b) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!f) throw std::runtime_error("signal file: truncated data");
    for (Eigen::Index s = 0; s < n_samples; ++s)
      sig.data(b, s) = static_cast<double>(row[static_cast<size_t>(s)]);
  }
  return sig;
}

} // namespace sonarscale
