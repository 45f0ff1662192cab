#include "sonarscale/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "sonarscale/cluster.hpp"
#include "sonarscale/sim.hpp"
#include "sonarscale/subspace.hpp"
#include "sonarscale/trainer.hpp"

namespace sonarscale {

namespace fs = std::filesystem;

namespace {

std::uint64_t global_seed(const ConfigMap& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("seed", 0));
}

std::uint64_t stage_seed(const ConfigMap& cfg, const std::string& stage) {
  if (cfg.has(stage + ".seed"))
    return static_cast<std::uint64_t>(cfg.get_int(stage + ".seed", 0));
  std::uint64_t h = global_seed(cfg) ^ 0x5DEECE66Dull;
  for (char c : stage) h = h * 1099511628211ull + static_cast<unsigned char>(c);
  return h;
}

SimConfig sim_config_from(const ConfigMap& cfg) {
  SimConfig sim = default_scenario();
  sim.n_beams = cfg.get_int("simulate.n_beams", sim.n_beams);
  sim.sample_rate_hz = cfg.get_double("simulate.sample_rate_hz", sim.sample_rate_hz);
  sim.duration_s = cfg.get_double("simulate.duration_s", sim.duration_s);
  sim.noise_sigma = cfg.get_double("simulate.noise_sigma", sim.noise_sigma);
  sim.seed = stage_seed(cfg, "simulate");
  const auto target_keys = cfg.keys_with_prefix("simulate.target.");
  if (!target_keys.empty()) {
    sim.targets.clear();
    for (int i = 1;; ++i) {
      const std::string p = "simulate.target." + std::to_string(i) + ".";
      if (!cfg.has(p + "freqs_hz")) break;
      TargetSpec t;
      t.tonal_freqs_hz = cfg.get_doubles(p + "freqs_hz");
      t.amplitudes = cfg.get_doubles(p + "amps");
      if (t.amplitudes.empty()) t.amplitudes.assign(t.tonal_freqs_hz.size(), 1.0);
      t.start_beam = cfg.get_double(p + "start_beam", 0.0);
      t.end_beam = cfg.get_double(p + "end_beam", t.start_beam);
      t.beam_sigma = cfg.get_double(p + "beam_sigma", 0.5);
      sim.targets.push_back(std::move(t));
    }
  }
  return sim;
}

EmbeddingConfig filter_config_from(const ConfigMap& cfg) {
  EmbeddingConfig e;
  e.window_length = cfg.get_int("filter.window_length", 64);
  e.hop = cfg.get_int("filter.hop", 1);
  e.n_components = cfg.get_int("filter.n_components", 16);
  e.flatness_threshold = cfg.get_double("filter.flatness_threshold", 0.5);
  e.seed = stage_seed(cfg, "filter");
  return e;
}

DissimilarityMeasure parse_measure(const std::string& name, const std::string& flag) {
  DissimilarityMeasure m;
  if (name == "euclidean") m.kind = MeasureKind::Euclidean;
  else if (name == "sqeuclidean") m.kind = MeasureKind::SquaredEuclidean;
  else if (name == "kl") {
    m.kind = MeasureKind::Bregman;
    m.generator.kind = GeneratorKind::ShannonEntropyBits;
  } else if (name == "gaussian-kl") m.kind = MeasureKind::GaussianKLOneSided;
  else throw std::runtime_error(flag + ": unknown measure '" + name + "'");
  return m;
}

DeviationKind parse_deviation(const std::string& name) {
  if (name == "squared") return DeviationKind::SquaredError;
  if (name == "bregman-xlogx") return DeviationKind::BregmanXLogX;
  throw std::runtime_error("train.deviation: unknown value '" + name + "'");
}

void check_hash(const std::string& artifact, const std::string& found,
                const std::string& expected, bool allow) {
  if (found == expected) return;
  const std::string msg = artifact + ": config hash mismatch (artifact " + found +
                          ", current config " + expected + ")";
  if (!allow) throw ConfigMismatchError(msg);
  std::cerr << "warning: " << msg << " (override in effect)\n";
}

std::string upstream_of(const ConfigMap& cfg, const std::string& stage) {
  if (stage == "filter") return "simulate";
  if (stage == "train" || stage == "cluster")
    return cfg.get(stage + ".input", "filtered") == "raw" ? "simulate" : "filter";
  if (stage == "project") return "train";
  return "";
}

std::vector<std::string> provenance_lines(const ConfigMap& cfg, const std::string& stage) {
  std::vector<std::string> lines;
  lines.push_back("config_hash = " + stage_config_hash(cfg, stage));
  lines.push_back("seed = " + std::to_string(stage_seed(cfg, stage)));
  for (const auto& l : cfg.section(stage + ".")) lines.push_back("cfg " + l);
  return lines;
}

std::string hash_from_comment_header(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(f, line);  // magic
  while (std::getline(f, line) && !line.empty() && line[0] == '#') {
    const std::string key = "# config_hash = ";
    if (line.rfind(key, 0) == 0) return line.substr(key.size());
  }
  return "";
}

struct CsvWriter {
  std::ofstream f;
  explicit CsvWriter(const std::string& path, const std::vector<std::string>& provenance) {
    f.open(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.precision(17);
    for (const auto& l : provenance) f << "# " << l << "\n";
  }
};

std::string input_signal_path(const ConfigMap& cfg, const std::string& stage,
                              const std::string& out_dir) {
  const bool raw = cfg.get(stage + ".input", "filtered") == "raw";
  return out_dir + "/" + (raw ? "signal.bin" : "filtered.bin");
}

std::string run_simulate(const ConfigMap& cfg, const RunOptions& opts) {
  const SimConfig sim = sim_config_from(cfg);
  MultichannelSignal noisy = simulate(sim);
  MultichannelSignal clean = simulate_clean(sim);
  const std::string h = stage_config_hash(cfg, "simulate");
  noisy.config_hash = h;
  clean.config_hash = h;
  save_signal(noisy, opts.out_dir + "/signal.bin");
  save_signal(clean, opts.out_dir + "/clean.bin");
  std::ostringstream os;
  os << "simulate: beams=" << noisy.n_beams() << " samples=" << noisy.n_samples()
     << " targets=" << sim.targets.size() << " seed=" << sim.seed;
  return os.str();
}

std::string run_filter(const ConfigMap& cfg, const RunOptions& opts) {
  MultichannelSignal sig = load_signal(opts.out_dir + "/signal.bin");
  check_hash("signal.bin", sig.config_hash, stage_config_hash(cfg, "simulate"),
             opts.allow_config_mismatch);
  EmbeddingConfig ecfg = filter_config_from(cfg);
  const double train_seconds = cfg.get_double("filter.train_seconds", 2.0);
  const Eigen::Index fit_hop = cfg.get_int("filter.fit_hop", 2);
  const Eigen::Index fit_samples =
      std::min<Eigen::Index>(sig.n_samples(),
                             static_cast<Eigen::Index>(train_seconds * sig.sample_rate_hz));

  const Eigen::Index rows_per_chan = (fit_samples - ecfg.window_length) / fit_hop + 1;
  MatrixXd stacked(rows_per_chan * sig.n_beams(), ecfg.window_length);
  for (Eigen::Index b = 0; b < sig.n_beams(); ++b)
    stacked.middleRows(b * rows_per_chan, rows_per_chan) =
        embed(sig.data.row(b).head(fit_samples).transpose(), ecfg.window_length, fit_hop);
  const SourceBank bank = fit_sources(stacked, ecfg);
  save_source_bank(bank, opts.out_dir + "/source_bank.txt", provenance_lines(cfg, "filter"));

  MultichannelSignal filtered = sig;
  filtered.config_hash = stage_config_hash(cfg, "filter");
  for (Eigen::Index b = 0; b < sig.n_beams(); ++b)
    filtered.data.row(b) = reconstruct(sig.data.row(b).transpose(), bank, ecfg).transpose();
  save_signal(filtered, opts.out_dir + "/filtered.bin");

  std::ostringstream os;
  os << "filter: signal_sources=" << bank.n_signal() << "/" << bank.n_components()
     << " window=" << ecfg.window_length;
  return os.str();
}

TrainingSet training_set_from_signal(const ConfigMap& cfg, const MultichannelSignal& sig,
                                     const std::string& stage) {
  const double seconds = cfg.get_double("train.seconds", 1.0);
  const Eigen::Index stride = std::max<long long>(1, cfg.get_int(stage + ".time_stride",
                                                                 stage == "train" ? 16 : 1));
  const Eigen::Index limit =
      stage == "train"
          ? std::min<Eigen::Index>(sig.n_samples(),
                                   static_cast<Eigen::Index>(seconds * sig.sample_rate_hz))
          : sig.n_samples();
  TrainingSet set;
  const Eigen::Index P = (limit + stride - 1) / stride;
  set.X.resize(P, sig.n_beams());
  for (Eigen::Index i = 0; i < P; ++i) set.X.row(i) = sig.data.col(i * stride).transpose();
  if (cfg.get_bool("train.gaussian_uncertainty", false)) {
    set.variances.resize(P);
    for (Eigen::Index i = 0; i < P; ++i) {
      const auto row = set.X.row(i);
      const double mean = row.mean();
      set.variances[i] =
          std::max((row.array() - mean).square().sum() / static_cast<double>(row.size()), 1e-12);
    }
  }
  return set;
}

StressConfig stress_config_from(const ConfigMap& cfg) {
  StressConfig sc;
  sc.input_measure = parse_measure(cfg.get("train.measure", "euclidean"), "train.measure");
  sc.latent_measure =
      parse_measure(cfg.get("train.latent_measure", "euclidean"), "train.latent_measure");
  sc.deviation = parse_deviation(cfg.get("train.deviation", "squared"));
  sc.max_iters = static_cast<int>(cfg.get_int("train.max_iters", 200));
  sc.step_size = cfg.get_double("train.step_size", 1e-3);
  sc.tolerance = cfg.get_double("train.tolerance", 1e-8);
  sc.seed = stage_seed(cfg, "train");
  sc.max_pairs = static_cast<std::size_t>(cfg.get_int("train.max_pairs", 0));
  return sc;
}

std::string run_train(const ConfigMap& cfg, const RunOptions& opts) {
  const std::string in_path = input_signal_path(cfg, "train", opts.out_dir);
  MultichannelSignal sig = load_signal(in_path);
  check_hash(in_path, sig.config_hash, stage_config_hash(cfg, upstream_of(cfg, "train")),
             opts.allow_config_mismatch);

  const TrainingSet set = training_set_from_signal(cfg, sig, "train");
  StressConfig sc = stress_config_from(cfg);
  if (sc.max_pairs == 0 && set.X.rows() > 1024) sc.max_pairs = 131072;

  const Eigen::Index m = cfg.get_int("train.latent_dim", 2);
  const Eigen::Index K = cfg.get_int("train.n_centers", 0);
  const RbfModel init =
      init_rbf(set.X, m, K, sc.seed, pca_projection(set.X, m));
  const TrainedProjection result = train(set, sc, init);

  const auto prov = provenance_lines(cfg, "train");
  save_rbf_model(result.model, opts.out_dir + "/model.txt", prov);

  CsvWriter coords(opts.out_dir + "/coords.csv", prov);
  coords.f << "point";
  for (Eigen::Index l = 0; l < m; ++l) coords.f << ",y" << l + 1;
  if (result.latent_variances) coords.f << ",variance";
  coords.f << "\n";
  for (Eigen::Index p = 0; p < result.latent_points.rows(); ++p) {
    coords.f << p;
    for (Eigen::Index l = 0; l < m; ++l) coords.f << "," << result.latent_points(p, l);
    if (result.latent_variances) coords.f << "," << (*result.latent_variances)[p];
    coords.f << "\n";
  }

  CsvWriter hist(opts.out_dir + "/stress_history.csv", prov);
  hist.f << "iteration,stress\n";
  for (size_t i = 0; i < result.stress_history.size(); ++i)
    hist.f << i << "," << result.stress_history[i] << "\n";

  if (m >= 2)
    write_scatter_svg(result.latent_points, {}, opts.out_dir + "/latent.svg",
                      "latent projection");

  std::ostringstream os;
  os.precision(6);
  os << "train: P=" << set.X.rows() << " K=" << result.model.n_centers()
     << " iters=" << result.stress_history.size() - 1
     << " final_stress=" << result.stress_history.back();
  return os.str();
}

std::string run_project(const ConfigMap& cfg, const RunOptions& opts) {
  const std::string model_path = opts.out_dir + "/model.txt";
  check_hash("model.txt", hash_from_comment_header(model_path),
             stage_config_hash(cfg, "train"), opts.allow_config_mismatch);
  const RbfModel model = load_rbf_model(model_path);

  const std::string in_path = input_signal_path(cfg, "train", opts.out_dir);
  MultichannelSignal sig = load_signal(in_path);
  ConfigMap proj_cfg = cfg;
  const TrainingSet set = training_set_from_signal(proj_cfg, sig, "project");
  const Projection proj = project(model, set);

  CsvWriter out(opts.out_dir + "/projected.csv", provenance_lines(cfg, "project"));
  out.f << "point";
  for (Eigen::Index l = 0; l < model.latent_dim(); ++l) out.f << ",y" << l + 1;
  if (proj.latent_variances) out.f << ",variance";
  out.f << "\n";
  for (Eigen::Index p = 0; p < proj.latent_points.rows(); ++p) {
    out.f << p;
    for (Eigen::Index l = 0; l < model.latent_dim(); ++l)
      out.f << "," << proj.latent_points(p, l);
    if (proj.latent_variances) out.f << "," << (*proj.latent_variances)[p];
    out.f << "\n";
  }
  std::ostringstream os;
  os << "project: points=" << proj.latent_points.rows() << " latent_dim=" << model.latent_dim();
  return os.str();
}

std::string run_cluster(const ConfigMap& cfg, const RunOptions& opts) {
  const std::string in_path = input_signal_path(cfg, "cluster", opts.out_dir);
  MultichannelSignal sig = load_signal(in_path);
  check_hash(in_path, sig.config_hash, stage_config_hash(cfg, upstream_of(cfg, "cluster")),
             opts.allow_config_mismatch);

  const Eigen::Index seg = cfg.get_int("cluster.segment_length", 1024);
  const double overlap = cfg.get_double("cluster.overlap_fraction", 0.5);
  const std::string measure_name = cfg.get("cluster.measure", "symkl");
  SpectrumMeasure measure;
  if (measure_name == "symkl") measure = SpectrumMeasure::SymmetrizedKL;
  else if (measure_name == "euclidean") measure = SpectrumMeasure::Euclidean;
  else throw std::runtime_error("cluster.measure: unknown value '" + measure_name + "'");

  const Eigen::Index n = sig.n_beams();
  std::vector<ChannelSpectrum> spectra;
  spectra.reserve(static_cast<size_t>(n));
  for (Eigen::Index b = 0; b < n; ++b)
    spectra.push_back(welch_psd(sig.data.row(b).transpose(), seg, overlap,
                                sig.sample_rate_hz, static_cast<int>(b)));

  MatrixXd dissim = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      dissim(i, j) = dissim(j, i) =
          spectrum_dissimilarity(spectra[static_cast<size_t>(i)],
                                 spectra[static_cast<size_t>(j)], measure);

  Eigen::Index k = cfg.get_int("cluster.k", 0);
  if (k <= 0) k = static_cast<Eigen::Index>(std::ceil(std::sqrt(static_cast<double>(n))));
  const auto prototypes = modeseek(dissim, k);
  const auto rep = dissimilarity_representation(spectra, prototypes, measure);
  // On the default scenario target beams score z > 250 while plain noise
  // beams stay below ~25; 50 splits the gap with an order of magnitude of
  // margin on both sides.
  const double z_threshold = cfg.get_double("cluster.z_threshold", 50.0);
  const auto flagged = flag_outlier_beams(rep, z_threshold);

  const auto prov = provenance_lines(cfg, "cluster");
  CsvWriter out(opts.out_dir + "/cluster.csv", prov);
  out.f << "channel";
  for (size_t j = 0; j < prototypes.size(); ++j) out.f << ",d" << j + 1;
  out.f << ",flagged\n";
  std::set<Eigen::Index> flag_set(flagged.begin(), flagged.end());
  for (Eigen::Index p = 0; p < n; ++p) {
    out.f << p;
    for (Eigen::Index j = 0; j < rep.coords.cols(); ++j) out.f << "," << rep.coords(p, j);
    out.f << "," << (flag_set.count(p) ? 1 : 0) << "\n";
  }

  MatrixXd plot = rep.coords.cols() > 3 ? rep.coords.leftCols(3) : rep.coords;
  if (plot.cols() >= 2)
    write_scatter_svg(plot, flagged, opts.out_dir + "/cluster.svg",
                      "channel dissimilarity representation");

  std::ostringstream os;
  os << "cluster: prototypes=[";
  for (size_t j = 0; j < prototypes.size(); ++j) os << (j ? " " : "") << prototypes[j];
  os << "] flagged=[";
  for (size_t j = 0; j < flagged.size(); ++j) os << (j ? " " : "") << flagged[j];
  os << "]";
  return os.str();
}

} // namespace

std::string stage_config_hash(const ConfigMap& cfg, const std::string& stage) {
  std::vector<std::string> lines = cfg.section(stage + ".");
  lines.push_back("seed = " + std::to_string(stage_seed(cfg, stage)));
  const std::string up = upstream_of(cfg, stage);
  if (!up.empty()) lines.push_back("upstream = " + stage_config_hash(cfg, up));
  return fnv1a_hex(lines);
}

std::vector<std::string> run_stage(const std::string& subcommand, ConfigMap cfg,
                                   const RunOptions& opts) {
  if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
  if (opts.measure) cfg.set("train.measure", *opts.measure);
  if (opts.deviation) cfg.set("train.deviation", *opts.deviation);
  if (opts.latent_dim) cfg.set("train.latent_dim", std::to_string(*opts.latent_dim));
  cfg.validate_keys();
  fs::create_directories(opts.out_dir);

  std::vector<std::string> stages;
  if (subcommand == "pipeline")
    stages = {"simulate", "filter", "train", "project", "cluster"};
  else if (subcommand == "simulate" || subcommand == "filter" || subcommand == "train" ||
           subcommand == "project" || subcommand == "cluster")
    stages = {subcommand};
  else
    throw std::runtime_error("unknown subcommand: " + subcommand);

  std::vector<std::string> summaries;
  for (const auto& stage : stages) {
    std::string summary;
    try {
      if (stage == "simulate") summary = run_simulate(cfg, opts);
      else if (stage == "filter") summary = run_filter(cfg, opts);
      else if (stage == "train") summary = run_train(cfg, opts);
      else if (stage == "project") summary = run_project(cfg, opts);
      else summary = run_cluster(cfg, opts);
    } catch (const ConfigMismatchError&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + stage + " failed: " + e.what());
    }
    std::cout << summary << "\n";
    summaries.push_back(std::move(summary));
  }
  return summaries;
}

} // namespace sonarscale
