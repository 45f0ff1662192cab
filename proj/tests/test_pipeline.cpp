#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <stdexcept>

#include "sonarscale/pipeline.hpp"
#include "sonarscale/sim.hpp"

using namespace sonarscale;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig =
    "seed = 1\n"
    "simulate.n_beams = 8\n"
    "simulate.duration_s = 2\n"
    "simulate.noise_sigma = 1\n"
    "simulate.target.1.freqs_hz = 300 500\n"
    "simulate.target.1.start_beam = 3\n"
    "train.max_iters = 30\n"
    "cluster.segment_length = 512\n";

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("simulate stage writes the signal container") {
  TempDir dir("sonarscale_test_sim_stage");
  RunOptions opts;
  opts.out_dir = dir.path.string();
  const auto summaries = run_stage("simulate", ConfigMap::parse_string(kSmallConfig), opts);
  REQUIRE(summaries.size() == 1);
  CHECK(summaries[0].find("beams=8") != std::string::npos);
  CHECK(summaries[0].find("samples=8192") != std::string::npos);

  const MultichannelSignal sig = load_signal((dir.path / "signal.bin").string());
  CHECK(sig.n_beams() == 8);
  CHECK(sig.n_samples() == 8192);
  CHECK(fs::exists(dir.path / "clean.bin"));
}

TEST_CASE("unknown config keys abort before any stage runs") {
  RunOptions opts;
  opts.out_dir = (fs::temp_directory_path() / "sonarscale_test_badkey").string();
  CHECK_THROWS_WITH_AS(
      run_stage("simulate", ConfigMap::parse_string("simulate.beams = 8"), opts),
      doctest::Contains("simulate.beams"), std::runtime_error);
  CHECK_THROWS(run_stage("frobnicate", ConfigMap::parse_string(""), opts));
}

TEST_CASE("downstream stages verify the upstream config hash") {
  TempDir dir("sonarscale_test_hash");
  RunOptions opts;
  opts.out_dir = dir.path.string();
  run_stage("simulate", ConfigMap::parse_string(kSmallConfig), opts);

  // same config consumes cleanly
  ConfigMap same = ConfigMap::parse_string(kSmallConfig);
  same.set("cluster.input", "raw");
  CHECK_NOTHROW(run_stage("cluster", same, opts));

  // a changed simulate section is rejected...
  ConfigMap changed = same;
  changed.set("simulate.noise_sigma", "2");
  CHECK_THROWS_AS(run_stage("cluster", changed, opts), ConfigMismatchError);

  // ...unless the override is set
  RunOptions forced = opts;
  forced.allow_config_mismatch = true;
  CHECK_NOTHROW(run_stage("cluster", changed, forced));
}

TEST_CASE("train on a toy signal with an exact low-dimensional embedding") {
  TempDir dir("sonarscale_test_toytrain");
  fs::create_directories(dir.path);

  ConfigMap cfg = ConfigMap::parse_string(
      "seed = 2\n"
      "train.input = raw\n"
      "train.max_iters = 50\n");

  // three 5-beam observations lying (as any 3 points do) in a 2-D affine plane
  MultichannelSignal toy;
  toy.data.resize(5, 48);  // stride 16 keeps columns 0, 16, 32
  toy.data.setZero();
  toy.data.col(0) << 1, 0, 2, -1, 0.5;
  toy.data.col(16) << 0, 1, -1, 2, 1.5;
  toy.data.col(32) << 2, 2, 0.5, 0.5, -1;
  for (Eigen::Index t = 0; t < 48; ++t)
    if (t % 16 != 0) toy.data.col(t) = toy.data.col((t / 16) * 16);
  toy.sample_rate_hz = 48.0;  // train.seconds=1 covers all 48 samples
  toy.config_hash = stage_config_hash(cfg, "simulate");
  save_signal(toy, (dir.path / "signal.bin").string());

  RunOptions opts;
  opts.out_dir = dir.path.string();
  const auto summaries = run_stage("train", cfg, opts);
  REQUIRE(summaries.size() == 1);
  const auto pos = summaries[0].find("final_stress=");
  REQUIRE(pos != std::string::npos);
  const double final_stress = std::stod(summaries[0].substr(pos + 13));
  CHECK(final_stress <= 1e-6);
  CHECK(fs::exists(dir.path / "model.txt"));
  CHECK(fs::exists(dir.path / "coords.csv"));
  CHECK(fs::exists(dir.path / "stress_history.csv"));
}

TEST_CASE("fixed-seed pipeline runs are byte-identical") {
  TempDir a("sonarscale_test_det_a"), b("sonarscale_test_det_b");
  RunOptions oa, ob;
  oa.out_dir = a.path.string();
  ob.out_dir = b.path.string();
  run_stage("pipeline", ConfigMap::parse_string(kSmallConfig), oa);
  run_stage("pipeline", ConfigMap::parse_string(kSmallConfig), ob);
  for (const char* name : {"coords.csv", "stress_history.csv", "projected.csv", "cluster.csv"}) {
    CAPTURE(name);
    CHECK(slurp((a.path / name).string()) == slurp((b.path / name).string()));
  }
}

TEST_CASE("seed override changes artifacts") {
  TempDir a("sonarscale_test_seed_a"), b("sonarscale_test_seed_b");
  RunOptions oa, ob;
  oa.out_dir = a.path.string();
  ob.out_dir = b.path.string();
  ob.seed = 99;
  run_stage("simulate", ConfigMap::parse_string(kSmallConfig), oa);
  run_stage("simulate", ConfigMap::parse_string(kSmallConfig), ob);
  const MultichannelSignal sa = load_signal((a.path / "signal.bin").string());
  const MultichannelSignal sb = load_signal((b.path / "signal.bin").string());
  CHECK(sa.data != sb.data);
  CHECK(sa.config_hash != sb.config_hash);
}
