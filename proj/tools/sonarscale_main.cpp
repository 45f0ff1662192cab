#include <CLI11.hpp>
#include <iostream>

#include "sonarscale/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dissimilarity-driven sonar beam analysis pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  sonarscale::RunOptions opts;
  std::uint64_t seed = 0;
  std::string measure, deviation;
  int latent_dim = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value configuration file");
    sub->add_option("--out", opts.out_dir, "artifact output directory")->capture_default_str();
    sub->add_option("--seed", seed, "global seed override");
    sub->add_option("--measure", measure, "input dissimilarity measure")
        ->check(CLI::IsMember({"euclidean", "sqeuclidean", "kl", "gaussian-kl"}));
    sub->add_option("--deviation", deviation, "stress deviation")
        ->check(CLI::IsMember({"squared", "bregman-xlogx"}));
    sub->add_option("--latent-dim", latent_dim, "latent dimensionality")
        ->check(CLI::Range(1, 3));
    sub->add_flag("--allow-config-mismatch", opts.allow_config_mismatch,
                  "consume artifacts whose config hash differs from the current config");
  };
  for (const char* name : {"simulate", "filter", "train", "project", "cluster", "pipeline"})
    add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);

  const std::string subcommand = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--measure")) opts.measure = measure;
  if (sub->count("--deviation")) opts.deviation = deviation;
  if (sub->count("--latent-dim")) opts.latent_dim = latent_dim;

  try {
    sonarscale::ConfigMap cfg;
    if (!config_path.empty()) cfg = sonarscale::ConfigMap::parse_file(config_path);
    sonarscale::run_stage(subcommand, std::move(cfg), opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
