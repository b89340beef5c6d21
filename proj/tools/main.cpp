#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "inembed/pipeline.hpp"

using namespace inembed;

namespace {

/// Raw override values: kept as strings so PipelineConfig::set does all the
/// parsing and every flag reports errors the same way the config file does.
struct Flags {
  std::string config;
  std::string seed;
  std::string out;
  std::string stages;
  std::string missing_ratio;
  std::string n_missing;
  std::string alpha;
  std::string beta;
  std::string epochs;
  std::string dim;
};

void add_common(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config,
                  "flat \"key = value\" configuration file");
  sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
  sub->add_option("--out", flags.out, "artifact directory");
  sub->add_option("--stages", flags.stages,
                  "comma-separated stage list override");
  sub->add_option("--missing-ratio", flags.missing_ratio,
                  "fraction of nodes to remove");
  sub->add_option("--n-missing", flags.n_missing,
                  "node count to remove (corrupt) or restore (complete)");
  sub->add_option("--alpha", flags.alpha, "cross-reconstruction loss weight");
  sub->add_option("--beta", flags.beta, "observed-row loss weight");
  sub->add_option("--epochs", flags.epochs, "embedding training epochs");
  sub->add_option("--dim", flags.dim, "embedding width per view");
}

/// File values first, then the subcommand's stage preset, then explicit
/// flags — so flags win, and --stages beats the preset.
PipelineConfig build_config(const CLI::App* sub, const Flags& flags,
                            const char* preset) {
  PipelineConfig config;
  if (sub->count("--config")) config = PipelineConfig::from_file(flags.config);
  if (preset) config.set("stages", preset);

  const std::vector<std::pair<const char*, const std::string*>> overrides{
      {"--seed", &flags.seed},
      {"--out", &flags.out},
      {"--stages", &flags.stages},
      {"--missing-ratio", &flags.missing_ratio},
      {"--n-missing", &flags.n_missing},
      {"--alpha", &flags.alpha},
      {"--beta", &flags.beta},
      {"--epochs", &flags.epochs},
      {"--dim", &flags.dim}};
  const std::vector<const char*> keys{
      "seed",        "out",        "stages",       "missing_ratio",
      "n_missing",   "embed.alpha", "embed.beta",  "embed.epochs",
      "embed.dim"};
  for (std::size_t i = 0; i < overrides.size(); ++i)
    if (sub->count(overrides[i].first))
      config.set(keys[i], *overrides[i].second);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Network completion and dual-view embedding: corrupt -> complete -> "
      "embed -> evaluate"};
  app.require_subcommand(1);

  Flags flags;
  CLI::App* corrupt = app.add_subcommand(
      "corrupt", "remove nodes and persist the masked graph");
  CLI::App* complete = app.add_subcommand(
      "complete", "fit the edge-probability model and restore missing nodes");
  CLI::App* embed = app.add_subcommand(
      "embed", "train the dual-view autoencoder on the recovered graph");
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "run the classification / link-prediction grids");
  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "run the configured stage list (default: all stages)");
  for (CLI::App* sub : {corrupt, complete, embed, evaluate, pipeline})
    add_common(sub, flags);

  std::vector<double> theta;
  int synth_k = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand(
      "synth", "sample a ground-truth graph from a 2x2 initiator");
  synth->add_option("--theta", theta, "initiator entries a b c d, each in (0,1)")
      ->expected(4)
      ->required();
  synth->add_option("--k", synth_k, "Kronecker power (nodes = 2^k)")
      ->required();
  synth->add_option("--seed", synth_seed, "sampling seed");
  synth->add_option("--out", synth_out, "output edge-list file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      write_synthetic_graph(theta, synth_k, synth_seed, synth_out);
      std::cout << "wrote " << synth_out << "\n";
      return 0;
    }

    const CLI::App* sub = nullptr;
    const char* preset = nullptr;
    if (corrupt->parsed()) sub = corrupt, preset = "corrupt";
    if (complete->parsed()) sub = complete, preset = "complete";
    if (embed->parsed()) sub = embed, preset = "embed";
    if (evaluate->parsed()) sub = evaluate, preset = "evaluate";
    if (pipeline->parsed()) sub = pipeline;

    const PipelineConfig config = build_config(sub, flags, preset);
    run_pipeline(config);
    std::cout << "artifacts in " << config.out << "\n";
    return 0;
  } catch (const StageError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
