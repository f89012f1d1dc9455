#include <string>

#include <CLI11.hpp>

#include "reachgen/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"reach dataset generation, training, and evaluation"};
  app.require_subcommand(1);

  reachgen::AppOptions opts;
  std::string config_path, method_str, out_dir;
  std::uint64_t seed = 0;

  const char* commands[] = {"gen-data", "pretrain",     "train-decoder",
                            "eval",     "export-plots", "pipeline",
                            "validate-config"};
  const char* descriptions[] = {
      "sample reach pairs and label them with activation trajectories",
      "greedy layer-wise autoencoder pretraining on the train split",
      "retrain the decoder on reach endpoints",
      "activation RMS and forward-simulated endpoint errors",
      "write figure-ready activation and hand-path CSVs",
      "run every stage for both the ID and OC conditions",
      "check a config file and report diagnostics"};

  for (int i = 0; i < 7; ++i) {
    CLI::App* sub = app.add_subcommand(commands[i], descriptions[i]);
    sub->add_option("--config", config_path, "config file (JSON)");
    sub->add_option("--seed", seed, "override dataset and training seeds")
        ->trigger_on_parse();
    sub->add_option("--method", method_str, "condition: id or oc")
        ->check(CLI::IsMember({"id", "oc"}));
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", opts.threads, "worker thread cap")
        ->check(CLI::PositiveNumber);
    sub->callback([&, i, sub] {
      opts.command = commands[i];
      if (!config_path.empty()) opts.config_path = config_path;
      if (sub->count("--seed")) opts.seed = seed;
      if (!method_str.empty())
        opts.method = reachgen::method_from_string(method_str);
      if (!out_dir.empty()) opts.out_dir = out_dir;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return reachgen::run_command(opts);
}
