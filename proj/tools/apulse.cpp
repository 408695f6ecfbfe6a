#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apulse/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"apulse: active level set estimation with transferred GP priors"};
  app.require_subcommand(1);

  apulse::CliOverrides overrides;
  std::string config_path;
  std::string dataset_path;
  std::uint64_t selfcheck_seed = 0;
  std::vector<double> kappas;

  const auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config file")->required();
    cmd->add_option("--out", overrides.out, "output directory (else $APULSE_OUT, else config)");
    cmd->add_option("--seed", overrides.seed, "base seed override");
    cmd->add_option("--repeats", overrides.repeats, "repeat-count override");
    cmd->add_flag("--paper-scale", overrides.paper_scale,
                  "30 repeats and full per-problem budgets");
    cmd->add_option("--workers", overrides.workers,
                    "worker threads (default: available parallelism)");
  };

  CLI::App* run = app.add_subcommand("run", "run the configured experiment");
  add_run_flags(run);

  CLI::App* sweep =
      app.add_subcommand("sweep-kappa", "similarity/iteration table over kappa");
  add_run_flags(sweep);
  sweep->add_option("--kappas", kappas, "comma-separated kappa values")
      ->required()
      ->delimiter(',');

  CLI::App* selfcheck =
      app.add_subcommand("selfcheck", "run the internal verification suites");
  selfcheck->add_option("--seed", selfcheck_seed, "suite seed");

  CLI::App* ingest =
      app.add_subcommand("ingest-check", "validate a grid dataset CSV");
  ingest->add_option("dataset", dataset_path, "dataset CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? apulse::kExitOk : apulse::kExitValidation;
  }

  try {
    if (selfcheck->parsed()) return apulse::cmd_selfcheck(selfcheck_seed);
    if (ingest->parsed()) return apulse::cmd_ingest_check(dataset_path);

    apulse::ExperimentConfig config;
    try {
      config = apulse::parse_config(config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return apulse::kExitValidation;
    }
    if (run->parsed()) return apulse::cmd_run(config, overrides);
    return apulse::cmd_sweep_kappa(config, overrides, kappas);
  } catch (const apulse::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return apulse::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return apulse::kExitRuntime;
  }
}
