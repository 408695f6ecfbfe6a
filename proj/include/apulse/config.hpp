#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apulse/acquisition.hpp"
#include "apulse/engine.hpp"
#include "apulse/kernel.hpp"
#include "apulse/transfer.hpp"

namespace apulse {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Problem selector: exactly one of `name` (synthetic) or `dataset` (CSV path).
struct ProblemSelector {
  std::string name;     // bird | mc3d | mishra03
  double kappa = -1.0;  // <0 => per-problem default target kappa
  std::string dataset;
  std::string prior_dataset;  // optional source CSV for dataset tasks
  std::optional<double> threshold;
  std::optional<Direction> direction;
  std::optional<int> budget;

  bool is_dataset() const { return !dataset.empty(); }
  bool operator==(const ProblemSelector&) const = default;
};

struct ExperimentConfig {
  ProblemSelector problem;
  std::vector<TransferMode> modes = {TransferMode::Scratch, TransferMode::Vanilla,
                                     TransferMode::APLSE};
  AcquisitionSpec acq;
  KernelFamily kernel = KernelFamily::Matern52;
  bool fit_noise = false;
  double noise_sd = 0.1;
  int refit_every = 1;
  int refit_warmup = 30;
  double beta = 3.0;
  int repeats = 30;
  std::uint64_t seed = 0;
  std::string out_dir = "apulse_out";
  double f1_target = 0.8;

  bool operator==(const ExperimentConfig&) const = default;
};

// Strict schema: unknown keys/sections, type mismatches, and missing required
// keys raise ConfigError naming the key path (e.g. "gp.refit_every").
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");

// Canonical text with every effective key explicit; re-parsing it yields an
// identical ExperimentConfig.
std::string emit_effective_config(const ExperimentConfig& config);

// Materializes the configured problem, its per-seed prior factory, and the
// gp/acquisition settings.
struct MaterializedExperiment {
  Problem problem;
  PriorFactory prior_factory;
  GPConfig gp;
  AcquisitionSpec acq;
};
MaterializedExperiment materialize(const ExperimentConfig& config);

}  // namespace apulse
