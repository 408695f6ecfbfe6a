#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apulse/config.hpp"

namespace apulse {

// CLI-level overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::string> out;  // --out, else $APULSE_OUT, else config
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  bool paper_scale = false;  // repeats=30 + full per-problem budgets
  int workers = 0;           // <=0 => hardware concurrency
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

ExperimentConfig apply_overrides(ExperimentConfig config, const CliOverrides& o);

// Runs every configured mode x seed, writes per-mode curve CSVs, a combined
// comparison CSV, a JSON summary, and an SVG chart into the output directory.
// On failure, files already produced are renamed with a .partial suffix and
// the exit code is nonzero.
int cmd_run(const ExperimentConfig& config, const CliOverrides& overrides);

// Kappa sweep: for each kappa, prior-vs-target label similarity plus
// mean/median iterations-to-target per mode ("NA" when not reached).
int cmd_sweep_kappa(const ExperimentConfig& config, const CliOverrides& overrides,
                    const std::vector<double>& kappas);

// Theorem-1 property suite + Eq-4 identity + GP-vs-naive oracle + kernel PSD.
int cmd_selfcheck(std::uint64_t seed);

// Validates a grid dataset CSV and reports n, d, and the value range.
int cmd_ingest_check(const std::string& path);

}  // namespace apulse
