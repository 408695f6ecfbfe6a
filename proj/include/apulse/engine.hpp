#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apulse/acquisition.hpp"
#include "apulse/gp.hpp"
#include "apulse/kernel.hpp"
#include "apulse/prior.hpp"
#include "apulse/transfer.hpp"

namespace apulse {

enum class Direction { Super, Sub };

enum class Label : std::uint8_t { InSet, OutOfSet, Unclassified };

struct Problem {
  std::function<double(const Eigen::VectorXd&)> oracle;  // noiseless f
  double noise_sd = 0.1;
  double h = 0.0;
  Direction direction = Direction::Super;
  Eigen::MatrixXd candidate_grid;
  Eigen::MatrixXd eval_grid;
  std::vector<Label> true_labels;  // on eval_grid
  int budget_T = 1;
  std::string name;
};

void validate(const Problem& problem);

// beta-rule: mu - beta*sigma > h => in the superlevel set, mu + beta*sigma < h
// => out, else Unclassified. Sub problems swap the set roles. The rule only
// abstains relative to hard_classify, never flips.
Label classify_with_confidence(double mu, double sigma, double h, double beta,
                               Direction direction = Direction::Super);

// Strict-inequality labeling used for F1; exact ties land OutOfSet.
Label hard_classify(double mu, double h, Direction direction);

// Positive class = InSet; Unclassified predictions count as OutOfSet;
// 0 when precision + recall = 0.
double f1_score(const std::vector<Label>& pred, const std::vector<Label>& truth);

struct GPConfig {
  KernelFamily kernel = KernelFamily::Matern52;
  bool fit_noise = false;
  double noise_sd = 0.1;
  // Hyperparameters are refit at every iteration while t <= refit_warmup,
  // then every refit_every-th observation. refit_every = 1 refits always.
  int refit_every = 1;
  int refit_warmup = 30;
  // Confidence parameter of the classification rule that feeds the F1 curve.
  double beta = 3.0;
  // Default spec before the first fit (t < 2): variance 1, lengthscale
  // 0.2 * largest box extent, noise fixed to noise_sd^2.
  KernelSpec default_spec(double input_range) const;
};

struct SourceData {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
};

// Everything run_lse needs to know about the prior: the prior mean for
// Vanilla/APLSE and the raw source set for DiffGP. source_fit carries the
// hyperparameters fitted during prior construction (warm start for the
// target fit; kernel of the DiffGP union posterior).
struct PriorContext {
  PriorFunction u_p = PriorFunction::zero();
  std::optional<SourceData> source;
  std::optional<KernelSpec> source_fit;
};

struct RunResult {
  Eigen::MatrixXd selected_points;  // iteration-ordered rows
  Eigen::VectorXd observations;
  // Per-iteration F1 of the beta-rule labels on eval_grid (Unclassified
  // scoring as OutOfSet), computed after each append.
  Eigen::VectorXd f1_curve;
  std::vector<Label> final_labels;  // beta-rule labels at the last iteration
  std::uint64_t seed = 0;
  TransferMode mode = TransferMode::Scratch;
  std::vector<double> wall_ms;  // per-iteration durations
};

// First 1-based iteration with F1 >= target, or nullopt.
std::optional<int> iterations_to_threshold(const Eigen::VectorXd& f1_curve,
                                           double target);

// Algorithm: start from no data; per iteration refit hyperparameters, compute
// the mode posterior over the candidate grid, evaluate the acquisition, pick
// the argmax (random tie-break), observe f + noise, append, and record the F1
// of the updated posterior's beta-rule labels on the eval grid.
// Deterministic given (problem, mode, prior, acq, gp, seed).
RunResult run_lse(const Problem& problem, TransferMode mode,
                  const PriorContext& prior, const AcquisitionSpec& acq,
                  const GPConfig& gp, std::uint64_t seed);

using PriorFactory = std::function<PriorContext(std::uint64_t seed)>;

struct RepeatStats {
  std::vector<RunResult> runs;
  Eigen::VectorXd mean_curve;
  Eigen::VectorXd stderr_curve;
  std::vector<std::optional<int>> iters_to_target;  // per seed
  // Median with unreached = +inf; nullopt when the median itself is
  // unreached. Mean only when every seed reached the target.
  std::optional<double> median_iters;
  std::optional<double> mean_iters;
};

// Runs one seed per entry of `seeds`, each with its own prior from the
// factory, optionally spread over `workers` threads (<=0 => hardware
// concurrency). Aggregation is a deterministic elementwise reduce.
RepeatStats run_repeats(const Problem& problem, TransferMode mode,
                        const PriorFactory& prior_factory,
                        const AcquisitionSpec& acq, const GPConfig& gp,
                        const std::vector<std::uint64_t>& seeds,
                        double f1_target, int workers = 1);

}  // namespace apulse
