#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "apulse/gp.hpp"
#include "apulse/prior.hpp"

namespace apulse {

enum class TransferMode { Scratch, Vanilla, APLSE, DiffGP };

const char* mode_name(TransferMode mode);
TransferMode mode_from_name(const std::string& name);

// Fits hyperparameters on the source set (zero residual prior), freezes the
// state, and wraps its posterior mean as a prior. Falls back to `defaults`
// with a warning on the run log when no start improves the evidence.
PriorFunction build_prior_from_source(const Eigen::MatrixXd& source_X,
                                      const Eigen::VectorXd& source_Y,
                                      KernelFamily family,
                                      const KernelSpec& defaults,
                                      std::uint64_t seed);

// u_dt(x) = alpha_t(x) . (Y - u_p(X)): the smoother-interpolated prior
// adjustment. Zero when t = 0.
double adjustment_u_dt(const GPState& state, const PriorFunction& u_p,
                       const Eigen::VectorXd& x);

// Adaptive posterior mean
//   u_p(x) + u_dt(x) + alpha_t(x) . (Y - u_p(X) - u_dt(X)),
// algebraically equal to the twice-smoothed form
//   mu_bar(x) + alpha_t(x) . (Y - mu_bar(X)).
double adaptive_posterior_mean(const GPState& state, const PriorFunction& u_p,
                               const Eigen::VectorXd& x);

// Same value computed via the twice-smoothed identity; kept as a separate
// entry point so the equivalence is testable, not definitional.
double adaptive_posterior_mean_literal(const GPState& state,
                                       const PriorFunction& u_p,
                                       const Eigen::VectorXd& x);

// Scratch -> zero-mean, Vanilla -> prior mean, APLSE -> adaptive mean.
// DiffGP is handled by diffgp_posterior below (it needs source data).
double posterior_mean_for_mode(TransferMode mode, const GPState& state,
                               const PriorFunction& u_p, const Eigen::VectorXd& x);

// Difference-GP baseline, built once per target state:
//   1. fit GP_s on the source data -> mean m_s
//   2. fit GP_diff on {(x_i, y_i - m_s(x_i))} over target observations
//   3. adjust source values y_j' = y_j + d(x_j)
//   4. condition a zero-mean GP on {adjusted source} u {target}
// The union GP reuses GP_s's fitted kernel; the difference GP gets its own
// maximum-likelihood fit.
struct DiffGPModel {
  GPState source_gp;    // fitted on raw source data
  GPState diff_gp;      // fitted on target-minus-source-mean differences
  GPState union_gp;     // zero-mean GP over adjusted source + target
};

DiffGPModel build_diffgp(const Eigen::MatrixXd& source_X,
                         const Eigen::VectorXd& source_Y,
                         const Eigen::MatrixXd& target_X,
                         const Eigen::VectorXd& target_Y, KernelFamily family,
                         const KernelSpec& defaults, std::uint64_t seed,
                         std::uint32_t salt = 0);

PosteriorValue diffgp_posterior(const DiffGPModel& model, const Eigen::VectorXd& x);

}  // namespace apulse
