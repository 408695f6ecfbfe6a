#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "apulse/kernel.hpp"
#include "apulse/prior.hpp"

namespace apulse {

// Exact GP surrogate over t observations: inputs X (t x d), noisy values Y,
// and the lower Cholesky factor of K + sigma^2 I (+ jitter). Immutable after
// construction; all queries are const and safe to call concurrently.
struct GPState {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  KernelSpec spec;
  Eigen::MatrixXd chol;  // lower triangular, empty when t = 0
  // (K+sigma^2 I)^-1 (Y - u_p(X)) for the residual prior active at
  // construction time; zero prior unless one was supplied.
  Eigen::VectorXd alpha_cache;

  Eigen::Index t() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

// Factorizes K + sigma^2 I. residual_prior (when present) fills alpha_cache
// with the solve against Y - u_p(X). Throws std::runtime_error when the
// factorization fails even with jitter; jitter_scale is forwarded to
// gram_matrix for the engine's 10x retry.
GPState make_gp_state(Eigen::MatrixXd X, Eigen::VectorXd Y, KernelSpec spec,
                      const PriorFunction* residual_prior = nullptr,
                      double jitter_scale = 1.0);

struct PosteriorValue {
  double mu = 0.0;
  double var = 0.0;
};

// Eqs of the zero-mean posterior: mu = k_t(x)^T (K+sigma^2 I)^-1 Y,
// var = k(x,x) - k_t(x)^T (K+sigma^2 I)^-1 k_t(x), clamped to
// [0, k(x,x)] against rounding.
PosteriorValue posterior_zero_mean(const GPState& state,
                                   const Eigen::VectorXd& x);

// Vanilla transfer mean: u_p(x) + k_t(x)^T (K+sigma^2 I)^-1 (Y - u_p(X)).
// The prior mean leaves the posterior variance untouched.
double posterior_mean_with_prior(const GPState& state, const PriorFunction& u_p,
                                 const Eigen::VectorXd& x);

// Smoother row alpha_t(x) = k_t(x)^T (K+sigma^2 I)^-1.
Eigen::VectorXd smoother_weights(const GPState& state, const Eigen::VectorXd& x);

// Log evidence on residuals r = Y - residual_prior(X):
// -1/2 r^T (K+sigma^2 I)^-1 r - 1/2 log det(K+sigma^2 I) - t/2 log 2pi.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                               const PriorFunction& residual_prior,
                               const KernelSpec& spec);

struct FitOptions {
  bool fit_noise = false;
  int starts = 8;
  int max_iters = 120;       // Nelder-Mead iterations per start
  std::uint64_t seed = 0;
  std::uint32_t salt = 0;    // distinguishes successive refits on one stream
};

struct FitResult {
  KernelSpec spec;
  double lml = 0.0;
  bool improved_on_default = true;  // false => defaults returned with warning
};

// Maximum-likelihood hyperparameters via seeded multistart Nelder-Mead over
// (log variance, log lengthscale[, log noise]) inside box bounds:
// lengthscale in [1e-2, 1e2] * input range, variance in e^[-6,6] * var(r).
// With t < 2 returns `defaults` unchanged.
FitResult fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                              const PriorFunction& residual_prior,
                              const KernelSpec& defaults,
                              const FitOptions& options);

}  // namespace apulse
