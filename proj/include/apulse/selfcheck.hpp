#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "apulse/gp.hpp"
#include "apulse/prior.hpp"

namespace apulse {

// Reference implementations by explicit inverse/determinant, deliberately
// independent of the Cholesky production path. Used by the selfcheck command
// and the test oracles.
PosteriorValue naive_posterior_zero_mean(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& Y,
                                         const KernelSpec& spec,
                                         const Eigen::VectorXd& x);
double naive_posterior_mean_with_prior(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& Y,
                                       const KernelSpec& spec,
                                       const PriorFunction& u_p,
                                       const Eigen::VectorXd& x);
double naive_log_marginal_likelihood(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& Y,
                                     const PriorFunction& residual_prior,
                                     const KernelSpec& spec);

// Smooth random prior as a short random Fourier-style sum
// sum_j a_j cos(w_j . x + b_j); deterministic given the rng state.
PriorFunction random_fourier_prior(int dim, int terms, std::mt19937_64& rng);

// One random fitting-error instance for the inequality chain
//   sum (mu_tilde - y)^2 <= sum (mu_bar - y)^2 <= sum (u_p - y)^2.
struct Theorem1Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  KernelSpec spec;
  PriorFunction u_p;
};

struct Theorem1Margins {
  double err_prior = 0.0;     // sum (u_p(x_i) - y_i)^2
  double err_vanilla = 0.0;   // sum (mu_bar(x_i) - y_i)^2
  double err_adaptive = 0.0;  // sum (mu_tilde(x_i) - y_i)^2
  // Relative slack per link; >= -1e-8 when the chain holds.
  double margin_first() const;   // vanilla vs adaptive
  double margin_second() const;  // prior vs vanilla
};

Theorem1Instance random_theorem1_instance(std::mt19937_64& rng,
                                          KernelFamily family);
Theorem1Margins theorem1_margins(const Theorem1Instance& inst);
// Margins with the u_dt term's sign flipped, for mutation-detection tests:
// the suite must reject this.
Theorem1Margins theorem1_margins_sign_flipped(const Theorem1Instance& inst);

struct SuiteReport {
  std::string name;
  int passed = 0;
  int total = 0;
  double worst_margin = 0.0;  // most negative slack observed
  std::vector<std::string> failures;
  bool ok() const { return passed == total; }
};

// t in [2,30] random points in [0,1]^2, random Fourier prior, random Y;
// asserts the full chain with 1e-8 relative slack per instance.
SuiteReport theorem1_selfcheck(int n_instances, std::uint64_t seed,
                               KernelFamily family = KernelFamily::Matern52);

// Literal adaptive mean vs twice-smoothed identity within 1e-10 absolute.
SuiteReport eq4_identity_suite(int n_instances, std::uint64_t seed,
                               KernelFamily family = KernelFamily::Matern52);

// Cholesky posterior vs naive explicit-inverse within 1e-8 relative.
SuiteReport gp_oracle_suite(int n_instances, std::uint64_t seed,
                            KernelFamily family = KernelFamily::Matern52);

// Smallest eigenvalue of random Gram matrices >= -1e-8 * variance.
SuiteReport kernel_psd_suite(int n_instances, std::uint64_t seed);

}  // namespace apulse
