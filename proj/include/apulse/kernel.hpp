#pragma once

#include <Eigen/Dense>

namespace apulse {

enum class KernelFamily { RBF, Matern52, IMQ };

// Stationary covariance spec shared by every posterior computation.
// lengthscale is a single isotropic scale; noise_variance is the observation
// noise sigma^2 added to the Gram diagonal before factorization.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double variance = 1.0;
  double lengthscale = 1.0;
  double noise_variance = 0.01;
};

void validate(const KernelSpec& spec);

const char* family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);

// k(x,z) for points given as column vectors of equal dimension.
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& z);

// Covariance from a squared distance; the shared scalar core of the three
// families.
double kernel_from_r2(const KernelSpec& spec, double r2);

// n x m cross-covariance; rows of A and B are points. When &A == &B the
// result is assembled symmetrically (upper triangle mirrored) so it equals
// its transpose bitwise.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B);

// Gram matrix K + noise_variance*I, with jitter 1e-8*variance on the diagonal
// when noise_variance < 1e-8. jitter_scale multiplies that jitter (used by the
// engine's one-shot retry after a factorization failure).
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                            double jitter_scale = 1.0);

}  // namespace apulse
