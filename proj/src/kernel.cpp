#include "apulse/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace apulse {

void validate(const KernelSpec& spec) {
  if (!(spec.variance > 0.0) || !std::isfinite(spec.variance))
    throw std::invalid_argument("KernelSpec: variance must be positive");
  if (!(spec.lengthscale > 0.0) || !std::isfinite(spec.lengthscale))
    throw std::invalid_argument("KernelSpec: lengthscale must be positive");
  if (!(spec.noise_variance >= 0.0) || !std::isfinite(spec.noise_variance))
    throw std::invalid_argument("KernelSpec: noise_variance must be >= 0");
}

const char* family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::RBF: return "rbf";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::IMQ: return "imq";
  }
  return "?";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "rbf") return KernelFamily::RBF;
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "imq") return KernelFamily::IMQ;
  throw std::invalid_argument("unknown kernel family: " + name);
}

double kernel_from_r2(const KernelSpec& spec, double r2) {
  const double ell2 = spec.lengthscale * spec.lengthscale;
  switch (spec.family) {
    case KernelFamily::RBF:
      return spec.variance * std::exp(-0.5 * r2 / ell2);
    case KernelFamily::Matern52: {
      const double s = std::sqrt(5.0 * r2) / spec.lengthscale;
      return spec.variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    case KernelFamily::IMQ:
      return spec.variance / std::sqrt(1.0 + r2 / ell2);
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& z) {
  if (x.size() != z.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (!x.allFinite() || !z.allFinite())
    throw std::invalid_argument("kernel_eval: non-finite input");
  return kernel_from_r2(spec, (x - z).squaredNorm());
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols())
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  const Eigen::Index n = A.rows(), m = B.rows();
  Eigen::MatrixXd K(n, m);
  if (&A == &B || (n == m && A.data() == B.data())) {
    for (Eigen::Index i = 0; i < n; ++i) {
      K(i, i) = spec.variance;
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double v = kernel_from_r2(spec, (A.row(i) - B.row(j)).squaredNorm());
        K(i, j) = v;
        K(j, i) = v;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        K(i, j) = kernel_from_r2(spec, (A.row(i) - B.row(j)).squaredNorm());
  }
  return K;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                            double jitter_scale) {
  Eigen::MatrixXd K = kernel_matrix(spec, X, X);
  double diag = spec.noise_variance;
  if (spec.noise_variance < 1e-8) diag += jitter_scale * 1e-8 * spec.variance;
  K.diagonal().array() += diag;
  return K;
}

}  // namespace apulse
