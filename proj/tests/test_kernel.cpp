#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "apulse/kernel.hpp"
#include "apulse/numeric.hpp"

using namespace apulse;

namespace {

KernelSpec spec_of(KernelFamily f, double var, double ell, double noise = 0.0) {
  KernelSpec s;
  s.family = f;
  s.variance = var;
  s.lengthscale = ell;
  s.noise_variance = noise;
  return s;
}

Eigen::VectorXd pt(double a) {
  Eigen::VectorXd x(1);
  x << a;
  return x;
}

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed) {
  auto rng = make_rng(seed, RngStream::misc);
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = uniform_in(rng, -2.0, 2.0);
  return X;
}

}  // namespace

TEST_CASE("kernel_eval closed-form pins") {
  Eigen::VectorXd z2 = Eigen::VectorXd::Zero(2);
  CHECK(kernel_eval(spec_of(KernelFamily::RBF, 1, 1), z2, z2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kernel_eval(spec_of(KernelFamily::RBF, 1, 1), pt(0), pt(1)) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(kernel_eval(spec_of(KernelFamily::IMQ, 2, 1), pt(0), pt(1)) ==
        doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-12));
  // Matern 5/2 at r = lengthscale = 1
  const double s = std::sqrt(5.0);
  CHECK(kernel_eval(spec_of(KernelFamily::Matern52, 1, 1), pt(0), pt(1)) ==
        doctest::Approx((1.0 + s + s * s / 3.0) * std::exp(-s)).epsilon(1e-12));
}

TEST_CASE("kernel_eval is symmetric and stationary at zero distance") {
  auto rng = make_rng(7, RngStream::misc);
  for (KernelFamily f : {KernelFamily::RBF, KernelFamily::Matern52, KernelFamily::IMQ}) {
    const KernelSpec s = spec_of(f, 1.7, 0.6);
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd x(3), z(3);
      for (int d = 0; d < 3; ++d) {
        x(d) = uniform_in(rng, -1.0, 1.0);
        z(d) = uniform_in(rng, -1.0, 1.0);
      }
      CHECK(kernel_eval(s, x, z) == kernel_eval(s, z, x));
      CHECK(kernel_eval(s, x, x) == doctest::Approx(1.7).epsilon(1e-14));
    }
  }
}

TEST_CASE("kernel_eval input validation") {
  const KernelSpec s = spec_of(KernelFamily::RBF, 1, 1);
  CHECK_THROWS_AS(kernel_eval(s, pt(0), Eigen::VectorXd::Zero(2)), std::invalid_argument);
  Eigen::VectorXd bad(1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(kernel_eval(s, bad, pt(0)), std::invalid_argument);
}

TEST_CASE("KernelSpec validation") {
  CHECK_NOTHROW(validate(spec_of(KernelFamily::RBF, 1, 1, 0.01)));
  CHECK_THROWS_AS(validate(spec_of(KernelFamily::RBF, 0, 1)), std::invalid_argument);
  CHECK_THROWS_AS(validate(spec_of(KernelFamily::RBF, 1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(validate(spec_of(KernelFamily::RBF, 1, 1, -1)), std::invalid_argument);
}

TEST_CASE("kernel family names round-trip") {
  for (KernelFamily f : {KernelFamily::RBF, KernelFamily::Matern52, KernelFamily::IMQ})
    CHECK(family_from_name(family_name(f)) == f);
  CHECK_THROWS_AS(family_from_name("cubic"), std::invalid_argument);
}

TEST_CASE("kernel_matrix pins and shape") {
  const KernelSpec s = spec_of(KernelFamily::RBF, 1, 1);
  Eigen::MatrixXd one(1, 1);
  one << 0.3;
  const Eigen::MatrixXd K1 = kernel_matrix(s, one, one);
  CHECK(K1.rows() == 1);
  CHECK(K1(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  Eigen::MatrixXd two(2, 1);
  two << 0, 1;
  const Eigen::MatrixXd K2 = kernel_matrix(s, two, two);
  CHECK(K2(0, 0) == doctest::Approx(1.0));
  CHECK(K2(1, 1) == doctest::Approx(1.0));
  CHECK(K2(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(K2(1, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("kernel_matrix symmetry is bitwise and PSD up to jitter") {
  const Eigen::MatrixXd X = random_points(20, 2, 11);
  for (KernelFamily f : {KernelFamily::RBF, KernelFamily::Matern52, KernelFamily::IMQ}) {
    const KernelSpec s = spec_of(f, 1.3, 0.8);
    const Eigen::MatrixXd K = kernel_matrix(s, X, X);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);  // symmetric assembly
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * s.variance);
  }
}

TEST_CASE("kernel monotone decay and variance scaling") {
  auto rng = make_rng(3, RngStream::misc);
  for (KernelFamily f : {KernelFamily::RBF, KernelFamily::Matern52, KernelFamily::IMQ}) {
    const KernelSpec s = spec_of(f, 1.0, 0.7);
    for (int i = 0; i < 30; ++i) {
      const double r1 = uniform_in(rng, 0.0, 2.0);
      const double r2 = r1 + uniform_in(rng, 1e-3, 2.0);
      CHECK(kernel_eval(s, pt(0), pt(r1)) > kernel_eval(s, pt(0), pt(r2)));
    }
    KernelSpec scaled = s;
    scaled.variance = 3.0;
    const Eigen::MatrixXd X = random_points(8, 1, 5);
    const Eigen::MatrixXd K = kernel_matrix(s, X, X);
    const Eigen::MatrixXd K3 = kernel_matrix(scaled, X, X);
    CHECK((K3 - 3.0 * K).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gram_matrix adds noise and jitter on the diagonal") {
  const Eigen::MatrixXd X = random_points(5, 2, 9);
  KernelSpec noisy = spec_of(KernelFamily::Matern52, 2.0, 1.0, 0.04);
  const Eigen::MatrixXd Gn = gram_matrix(noisy, X);
  CHECK(Gn(0, 0) == doctest::Approx(2.0 + 0.04).epsilon(1e-14));

  KernelSpec clean = spec_of(KernelFamily::Matern52, 2.0, 1.0, 0.0);
  const Eigen::MatrixXd Gc = gram_matrix(clean, X);
  CHECK(Gc(0, 0) == doctest::Approx(2.0 + 1e-8 * 2.0).epsilon(1e-12));

  // 10x retry scale
  const Eigen::MatrixXd Gr = gram_matrix(clean, X, 10.0);
  CHECK(Gr(0, 0) == doctest::Approx(2.0 + 1e-7 * 2.0).epsilon(1e-12));
}
