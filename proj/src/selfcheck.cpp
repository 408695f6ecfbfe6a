#include "apulse/selfcheck.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "apulse/numeric.hpp"
#include "apulse/transfer.hpp"

namespace apulse {

PosteriorValue naive_posterior_zero_mean(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& Y,
                                         const KernelSpec& spec,
                                         const Eigen::VectorXd& x) {
  const Eigen::MatrixXd A = gram_matrix(spec, X);
  const Eigen::MatrixXd Ainv = A.inverse();
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    k(i) = kernel_eval(spec, X.row(i), x);
  PosteriorValue out;
  out.mu = k.dot(Ainv * Y);
  out.var = kernel_eval(spec, x, x) - k.dot(Ainv * k);
  return out;
}

double naive_posterior_mean_with_prior(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& Y,
                                       const KernelSpec& spec,
                                       const PriorFunction& u_p,
                                       const Eigen::VectorXd& x) {
  const Eigen::VectorXd r = Y - u_p.eval(X);
  return u_p(x) + naive_posterior_zero_mean(X, r, spec, x).mu;
}

double naive_log_marginal_likelihood(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& Y,
                                     const PriorFunction& residual_prior,
                                     const KernelSpec& spec) {
  const Eigen::MatrixXd A = gram_matrix(spec, X);
  const Eigen::VectorXd r = Y - residual_prior.eval(X);
  const double quad = r.dot(A.inverse() * r);
  const double logdet = std::log(A.determinant());
  const double t = static_cast<double>(X.rows());
  return -0.5 * quad - 0.5 * logdet - 0.5 * t * std::log(2.0 * M_PI);
}

PriorFunction random_fourier_prior(int dim, int terms, std::mt19937_64& rng) {
  if (dim < 1 || terms < 1)
    throw std::invalid_argument("random_fourier_prior: dim and terms must be >= 1");
  struct Term {
    Eigen::VectorXd w;
    double a, b;
  };
  auto data = std::make_shared<std::vector<Term>>();
  for (int j = 0; j < terms; ++j) {
    Term t;
    t.w.resize(dim);
    for (int d = 0; d < dim; ++d) t.w(d) = uniform_in(rng, -3.0, 3.0);
    t.a = uniform_in(rng, -1.0, 1.0);
    t.b = uniform_in(rng, 0.0, 2.0 * M_PI);
    data->push_back(std::move(t));
  }
  PriorFunction p = PriorFunction::closed_form(
      "random_fourier", [data](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (const auto& t : *data) s += t.a * std::cos(t.w.dot(x) + t.b);
        return s;
      });
  return p;
}

Theorem1Instance random_theorem1_instance(std::mt19937_64& rng,
                                          KernelFamily family) {
  Theorem1Instance inst;
  const int t = 2 + static_cast<int>(uniform_index(rng, 29));  // 2..30
  inst.X.resize(t, 2);
  for (int i = 0; i < t; ++i)
    for (int d = 0; d < 2; ++d) inst.X(i, d) = uniform01(rng);
  inst.u_p = random_fourier_prior(2, 4, rng);
  inst.Y.resize(t);
  for (int i = 0; i < t; ++i)
    inst.Y(i) = inst.u_p(inst.X.row(i)) + normal_draw(rng);
  inst.spec.family = family;
  inst.spec.variance = std::exp(uniform_in(rng, -1.0, 1.0));
  inst.spec.lengthscale = std::exp(uniform_in(rng, std::log(0.1), std::log(1.0)));
  inst.spec.noise_variance = std::exp(uniform_in(rng, std::log(1e-3), std::log(0.3)));
  return inst;
}

namespace {

// Fitting errors of the three means at the training inputs. `flip` negates
// the u_dt adjustment, which must break the first inequality on typical
// instances (mutation detection).
Theorem1Margins margins_impl(const Theorem1Instance& inst, bool flip) {
  const GPState state = make_gp_state(inst.X, inst.Y, inst.spec);
  const int t = static_cast<int>(inst.X.rows());
  const double sgn = flip ? -1.0 : 1.0;
  Eigen::VectorXd up_X(t), udt_X(t);
  for (int i = 0; i < t; ++i) {
    const Eigen::VectorXd x = inst.X.row(i);
    up_X(i) = inst.u_p(x);
    udt_X(i) = sgn * adjustment_u_dt(state, inst.u_p, x);
  }
  Theorem1Margins m;
  for (int i = 0; i < t; ++i) {
    const Eigen::VectorXd x = inst.X.row(i);
    const double mu_bar = posterior_mean_with_prior(state, inst.u_p, x);
    const double mu_tilde =
        flip ? up_X(i) + udt_X(i) +
                   smoother_weights(state, x).dot(inst.Y - up_X - udt_X)
             : adaptive_posterior_mean(state, inst.u_p, x);
    const double y = inst.Y(i);
    m.err_prior += (up_X(i) - y) * (up_X(i) - y);
    m.err_vanilla += (mu_bar - y) * (mu_bar - y);
    m.err_adaptive += (mu_tilde - y) * (mu_tilde - y);
  }
  return m;
}

}  // namespace

double Theorem1Margins::margin_first() const {
  const double scale = std::max(1.0, err_vanilla);
  return (err_vanilla - err_adaptive) / scale;
}

double Theorem1Margins::margin_second() const {
  const double scale = std::max(1.0, err_prior);
  return (err_prior - err_vanilla) / scale;
}

Theorem1Margins theorem1_margins(const Theorem1Instance& inst) {
  return margins_impl(inst, false);
}

Theorem1Margins theorem1_margins_sign_flipped(const Theorem1Instance& inst) {
  return margins_impl(inst, true);
}

SuiteReport theorem1_selfcheck(int n_instances, std::uint64_t seed,
                               KernelFamily family) {
  SuiteReport report;
  report.name = "theorem1";
  report.total = n_instances;
  auto rng = make_rng(seed, RngStream::misc);
  for (int i = 0; i < n_instances; ++i) {
    const Theorem1Instance inst = random_theorem1_instance(rng, family);
    const Theorem1Margins m = theorem1_margins(inst);
    const double worst = std::min(m.margin_first(), m.margin_second());
    report.worst_margin = std::min(report.worst_margin, worst);
    if (worst >= -1e-8) {
      ++report.passed;
    } else {
      report.failures.push_back("instance " + std::to_string(i) +
                                ": margin " + std::to_string(worst));
    }
  }
  return report;
}

SuiteReport eq4_identity_suite(int n_instances, std::uint64_t seed,
                               KernelFamily family) {
  SuiteReport report;
  report.name = "adaptive-mean-identity";
  report.total = n_instances;
  auto rng = make_rng(seed, RngStream::misc, 1);
  for (int i = 0; i < n_instances; ++i) {
    const Theorem1Instance inst = random_theorem1_instance(rng, family);
    const GPState state = make_gp_state(inst.X, inst.Y, inst.spec);
    double worst = 0.0;
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd x(2);
      x << uniform01(rng), uniform01(rng);
      const double a = adaptive_posterior_mean(state, inst.u_p, x);
      const double b = adaptive_posterior_mean_literal(state, inst.u_p, x);
      worst = std::max(worst, std::abs(a - b));
    }
    report.worst_margin = std::min(report.worst_margin, -worst);
    if (worst <= 1e-10) {
      ++report.passed;
    } else {
      report.failures.push_back("instance " + std::to_string(i) +
                                ": |literal - smoothed| = " + std::to_string(worst));
    }
  }
  return report;
}

SuiteReport gp_oracle_suite(int n_instances, std::uint64_t seed,
                            KernelFamily family) {
  SuiteReport report;
  report.name = "gp-vs-naive";
  report.total = n_instances;
  auto rng = make_rng(seed, RngStream::misc, 2);
  for (int i = 0; i < n_instances; ++i) {
    const Theorem1Instance inst = random_theorem1_instance(rng, family);
    const GPState state = make_gp_state(inst.X, inst.Y, inst.spec);
    double worst = 0.0;
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd x(2);
      x << uniform01(rng), uniform01(rng);
      const PosteriorValue fast = posterior_zero_mean(state, x);
      const PosteriorValue ref =
          naive_posterior_zero_mean(inst.X, inst.Y, inst.spec, x);
      const double dm = std::abs(fast.mu - ref.mu) /
                        std::max(1.0, std::abs(ref.mu));
      const double dv = std::abs(fast.var - ref.var) /
                        std::max(1.0, std::abs(ref.var));
      worst = std::max({worst, dm, dv});
    }
    const GPState with_prior =
        make_gp_state(inst.X, inst.Y, inst.spec, &inst.u_p);
    Eigen::VectorXd x(2);
    x << uniform01(rng), uniform01(rng);
    const double fast_mu = posterior_mean_with_prior(with_prior, inst.u_p, x);
    const double ref_mu =
        naive_posterior_mean_with_prior(inst.X, inst.Y, inst.spec, inst.u_p, x);
    worst = std::max(worst, std::abs(fast_mu - ref_mu) /
                                std::max(1.0, std::abs(ref_mu)));
    const double fast_lml =
        log_marginal_likelihood(inst.X, inst.Y, PriorFunction::zero(), inst.spec);
    const double ref_lml = naive_log_marginal_likelihood(
        inst.X, inst.Y, PriorFunction::zero(), inst.spec);
    worst = std::max(worst, std::abs(fast_lml - ref_lml) /
                                std::max(1.0, std::abs(ref_lml)));
    report.worst_margin = std::min(report.worst_margin, -worst);
    if (worst <= 1e-8) {
      ++report.passed;
    } else {
      report.failures.push_back("instance " + std::to_string(i) +
                                ": relative error " + std::to_string(worst));
    }
  }
  return report;
}

SuiteReport kernel_psd_suite(int n_instances, std::uint64_t seed) {
  SuiteReport report;
  report.name = "kernel-psd";
  report.total = n_instances;
  auto rng = make_rng(seed, RngStream::misc, 3);
  const KernelFamily families[] = {KernelFamily::RBF, KernelFamily::Matern52,
                                   KernelFamily::IMQ};
  for (int i = 0; i < n_instances; ++i) {
    KernelSpec spec;
    spec.family = families[uniform_index(rng, 3)];
    spec.variance = std::exp(uniform_in(rng, -1.0, 1.0));
    spec.lengthscale = std::exp(uniform_in(rng, std::log(0.05), std::log(2.0)));
    spec.noise_variance = 0.0;
    const int t = 2 + static_cast<int>(uniform_index(rng, 29));
    const int dim = 1 + static_cast<int>(uniform_index(rng, 3));
    Eigen::MatrixXd X(t, dim);
    for (int r = 0; r < t; ++r)
      for (int d = 0; d < dim; ++d) X(r, d) = uniform_in(rng, -2.0, 2.0);
    const Eigen::MatrixXd K = kernel_matrix(spec, X, X);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const double lam = es.eigenvalues().minCoeff();
    const double margin = lam / spec.variance;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin >= -1e-8) {
      ++report.passed;
    } else {
      report.failures.push_back("instance " + std::to_string(i) +
                                ": min eigenvalue " + std::to_string(lam));
    }
  }
  return report;
}

}  // namespace apulse
