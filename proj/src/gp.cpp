#include "apulse/gp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "apulse/numeric.hpp"

namespace apulse {

namespace {

Eigen::MatrixXd chol_or_throw(const Eigen::MatrixXd& A, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) +
                             ": Cholesky factorization failed (matrix not PD "
                             "even with jitter)");
  return llt.matrixL();
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b) {
  Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(v);
}

}  // namespace

GPState make_gp_state(Eigen::MatrixXd X, Eigen::VectorXd Y, KernelSpec spec,
                      const PriorFunction* residual_prior, double jitter_scale) {
  validate(spec);
  if (X.rows() != Y.size())
    throw std::invalid_argument("make_gp_state: |X| != |Y|");
  GPState state;
  state.spec = spec;
  state.X = std::move(X);
  state.Y = std::move(Y);
  if (state.t() > 0) {
    state.chol = chol_or_throw(gram_matrix(spec, state.X, jitter_scale),
                               "make_gp_state");
    Eigen::VectorXd r = state.Y;
    if (residual_prior) r -= residual_prior->eval(state.X);
    state.alpha_cache = chol_solve(state.chol, r);
  }
  return state;
}

PosteriorValue posterior_zero_mean(const GPState& state, const Eigen::VectorXd& x) {
  if (state.t() < 1)
    throw std::invalid_argument("posterior_zero_mean: no observations");
  Eigen::VectorXd k(state.t());
  for (Eigen::Index i = 0; i < state.t(); ++i)
    k(i) = kernel_eval(state.spec, state.X.row(i), x);
  const Eigen::VectorXd v = state.chol.triangularView<Eigen::Lower>().solve(k);
  const Eigen::VectorXd w = state.chol.triangularView<Eigen::Lower>().solve(state.Y);
  const double prior_var = kernel_eval(state.spec, x, x);
  PosteriorValue out;
  out.mu = v.dot(w);
  out.var = std::clamp(prior_var - v.squaredNorm(), 0.0, prior_var);
  return out;
}

double posterior_mean_with_prior(const GPState& state, const PriorFunction& u_p,
                                 const Eigen::VectorXd& x) {
  if (state.t() < 1)
    throw std::invalid_argument("posterior_mean_with_prior: no observations");
  const Eigen::VectorXd r = state.Y - u_p.eval(state.X);
  return u_p(x) + smoother_weights(state, x).dot(r);
}

Eigen::VectorXd smoother_weights(const GPState& state, const Eigen::VectorXd& x) {
  if (state.t() < 1)
    throw std::invalid_argument("smoother_weights: no observations");
  Eigen::VectorXd k(state.t());
  for (Eigen::Index i = 0; i < state.t(); ++i)
    k(i) = kernel_eval(state.spec, state.X.row(i), x);
  return chol_solve(state.chol, k);
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                               const PriorFunction& residual_prior,
                               const KernelSpec& spec) {
  if (X.rows() < 1)
    throw std::invalid_argument("log_marginal_likelihood: no observations");
  const Eigen::MatrixXd L =
      chol_or_throw(gram_matrix(spec, X), "log_marginal_likelihood");
  const Eigen::VectorXd r = Y - residual_prior.eval(X);
  const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(r);
  const double t = static_cast<double>(X.rows());
  return -0.5 * v.squaredNorm() - L.diagonal().array().log().sum() -
         0.5 * t * std::log(2.0 * M_PI);
}

namespace {

// LML as a function of log-parameters with the pairwise distances cached;
// -inf on factorization failure so Nelder-Mead walks away from the region.
struct LmlObjective {
  const Eigen::MatrixXd& D2;  // pairwise squared distances
  const Eigen::VectorXd& r;
  KernelFamily family;
  double fixed_noise;
  bool fit_noise;
  Eigen::VectorXd lb, ub;

  KernelSpec spec_at(const Eigen::VectorXd& p) const {
    KernelSpec s;
    s.family = family;
    s.variance = std::exp(p(0));
    s.lengthscale = std::exp(p(1));
    s.noise_variance = fit_noise ? std::exp(p(2)) : fixed_noise;
    return s;
  }

  double neg_lml(const Eigen::VectorXd& p_in) const {
    Eigen::VectorXd p = p_in.cwiseMax(lb).cwiseMin(ub);
    const double penalty = 1e4 * (p_in - p).squaredNorm();
    const KernelSpec s = spec_at(p);
    const Eigen::Index t = r.size();
    Eigen::MatrixXd K(t, t);
    for (Eigen::Index i = 0; i < t; ++i)
      for (Eigen::Index j = i; j < t; ++j)
        K(i, j) = K(j, i) = kernel_from_r2(s, D2(i, j));
    double diag = s.noise_variance;
    if (s.noise_variance < 1e-8) diag += 1e-8 * s.variance;
    K.diagonal().array() += diag;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(r);
    const double lml = -0.5 * v.squaredNorm() -
                       L.diagonal().array().log().sum() -
                       0.5 * static_cast<double>(t) * std::log(2.0 * M_PI);
    return -lml + penalty;
  }
};

// Plain Nelder-Mead over n parameters; deterministic, bounded iterations.
Eigen::VectorXd nelder_mead(const LmlObjective& obj, const Eigen::VectorXd& p0,
                            int max_iters, double* best_f) {
  const int n = static_cast<int>(p0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, p0);
  std::vector<double> f(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += 0.4;
  for (int i = 0; i <= n; ++i) f[i] = obj.neg_lml(pts[i]);

  auto order = [&] {
    for (int i = 1; i <= n; ++i)
      for (int j = i; j > 0 && f[j] < f[j - 1]; --j) {
        std::swap(f[j], f[j - 1]);
        std::swap(pts[j], pts[j - 1]);
      }
  };
  order();

  for (int iter = 0; iter < max_iters; ++iter) {
    if (std::abs(f[n] - f[0]) < 1e-9 * (1.0 + std::abs(f[0]))) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    Eigen::VectorXd xr = centroid + (centroid - pts[n]);
    double fr = obj.neg_lml(xr);
    if (fr < f[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
      double fe = obj.neg_lml(xe);
      if (fe < fr) { pts[n] = xe; f[n] = fe; }
      else { pts[n] = xr; f[n] = fr; }
    } else if (fr < f[n - 1]) {
      pts[n] = xr; f[n] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (pts[n] - centroid);
      double fc = obj.neg_lml(xc);
      if (fc < f[n]) { pts[n] = xc; f[n] = fc; }
      else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          f[i] = obj.neg_lml(pts[i]);
        }
      }
    }
    order();
  }
  *best_f = f[0];
  return pts[0];
}

}  // namespace

FitResult fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                              const PriorFunction& residual_prior,
                              const KernelSpec& defaults,
                              const FitOptions& options) {
  FitResult out;
  out.spec = defaults;
  if (X.rows() < 2) return out;

  const Eigen::Index t = X.rows();
  Eigen::MatrixXd D2(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    D2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < t; ++j)
      D2(i, j) = D2(j, i) = (X.row(i) - X.row(j)).squaredNorm();
  }
  const Eigen::VectorXd r = Y - residual_prior.eval(X);

  double range = 0.0;
  for (Eigen::Index d = 0; d < X.cols(); ++d)
    range = std::max(range, X.col(d).maxCoeff() - X.col(d).minCoeff());
  if (!(range > 0.0)) range = 1.0;
  const double var_r =
      std::max((r.array() - r.mean()).square().sum() / static_cast<double>(t),
               1e-8);

  const int n_params = options.fit_noise ? 3 : 2;
  Eigen::VectorXd lb(n_params), ub(n_params);
  lb(0) = std::log(var_r) - 6.0;
  ub(0) = std::log(var_r) + 6.0;
  lb(1) = std::log(1e-2 * range);
  ub(1) = std::log(1e2 * range);
  if (options.fit_noise) {
    lb(2) = std::log(1e-10);
    ub(2) = std::log(10.0 * var_r);
  }

  LmlObjective obj{D2, r, defaults.family, defaults.noise_variance,
                   options.fit_noise, lb, ub};

  const double baseline = obj.neg_lml([&] {
    Eigen::VectorXd p(n_params);
    p(0) = std::log(defaults.variance);
    p(1) = std::log(defaults.lengthscale);
    if (options.fit_noise)
      p(2) = std::log(std::max(defaults.noise_variance, 1e-10));
    return p.cwiseMax(lb).cwiseMin(ub).eval();
  }());

  auto rng = make_rng(options.seed, RngStream::fit_multistart, options.salt);
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_p;
  for (int s = 0; s < options.starts; ++s) {
    Eigen::VectorXd p0(n_params);
    if (s == 0) {
      p0(0) = std::log(defaults.variance);
      p0(1) = std::log(defaults.lengthscale);
      if (options.fit_noise)
        p0(2) = std::log(std::max(defaults.noise_variance, 1e-10));
      p0 = p0.cwiseMax(lb).cwiseMin(ub);
    } else {
      for (int i = 0; i < n_params; ++i)
        p0(i) = uniform_in(rng, lb(i), ub(i));
    }
    double f = 0.0;
    Eigen::VectorXd p = nelder_mead(obj, p0, options.max_iters, &f);
    if (f < best_f) {
      best_f = f;
      best_p = p;
    }
  }

  if (!best_p.size() || !(best_f <= baseline)) {
    out.improved_on_default = false;
    out.lml = -baseline;
    return out;
  }
  best_p = best_p.cwiseMax(lb).cwiseMin(ub);
  out.spec = obj.spec_at(best_p);
  out.lml = -best_f;
  return out;
}

}  // namespace apulse
