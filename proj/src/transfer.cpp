#include "apulse/transfer.hpp"

#include <cstdio>
#include <stdexcept>
#include <utility>

namespace apulse {

const char* mode_name(TransferMode mode) {
  switch (mode) {
    case TransferMode::Scratch: return "scratch";
    case TransferMode::Vanilla: return "vanilla";
    case TransferMode::APLSE: return "aplse";
    case TransferMode::DiffGP: return "diffgp";
  }
  return "?";
}

TransferMode mode_from_name(const std::string& name) {
  if (name == "scratch") return TransferMode::Scratch;
  if (name == "vanilla") return TransferMode::Vanilla;
  if (name == "aplse") return TransferMode::APLSE;
  if (name == "diffgp") return TransferMode::DiffGP;
  throw std::invalid_argument("unknown transfer mode: " + name);
}

PriorFunction build_prior_from_source(const Eigen::MatrixXd& source_X,
                                      const Eigen::VectorXd& source_Y,
                                      KernelFamily family,
                                      const KernelSpec& defaults,
                                      std::uint64_t seed) {
  if (source_X.rows() < 2)
    throw std::invalid_argument("build_prior_from_source: need >= 2 points");
  KernelSpec def = defaults;
  def.family = family;
  FitOptions opts;
  opts.seed = seed;
  const PriorFunction zero = PriorFunction::zero();
  FitResult fit = fit_hyperparameters(source_X, source_Y, zero, def, opts);
  if (!fit.improved_on_default)
    std::fprintf(stderr,
                 "[warn] prior fit: no start improved on defaults; "
                 "using default hyperparameters\n");
  auto state = std::make_shared<GPState>(
      make_gp_state(source_X, source_Y, fit.spec));
  return PriorFunction::gp_mean(std::move(state));
}

double adjustment_u_dt(const GPState& state, const PriorFunction& u_p,
                       const Eigen::VectorXd& x) {
  if (state.t() == 0) return 0.0;
  const Eigen::VectorXd r = state.Y - u_p.eval(state.X);
  return smoother_weights(state, x).dot(r);
}

double adaptive_posterior_mean_literal(const GPState& state,
                                       const PriorFunction& u_p,
                                       const Eigen::VectorXd& x) {
  if (state.t() == 0) return u_p(x);
  // u_p(x) + u_dt(x) + alpha(x).(Y - u_p(X) - u_dt(X)), each piece spelled out
  const Eigen::VectorXd r1 = state.Y - u_p.eval(state.X);
  const double u_dt_x = smoother_weights(state, x).dot(r1);
  Eigen::VectorXd u_dt_X(state.t());
  for (Eigen::Index i = 0; i < state.t(); ++i)
    u_dt_X(i) = smoother_weights(state, state.X.row(i)).dot(r1);
  const Eigen::VectorXd r2 = state.Y - u_p.eval(state.X) - u_dt_X;
  return u_p(x) + u_dt_x + smoother_weights(state, x).dot(r2);
}

double adaptive_posterior_mean(const GPState& state, const PriorFunction& u_p,
                               const Eigen::VectorXd& x) {
  if (state.t() == 0) return u_p(x);
  // twice-smoothed form: mu_bar(x) + alpha(x).(Y - mu_bar(X))
  const Eigen::VectorXd up_X = u_p.eval(state.X);
  const Eigen::VectorXd r1 = state.Y - up_X;
  const Eigen::VectorXd a1 = state.chol.triangularView<Eigen::Lower>().solve(r1);
  const Eigen::VectorXd alpha1 =
      state.chol.transpose().triangularView<Eigen::Upper>().solve(a1);
  // mu_bar at the training points; K_t here is noiseless cross-covariance
  const Eigen::MatrixXd Kt = kernel_matrix(state.spec, state.X, state.X);
  const Eigen::VectorXd mu_bar_X = up_X + Kt * alpha1;
  const Eigen::VectorXd w = smoother_weights(state, x);
  const double mu_bar_x = u_p(x) + w.dot(r1);
  return mu_bar_x + w.dot(state.Y - mu_bar_X);
}

double posterior_mean_for_mode(TransferMode mode, const GPState& state,
                               const PriorFunction& u_p, const Eigen::VectorXd& x) {
  switch (mode) {
    case TransferMode::Scratch:
      return state.t() == 0 ? 0.0 : posterior_zero_mean(state, x).mu;
    case TransferMode::Vanilla:
      return state.t() == 0 ? u_p(x) : posterior_mean_with_prior(state, u_p, x);
    case TransferMode::APLSE:
      return adaptive_posterior_mean(state, u_p, x);
    case TransferMode::DiffGP:
      throw std::invalid_argument(
          "posterior_mean_for_mode: DiffGP requires source data; use "
          "diffgp_posterior");
  }
  return 0.0;
}

DiffGPModel build_diffgp(const Eigen::MatrixXd& source_X,
                         const Eigen::VectorXd& source_Y,
                         const Eigen::MatrixXd& target_X,
                         const Eigen::VectorXd& target_Y, KernelFamily family,
                         const KernelSpec& defaults, std::uint64_t seed,
                         std::uint32_t salt) {
  if (source_X.rows() < 1)
    throw std::invalid_argument("build_diffgp: source data required");
  KernelSpec def = defaults;
  def.family = family;
  const PriorFunction zero = PriorFunction::zero();

  FitOptions source_opts;
  source_opts.seed = seed;
  const KernelSpec source_spec =
      fit_hyperparameters(source_X, source_Y, zero, def, source_opts).spec;
  DiffGPModel model{make_gp_state(source_X, source_Y, source_spec), {}, {}};

  // difference model on target residuals vs the source mean
  const Eigen::Index t = target_X.rows();
  Eigen::VectorXd diff_Y(t);
  for (Eigen::Index i = 0; i < t; ++i)
    diff_Y(i) =
        target_Y(i) - posterior_zero_mean(model.source_gp, target_X.row(i)).mu;
  FitOptions diff_opts;
  diff_opts.seed = seed;
  diff_opts.salt = salt + 1;
  const KernelSpec diff_spec =
      t >= 2 ? fit_hyperparameters(target_X, diff_Y, zero, def, diff_opts).spec
             : def;
  model.diff_gp = make_gp_state(target_X, diff_Y, diff_spec);

  // adjust the source toward the target, then condition on the union;
  // the union reuses the source-fitted kernel (source points dominate)
  Eigen::MatrixXd union_X(source_X.rows() + t, source_X.cols());
  union_X << source_X, target_X;
  Eigen::VectorXd union_Y(source_Y.size() + t);
  for (Eigen::Index j = 0; j < source_Y.size(); ++j) {
    double d = 0.0;
    if (model.diff_gp.t() > 0)
      d = posterior_zero_mean(model.diff_gp, source_X.row(j)).mu;
    union_Y(j) = source_Y(j) + d;
  }
  union_Y.tail(t) = target_Y;
  model.union_gp = make_gp_state(std::move(union_X), std::move(union_Y),
                                 source_spec);
  return model;
}

PosteriorValue diffgp_posterior(const DiffGPModel& model, const Eigen::VectorXd& x) {
  return posterior_zero_mean(model.union_gp, x);
}

}  // namespace apulse
