#include "apulse/prior.hpp"

#include <utility>

#include "apulse/gp.hpp"

namespace apulse {

namespace {

// Default batch path: map the scalar evaluator over rows.
std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> rowwise(
    std::function<double(const Eigen::VectorXd&)> f) {
  return [f = std::move(f)](const Eigen::MatrixXd& pts) {
    Eigen::VectorXd out(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) out(i) = f(pts.row(i));
    return out;
  };
}

}  // namespace

PriorFunction PriorFunction::zero() {
  PriorFunction p;
  p.kind = PriorKind::Zero;
  p.label = "zero";
  p.scalar = [](const Eigen::VectorXd&) { return 0.0; };
  p.batch = [](const Eigen::MatrixXd& pts) {
    return Eigen::VectorXd::Zero(pts.rows()).eval();
  };
  return p;
}

PriorFunction PriorFunction::closed_form(
    std::string label, std::function<double(const Eigen::VectorXd&)> f) {
  PriorFunction p;
  p.kind = PriorKind::ClosedForm;
  p.label = std::move(label);
  p.batch = rowwise(f);
  p.scalar = std::move(f);
  return p;
}

PriorFunction PriorFunction::gp_mean(std::shared_ptr<const GPState> state) {
  PriorFunction p;
  p.kind = PriorKind::GPMean;
  p.label = "gp_mean";
  p.scalar = [state](const Eigen::VectorXd& x) {
    return posterior_zero_mean(*state, x).mu;
  };
  // One cross-covariance gemv instead of per-point solves.
  p.batch = [state](const Eigen::MatrixXd& pts) {
    if (state->t() == 0) return Eigen::VectorXd::Zero(pts.rows()).eval();
    Eigen::MatrixXd Ks = kernel_matrix(state->spec, pts, state->X);
    return (Ks * state->alpha_cache).eval();
  };
  return p;
}

}  // namespace apulse
