#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

namespace apulse {

struct GPState;

enum class PriorKind { Zero, ClosedForm, GPMean };

// Deterministic prior mean u_p: X -> R. Carries both a scalar and a batch
// evaluator; the batch path matters because the engine queries whole grids.
struct PriorFunction {
  PriorKind kind = PriorKind::Zero;
  std::string label = "zero";
  std::function<double(const Eigen::VectorXd&)> scalar;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> batch;

  double operator()(const Eigen::VectorXd& x) const { return scalar(x); }
  // points are rows
  Eigen::VectorXd eval(const Eigen::MatrixXd& pts) const { return batch(pts); }

  static PriorFunction zero();
  static PriorFunction closed_form(std::string label,
                                   std::function<double(const Eigen::VectorXd&)> f);
  // Frozen GP posterior mean; shares ownership of the state.
  static PriorFunction gp_mean(std::shared_ptr<const GPState> state);
};

}  // namespace apulse
