#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "apulse/engine.hpp"

namespace apulse {

enum class SyntheticName { Bird, MC3D, Mishra03 };

const char* synthetic_name(SyntheticName name);
SyntheticName synthetic_from_name(const std::string& name);

// Benchmark function with the kappa shift separating prior (kappa=0) from
// target (kappa>0) versions of the same family.
struct SyntheticFunction {
  SyntheticName name = SyntheticName::Mishra03;
  double kappa = 0.0;
};

int synthetic_dim(SyntheticName name);
// [lo, hi] per dimension (shared box)
std::pair<double, double> synthetic_box(SyntheticName name);

// Closed forms:
//   Bird:     sin(x1) e^{(1+kappa-cos x2)^2} + cos(x2) e^{(1-sin x1)^2} + (x1-x2)^2
//   MC3D:     e^{sin^2(x1+kappa) sin^2(x2+kappa) sin^2(x3+kappa)}
//   Mishra03: sqrt(|cos(sqrt(x1^2+x2^2) + kappa)|) + 0.01 (x1+x2)
// Inputs outside the problem box are rejected.
double eval_synthetic(const SyntheticFunction& f, const Eigen::VectorXd& x);

// Cartesian product of evenly spaced coordinates, endpoints included,
// row-major with the last dimension varying fastest. n capped at 1e7.
Eigen::MatrixXd make_uniform_grid(const std::vector<std::pair<double, double>>& bounds,
                                  const std::vector<int>& resolution);

// Benchmark problem with its standard settings: grid, threshold, direction,
// budget, noise sd 0.1, candidate grid = eval grid, true labels from the
// noiseless target.
Problem make_problem(SyntheticName name, double target_kappa);

// Uniform-random source points in the input box (prior-construction stream)
// with values = f(x) + N(0, noise_sd^2).
struct SourceSample {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
};
SourceSample sample_source_points(const SyntheticFunction& f, int count,
                                  double noise_sd, std::uint64_t seed);

// Fraction of positions with identical labels; symmetric.
double level_set_similarity(const std::vector<Label>& a, const std::vector<Label>& b);

// Hard labels of a synthetic function over a grid (noiseless).
std::vector<Label> synthetic_labels(const SyntheticFunction& f,
                                    const Eigen::MatrixXd& grid, double h,
                                    Direction direction);

}  // namespace apulse
