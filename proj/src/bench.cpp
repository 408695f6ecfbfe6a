#include "apulse/bench.hpp"

#include <cmath>
#include <stdexcept>

#include "apulse/numeric.hpp"

namespace apulse {

const char* synthetic_name(SyntheticName name) {
  switch (name) {
    case SyntheticName::Bird: return "bird";
    case SyntheticName::MC3D: return "mc3d";
    case SyntheticName::Mishra03: return "mishra03";
  }
  return "?";
}

SyntheticName synthetic_from_name(const std::string& name) {
  if (name == "bird") return SyntheticName::Bird;
  if (name == "mc3d") return SyntheticName::MC3D;
  if (name == "mishra03") return SyntheticName::Mishra03;
  throw std::invalid_argument("unknown synthetic function: " + name);
}

int synthetic_dim(SyntheticName name) {
  return name == SyntheticName::MC3D ? 3 : 2;
}

std::pair<double, double> synthetic_box(SyntheticName name) {
  switch (name) {
    case SyntheticName::Bird: return {-6.0, 6.0};
    case SyntheticName::MC3D: return {0.0, 6.0};
    case SyntheticName::Mishra03: return {-5.0, 5.0};
  }
  return {0.0, 1.0};
}

double eval_synthetic(const SyntheticFunction& f, const Eigen::VectorXd& x) {
  const int d = synthetic_dim(f.name);
  if (x.size() != d)
    throw std::invalid_argument("eval_synthetic: dimension mismatch");
  const auto [lo, hi] = synthetic_box(f.name);
  const double slack = 1e-9 * (hi - lo);
  for (int i = 0; i < d; ++i)
    if (!(x(i) >= lo - slack && x(i) <= hi + slack))
      throw std::invalid_argument("eval_synthetic: input outside the domain box");

  switch (f.name) {
    case SyntheticName::Bird: {
      const double x1 = x(0), x2 = x(1);
      const double a = 1.0 + f.kappa - std::cos(x2);
      const double b = 1.0 - std::sin(x1);
      return std::sin(x1) * std::exp(a * a) + std::cos(x2) * std::exp(b * b) +
             (x1 - x2) * (x1 - x2);
    }
    case SyntheticName::MC3D: {
      const double s1 = std::sin(x(0) + f.kappa);
      const double s2 = std::sin(x(1) + f.kappa);
      const double s3 = std::sin(x(2) + f.kappa);
      return std::exp(s1 * s1 * s2 * s2 * s3 * s3);
    }
    case SyntheticName::Mishra03: {
      const double r = std::sqrt(x(0) * x(0) + x(1) * x(1));
      return std::sqrt(std::abs(std::cos(r + f.kappa))) + 0.01 * (x(0) + x(1));
    }
  }
  return 0.0;
}

Eigen::MatrixXd make_uniform_grid(const std::vector<std::pair<double, double>>& bounds,
                                  const std::vector<int>& resolution) {
  if (bounds.empty() || bounds.size() != resolution.size())
    throw std::invalid_argument("make_uniform_grid: bounds/resolution mismatch");
  long long total = 1;
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    if (resolution[d] < 2)
      throw std::invalid_argument("make_uniform_grid: resolution must be >= 2");
    total *= resolution[d];
    if (total > 10'000'000)
      throw std::invalid_argument("make_uniform_grid: grid exceeds the 1e7 cap");
  }
  const int D = static_cast<int>(bounds.size());
  // per-dimension coordinates with exact endpoints
  std::vector<std::vector<double>> coords(D);
  for (int d = 0; d < D; ++d) {
    const auto [lo, hi] = bounds[d];
    const int n = resolution[d];
    coords[d].resize(n);
    for (int i = 0; i < n; ++i)
      coords[d][i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    coords[d][n - 1] = hi;
  }
  Eigen::MatrixXd grid(total, D);
  // row-major enumeration, last dimension fastest
  for (long long idx = 0; idx < total; ++idx) {
    long long rem = idx;
    for (int d = D - 1; d >= 0; --d) {
      grid(idx, d) = coords[d][rem % resolution[d]];
      rem /= resolution[d];
    }
  }
  return grid;
}

Problem make_problem(SyntheticName name, double target_kappa) {
  Problem p;
  p.name = synthetic_name(name);
  const int d = synthetic_dim(name);
  const auto box = synthetic_box(name);
  int res = 0;
  switch (name) {
    case SyntheticName::Bird:
      p.h = 4.0;
      p.direction = Direction::Sub;
      p.budget_T = 150;
      res = 100;
      break;
    case SyntheticName::MC3D:
      p.h = 1.6;
      p.direction = Direction::Super;
      p.budget_T = 400;
      res = 20;
      break;
    case SyntheticName::Mishra03:
      p.h = 0.7;
      p.direction = Direction::Sub;
      p.budget_T = 250;
      res = 100;
      break;
  }
  p.noise_sd = 0.1;
  p.eval_grid = make_uniform_grid(std::vector(d, box), std::vector(d, res));
  p.candidate_grid = p.eval_grid;
  const SyntheticFunction target{name, target_kappa};
  p.oracle = [target](const Eigen::VectorXd& x) {
    return eval_synthetic(target, x);
  };
  p.true_labels = synthetic_labels(target, p.eval_grid, p.h, p.direction);
  return p;
}

SourceSample sample_source_points(const SyntheticFunction& f, int count,
                                  double noise_sd, std::uint64_t seed) {
  if (count < 2)
    throw std::invalid_argument("sample_source_points: count must be >= 2");
  const int d = synthetic_dim(f.name);
  const auto [lo, hi] = synthetic_box(f.name);
  auto rng = make_rng(seed, RngStream::source_sampling);
  SourceSample s;
  s.X.resize(count, d);
  s.Y.resize(count);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < d; ++j) s.X(i, j) = uniform_in(rng, lo, hi);
    s.Y(i) = eval_synthetic(f, s.X.row(i));
  }
  if (noise_sd > 0.0)
    for (int i = 0; i < count; ++i) s.Y(i) += noise_sd * normal_draw(rng);
  return s;
}

double level_set_similarity(const std::vector<Label>& a, const std::vector<Label>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("level_set_similarity: length mismatch");
  if (a.empty()) throw std::invalid_argument("level_set_similarity: empty labels");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == b[i]) ++same;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

std::vector<Label> synthetic_labels(const SyntheticFunction& f,
                                    const Eigen::MatrixXd& grid, double h,
                                    Direction direction) {
  std::vector<Label> labels(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    labels[i] = hard_classify(eval_synthetic(f, grid.row(i)), h, direction);
  return labels;
}

}  // namespace apulse
