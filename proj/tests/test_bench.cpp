#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "apulse/bench.hpp"
#include "apulse/numeric.hpp"

using namespace apulse;

namespace {

Eigen::VectorXd pt2(double a, double b) {
  Eigen::VectorXd x(2);
  x << a, b;
  return x;
}

Eigen::VectorXd pt3(double a, double b, double c) {
  Eigen::VectorXd x(3);
  x << a, b, c;
  return x;
}

// independent transcription of the closed forms, kept deliberately separate
// from the library implementation
double reference_eval(SyntheticName name, double kappa, const Eigen::VectorXd& x) {
  switch (name) {
    case SyntheticName::Bird:
      return std::sin(x(0)) * std::exp(std::pow(1.0 + kappa - std::cos(x(1)), 2)) +
             std::cos(x(1)) * std::exp(std::pow(1.0 - std::sin(x(0)), 2)) +
             std::pow(x(0) - x(1), 2);
    case SyntheticName::MC3D:
      return std::exp(std::pow(std::sin(x(0) + kappa), 2) *
                      std::pow(std::sin(x(1) + kappa), 2) *
                      std::pow(std::sin(x(2) + kappa), 2));
    case SyntheticName::Mishra03:
      return std::sqrt(std::abs(std::cos(std::hypot(x(0), x(1)) + kappa))) +
             0.01 * (x(0) + x(1));
  }
  return 0.0;
}

}  // namespace

TEST_CASE("synthetic names round-trip") {
  for (SyntheticName n : {SyntheticName::Bird, SyntheticName::MC3D, SyntheticName::Mishra03})
    CHECK(synthetic_from_name(synthetic_name(n)) == n);
  CHECK_THROWS_AS(synthetic_from_name("rosenbrock"), std::invalid_argument);
}

TEST_CASE("eval_synthetic closed-form pins at the origin") {
  CHECK(eval_synthetic({SyntheticName::Bird, 0.0}, pt2(0, 0)) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(eval_synthetic({SyntheticName::MC3D, 0.0}, pt3(0, 0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval_synthetic({SyntheticName::Mishra03, 0.0}, pt2(0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eval_synthetic rejects out-of-box and mismatched inputs") {
  CHECK_THROWS_AS(eval_synthetic({SyntheticName::Bird, 0.0}, pt2(7.0, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_synthetic({SyntheticName::MC3D, 0.0}, pt3(-1.0, 1.0, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_synthetic({SyntheticName::Mishra03, 0.0}, pt2(5.5, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_synthetic({SyntheticName::Bird, 0.0}, pt3(0, 0, 0)),
                  std::invalid_argument);
}

TEST_CASE("eval_synthetic matches an independent transcription at random points") {
  auto rng = make_rng(12, RngStream::misc);
  for (SyntheticName name : {SyntheticName::Bird, SyntheticName::MC3D, SyntheticName::Mishra03}) {
    const int d = synthetic_dim(name);
    const auto [lo, hi] = synthetic_box(name);
    for (int i = 0; i < 100; ++i) {
      const double kappa = uniform_in(rng, 0.0, 1.0);
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x(j) = uniform_in(rng, lo, hi);
      const double got = eval_synthetic({name, kappa}, x);
      const double want = reference_eval(name, kappa, x);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("kappa shift is continuous") {
  auto rng = make_rng(13, RngStream::misc);
  for (SyntheticName name : {SyntheticName::Bird, SyntheticName::MC3D, SyntheticName::Mishra03}) {
    const int d = synthetic_dim(name);
    const auto [lo, hi] = synthetic_box(name);
    for (int i = 0; i < 50; ++i) {
      const double kappa = uniform_in(rng, 0.0, 1.0);
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x(j) = uniform_in(rng, lo, hi);
      const double f0 = eval_synthetic({name, kappa}, x);
      const double f1 = eval_synthetic({name, kappa + 1e-4}, x);
      // sqrt|cos| has kink points, so the bound is loose but still local
      CHECK(std::abs(f1 - f0) <= 0.05 * (1.0 + std::abs(f0)));
    }
  }
}

TEST_CASE("make_problem pins the benchmark table rows") {
  const Problem bird = make_problem(SyntheticName::Bird, 0.4);
  CHECK(bird.h == 4.0);
  CHECK(bird.direction == Direction::Sub);
  CHECK(bird.eval_grid.rows() == 10000);
  CHECK(bird.budget_T == 150);
  CHECK(bird.noise_sd == 0.1);
  CHECK(bird.candidate_grid.rows() == bird.eval_grid.rows());
  CHECK(bird.true_labels.size() == 10000);
  CHECK(bird.oracle(pt2(0, 0)) ==
        doctest::Approx(eval_synthetic({SyntheticName::Bird, 0.4}, pt2(0, 0)))
            .epsilon(1e-15));

  const Problem mc3d = make_problem(SyntheticName::MC3D, 0.3);
  CHECK(mc3d.h == 1.6);
  CHECK(mc3d.direction == Direction::Super);
  CHECK(mc3d.eval_grid.rows() == 8000);
  CHECK(mc3d.budget_T == 400);

  const Problem mishra = make_problem(SyntheticName::Mishra03, 0.4);
  CHECK(mishra.h == 0.7);
  CHECK(mishra.direction == Direction::Sub);
  CHECK(mishra.budget_T == 250);
  CHECK(mishra.eval_grid.rows() == 10000);

  // labels come from the noiseless target
  const std::vector<Label> expect =
      synthetic_labels({SyntheticName::Mishra03, 0.4}, mishra.eval_grid, 0.7,
                       Direction::Sub);
  CHECK(level_set_similarity(mishra.true_labels, expect) == 1.0);
}

TEST_CASE("make_uniform_grid contracts") {
  const Eigen::MatrixXd line = make_uniform_grid({{0.0, 1.0}}, {2});
  REQUIRE(line.rows() == 2);
  CHECK(line(0, 0) == 0.0);
  CHECK(line(1, 0) == 1.0);

  const Eigen::MatrixXd g32 = make_uniform_grid({{0.0, 1.0}, {0.0, 1.0}}, {3, 2});
  REQUIRE(g32.rows() == 6);
  CHECK(g32(0, 0) == 0.0);
  CHECK(g32(0, 1) == 0.0);
  // last dimension varies fastest
  CHECK(g32(1, 0) == 0.0);
  CHECK(g32(1, 1) == 1.0);
  CHECK(g32(5, 0) == 1.0);
  CHECK(g32(5, 1) == 1.0);

  const Eigen::MatrixXd bird_grid =
      make_uniform_grid({{-6.0, 6.0}, {-6.0, 6.0}}, {100, 100});
  CHECK(bird_grid.rows() == 10000);
  CHECK(bird_grid(1, 1) - bird_grid(0, 1) == doctest::Approx(12.0 / 99.0).epsilon(1e-14));
  CHECK(bird_grid(0, 0) == -6.0);
  CHECK(bird_grid(9999, 1) == 6.0);

  const Eigen::MatrixXd g432 =
      make_uniform_grid({{0., 1.}, {0., 1.}, {0., 1.}}, {4, 3, 2});
  CHECK(g432.rows() == 4 * 3 * 2);

  CHECK_THROWS_AS(make_uniform_grid({{0.0, 1.0}}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(make_uniform_grid({{0.0, 1.0}, {0.0, 1.0}}, {3163, 3163}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_uniform_grid({{0.0, 1.0}}, {2, 2}), std::invalid_argument);
}

TEST_CASE("sample_source_points: determinism, box containment, noiseless path") {
  const SyntheticFunction f{SyntheticName::Bird, 0.0};
  const SourceSample a = sample_source_points(f, 50, 0.1, 99);
  const SourceSample b = sample_source_points(f, 50, 0.1, 99);
  CHECK(a.X == b.X);
  CHECK(a.Y == b.Y);
  const SourceSample c = sample_source_points(f, 50, 0.1, 100);
  CHECK(a.X != c.X);

  for (int i = 0; i < 50; ++i) {
    CHECK(a.X(i, 0) >= -6.0);
    CHECK(a.X(i, 0) <= 6.0);
    CHECK(a.X(i, 1) >= -6.0);
    CHECK(a.X(i, 1) <= 6.0);
  }

  const SourceSample clean = sample_source_points(f, 20, 0.0, 7);
  for (int i = 0; i < 20; ++i)
    CHECK(clean.Y(i) == eval_synthetic(f, clean.X.row(i)));

  CHECK_THROWS_AS(sample_source_points(f, 1, 0.1, 3), std::invalid_argument);
}

TEST_CASE("level_set_similarity basic properties") {
  const std::vector<Label> a{Label::InSet, Label::OutOfSet, Label::InSet, Label::OutOfSet};
  const std::vector<Label> flip{Label::OutOfSet, Label::InSet, Label::OutOfSet, Label::InSet};
  CHECK(level_set_similarity(a, a) == 1.0);
  CHECK(level_set_similarity(a, flip) == 0.0);
  CHECK(level_set_similarity(a, flip) == level_set_similarity(flip, a));
  const std::vector<Label> half{Label::InSet, Label::InSet, Label::InSet, Label::OutOfSet};
  CHECK(level_set_similarity(a, half) == doctest::Approx(0.75));
  CHECK_THROWS_AS(level_set_similarity(a, {Label::InSet}), std::invalid_argument);
  CHECK_THROWS_AS(level_set_similarity({}, {}), std::invalid_argument);
}

TEST_CASE("mishra03 prior-target similarity behaves across the kappa ladder") {
  const Problem p = make_problem(SyntheticName::Mishra03, 0.0);
  const std::vector<Label> prior =
      synthetic_labels({SyntheticName::Mishra03, 0.0}, p.eval_grid, p.h, p.direction);
  double prev = 1.0 + 1e-9;
  for (double kappa : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const std::vector<Label> target = synthetic_labels(
        {SyntheticName::Mishra03, kappa}, p.eval_grid, p.h, p.direction);
    const double sim = level_set_similarity(prior, target);
    CHECK(sim < prev);  // larger shift, lower agreement
    CHECK(sim > 0.2);
    CHECK(sim < 1.0);
    prev = sim;
  }
  // the small-shift point sits in the high-80s band
  const std::vector<Label> near = synthetic_labels(
      {SyntheticName::Mishra03, 0.2}, p.eval_grid, p.h, p.direction);
  const double sim02 = level_set_similarity(prior, near);
  CHECK(sim02 > 0.84);
  CHECK(sim02 < 0.90);
}
