#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_set>

#include <random>

#include "apulse/gp.hpp"

namespace apulse {

enum class AcquisitionKind { Straddle, C2LSE, RMILE };

const char* acquisition_name(AcquisitionKind kind);
AcquisitionKind acquisition_from_name(const std::string& name);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::Straddle;
  double epsilon = 0.05;  // C2LSE denominator floor; RMILE margin
  double delta = 0.5;     // RMILE classification probability threshold
  double lambda = 0.01;   // RMILE exploration floor weight
  int mc_samples = 64;    // RMILE expectation draws
  bool allow_repeats = true;

  bool operator==(const AcquisitionSpec&) const = default;
};

void validate(const AcquisitionSpec& spec);

// 1.96*sigma - |mu - h|
double straddle_value(double mu, double sigma, double h);

// sigma / max(epsilon, |mu - h|)
double c2lse_value(double mu, double sigma, double h, double epsilon);

// Mode posterior over a grid: mu per the transfer mode, sd from the
// prior-independent variance.
struct GridPosterior {
  Eigen::VectorXd mu;
  Eigen::VectorXd sd;
};

// RMILE at one candidate: max(E_{y+}|I+| - |I_eps|, lambda * sd(candidate)).
// |I_eps| counts grid points with P(f > h - eps) > delta under the current
// posterior; each draw of y+ ~ N(mu(c), sd(c)^2 + noise) updates every grid
// point by one-point Gaussian conditioning (no refactorization) and |I+|
// counts P+(f > h) > delta. `superlevel` = false flips the signs so sublevel
// problems measure expected change of the sublevel volume. Deterministic for
// a fixed (seed, salt).
double rmile_value(const GPState& state, const Eigen::MatrixXd& grid,
                   const GridPosterior& post, Eigen::Index candidate, double h,
                   bool superlevel, const AcquisitionSpec& spec,
                   std::uint64_t seed, std::uint32_t salt = 0);

// argmax with uniform random tie-breaking. already_chosen indices stay
// eligible (re-evaluation under noise is informative); callers that forbid
// repeats mask values beforehand. Throws when every value is non-finite.
Eigen::Index select_next(const Eigen::VectorXd& values,
                         const std::unordered_set<Eigen::Index>& already_chosen,
                         std::mt19937_64& rng);

}  // namespace apulse
