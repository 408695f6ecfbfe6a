#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace apulse {

// Labeled RNG streams. Each consumer of randomness inside a run gets its own
// stream so that, e.g., switching the acquisition cannot perturb the prior
// construction draws.
enum class RngStream : std::uint32_t {
  source_sampling = 0,  // prior-construction source points + their noise
  observation_noise = 1,
  fit_multistart = 2,
  tie_break = 3,
  rmile = 4,
  misc = 5,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream,
                                std::uint32_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), salt};
  return std::mt19937_64(seq);
}

// Uniform in [0,1) from the top 53 bits; avoids relying on the library's
// distribution internals so streams are fully specified by the engine state.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n): top-down rejection sampling, unbiased.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

double normal_cdf(double x);

// Inverse standard normal CDF (Acklam's rational approximation polished with
// one Halley step); |error| < 1e-13 over (0,1).
double normal_quantile(double p);

inline double normal_draw(std::mt19937_64& rng) {
  // inverse-CDF sampling keeps the stream layout explicit (one variate per
  // draw) and independent of std::normal_distribution's algorithm
  double u = uniform01(rng);
  if (u <= 0.0) u = 0x1.0p-53;
  return normal_quantile(u);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % bound);
}

// Shortest decimal string that round-trips the value (std::to_chars);
// integers render without an exponent. Used by every text emitter so CSV
// output is bitwise reproducible.
std::string format_double(double v);

}  // namespace apulse
