#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "planckwave/error.hpp"
#include "planckwave/lattice.hpp"

namespace planckwave {

/// I.i.d. N(0, 1/N) coefficients of a random wave.
struct CoefficientVector {
  Eigen::VectorXd c;
  std::uint64_t seed = 0;
  double sigma_sq = 0.0;

  Eigen::Index size() const { return c.size(); }
};

/// Counter-based seed derivation: the seed of draw `index` in stream `stream`
/// depends only on (master, stream, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline CoefficientVector sample_coefficients(Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("coefficient count must be >= 1");
  std::mt19937_64 engine(seed);
  const double sigma_sq = 1.0 / static_cast<double>(count);
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma_sq));
  CoefficientVector out{Eigen::VectorXd(count), seed, sigma_sq};
  for (Eigen::Index j = 0; j < count; ++j) out.c[j] = normal(engine);
  return out;
}

inline CoefficientVector sample_coefficients(const MomentumLattice& lattice, std::uint64_t seed) {
  return sample_coefficients(lattice.size(), seed);
}

}  // namespace planckwave
