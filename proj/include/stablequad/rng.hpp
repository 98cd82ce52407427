#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace stablequad {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Independent seed for (stream, index) under a root seed, so every
/// consumer of randomness gets its own reproducible generator.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

/// Stream ids for derive_seed.
enum SeedStream : std::uint64_t {
  kStreamNoise = 1,
  kStreamInit = 2,
  kStreamSweep = 3,
  kStreamSampling = 4,
};

/// i.i.d. normal(0, std) matrix.
Eigen::MatrixXd normal_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double std = 1.0);

}  // namespace stablequad
