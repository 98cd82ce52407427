#include "stablequad/rng.hpp"

namespace stablequad {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(root) ^ stream) ^ index);
}

Eigen::MatrixXd normal_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double std) {
  std::normal_distribution<double> dist(0.0, std);
  Eigen::MatrixXd out(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = dist(gen);
  return out;
}

}  // namespace stablequad
