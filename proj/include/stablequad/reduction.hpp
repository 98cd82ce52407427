#pragma once

#include <vector>

#include "stablequad/quadtensor.hpp"

namespace stablequad {

struct PodBasis {
  MatrixXd V;                // N x r, orthonormal columns
  VectorXd singular_values;  // full spectrum, descending
  double energy_captured = 0.0;

  Eigen::Index rank() const { return V.cols(); }
};

/// Leading r left singular vectors of Y.
PodBasis pod_basis(const MatrixXd& Y, Eigen::Index rank);
/// Smallest rank whose squared singular values reach `fraction` of the total.
PodBasis pod_basis_energy(const MatrixXd& Y, double fraction);

/// diag(V_1, ..., V_k), so coordinates of different channels never mix.
PodBasis blockdiag_basis(const std::vector<PodBasis>& bases);

MatrixXd project(const MatrixXd& Y, const PodBasis& basis);
MatrixXd unproject(const MatrixXd& X, const PodBasis& basis);

/// Throws ShapeMismatch unless V^T V = I to tol.
void check_orthonormal(const MatrixXd& V, double tol = 1e-10);

enum class NormKind { frobenius, spectral };

/// ||X_truth - X_learned|| / ||X_truth||. Throws ZeroTruth for a zero truth.
double relative_l2(const MatrixXd& truth, const MatrixXd& learned, NormKind norm = NormKind::frobenius);

}  // namespace stablequad
