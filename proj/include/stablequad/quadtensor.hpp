#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace stablequad {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Quadratic vector field  xdot = A x + H (x kron x) + B.
///
/// The Kronecker square is ordered lexicographically: entry n*i + j of
/// (x kron x) is x_i * x_j (zero-based), so column n*a + b of H multiplies
/// x_a * x_b.
struct QuadModel {
  MatrixXd A;  // n x n
  MatrixXd H;  // n x n^2
  VectorXd B;  // n

  QuadModel() = default;
  QuadModel(MatrixXd a, MatrixXd h, VectorXd b);

  static QuadModel zeros(Eigen::Index n);

  Eigen::Index dim() const { return A.rows(); }

  /// Throws ShapeMismatch when the operator shapes disagree.
  void validate() const;

  VectorXd rhs(const VectorXd& x) const;

  /// Column-wise evaluation on a batch of states (n x N).
  MatrixXd rhs(const MatrixXd& X) const;
};

/// Dense n x n x n array. Storage index is i + n*(j + n*k).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Eigen::Index n);

  Eigen::Index size() const { return n_; }

  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data_[static_cast<std::size_t>(i + n_ * (j + n_ * k))];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data_[static_cast<std::size_t>(i + n_ * (j + n_ * k))];
  }

  /// Inverse of matricize(T, 1).
  static Tensor3 from_mode1(const MatrixXd& unfolded);

 private:
  Eigen::Index n_ = 0;
  std::vector<double> data_;
};

VectorXd kron_squared(const VectorXd& x);

/// Column i of the result is kron_squared(X.col(i)).
MatrixXd colwise_kron(const MatrixXd& X);

/// Mode-1: out(i, j + n*k) = T(i,j,k).  Mode-2: out(j, i + n*k) = T(i,j,k).
/// Block k of matricize(T,1) is the frontal slice T(:,:,k); block k of
/// matricize(T,2) is its transpose.
MatrixXd matricize(const Tensor3& T, int mode);

/// max over i<=j<=k of |sum of the six permuted entries H_{ijk}|, where
/// H_{ijk} = e_i^T H (e_j kron e_k).
double index_condition_residual(const MatrixXd& H);

/// max(|x^T H (x kron x)| over sampled unit x, index_condition_residual(H)).
double energy_preserving_residual(const MatrixXd& H, int num_samples = 200,
                                  std::uint64_t seed = 0);

/// Same test on Q H, so xdot's quadratic part conserves x^T Q x.
/// Throws NonSPD when Q fails the symmetry/positivity precondition.
double gen_energy_preserving_residual(const MatrixXd& H, const MatrixXd& Q,
                                      int num_samples = 200, std::uint64_t seed = 0);

struct SkewFormOptions {
  double precondition_tol = 1e-8;
  double solve_tol = 1e-6;
};

/// Re-expresses an energy-preserving H as [H_1, ..., H_n] with skew blocks
/// and the same action on x kron x. Minimum-norm least-squares solution of
/// the action-equivalence and skew constraints.
MatrixXd to_skew_form(const MatrixXd& H, const SkewFormOptions& opts = {});

/// Generalized variant: returns [G_1 Q, ..., G_n Q] with G_i skew.
MatrixXd to_skew_form_general(const MatrixXd& H, const MatrixXd& Q,
                              const SkewFormOptions& opts = {});

/// Averages the (i,j) and (j,i) columns so Hs(e_i kron e_j) = Hs(e_j kron e_i).
MatrixXd symmetrize_H(const MatrixXd& H);

/// H (I kron m), an n x n matrix: maps x to H (x kron m).
MatrixXd h_times_kron_right(const MatrixXd& H, const VectorXd& m);

/// H (m kron I): maps x to H (m kron x).
MatrixXd h_times_kron_left(const MatrixXd& H, const VectorXd& m);

/// Largest symmetric residual |Q - Q^T| and smallest eigenvalue must pass;
/// throws NonSPD otherwise.
void require_spd(const MatrixXd& Q, const char* what = "Q");

/// Max over blocks of max |H_i + H_i^T|.
double block_skewness_residual(const MatrixXd& H);

/// Largest singular value.
double spectral_norm(const MatrixXd& M);

}  // namespace stablequad
