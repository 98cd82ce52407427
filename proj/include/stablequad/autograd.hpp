#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stablequad/odesim.hpp"
#include "stablequad/quadtensor.hpp"

namespace stablequad {

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so the node list is already topologically sorted and backward()
/// walks it once in reverse. Scalars are 1 x 1 matrices.
class Tape {
 public:
  using Id = int;

  Id constant(MatrixXd value);
  Id parameter(MatrixXd value);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id transpose(Id a);
  Id scale(Id a, double s);
  /// Elementwise product with a fixed matrix.
  Id mask(Id a, const MatrixXd& m);
  /// X (n x N) plus / minus the column vector v (n x 1) in every column.
  Id add_col(Id X, Id v);
  Id sub_col(Id X, Id v);
  /// Column-wise Kronecker square, n x N -> n^2 x N.
  Id colwise_kron(Id X);
  Id frobenius_sq(Id a);
  /// frobenius_sq / number of entries.
  Id mean_sq(Id a);
  /// Mean absolute value; the subgradient at 0 is 0.
  Id l1_mean(Id a);
  /// Mode-1 minus mode-2 unfolding from the mode-1 unfolding T1 (n x n^2):
  /// out(i, j + n k) = T1(i, j + n k) - T1(j, i + n k).
  Id skew_unfold(Id T1);
  /// Multiplies every n x n block of H (n x n^2) on the right by Q.
  Id block_right_mul(Id H, Id Q);
  /// One batched RK4 step of xdot = A x + H (x kron x) + B on the columns of X.
  /// The forward pass calls the odesim routine, so values match it exactly.
  Id rk4(Id A, Id H, Id B, Id X, double dt);
  /// A X + H (X kron X) + B, column-wise.
  Id quad_rhs(Id A, Id H, Id B, Id X);

  const MatrixXd& value(Id id) const;
  double scalar(Id id) const;

  /// Seeds d(out)/d(out) = 1 and accumulates gradients into every node.
  void backward(Id out);
  /// Gradient of the last backward() output with respect to a node.
  const MatrixXd& grad(Id id) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Kind {
    constant, parameter, matmul, add, sub, transpose, scale, mask, add_col, sub_col,
    colwise_kron, frobenius_sq, mean_sq, l1_mean, skew_unfold, block_right_mul, rk4, quad_rhs
  };
  struct Node {
    Kind kind;
    std::vector<Id> inputs;
    MatrixXd value;
    MatrixXd grad;
    MatrixXd aux;   // mask, or cached colwise_kron
    double scalar_arg = 0.0;
    Rk4Trace trace;
  };

  Id push(Kind kind, std::vector<Id> inputs, MatrixXd value);
  void check(Id id) const;
  void accumulate(Id id, const MatrixXd& g);
  /// Adjoint of f(S) = A S + H (S kron S) + B for output cotangent W.
  void rhs_adjoint(const MatrixXd& A, const MatrixXd& H, const MatrixXd& S, const MatrixXd& W,
                   MatrixXd& dA, MatrixXd& dH, MatrixXd& dB, MatrixXd& dS) const;

  std::vector<Node> nodes_;
};

/// loss(params, grads): returns the loss and, when grads is non-null, fills
/// one gradient per parameter.
using LossFn = std::function<double(const std::vector<MatrixXd>&, std::vector<MatrixXd>*)>;

/// Max relative error between the analytic directional derivative and a
/// central difference, over random unit directions in the joint parameter
/// space.
double grad_check(const LossFn& loss, const std::vector<MatrixXd>& params, double eps,
                  int directions = 20, std::uint64_t seed = 0);

}  // namespace stablequad
