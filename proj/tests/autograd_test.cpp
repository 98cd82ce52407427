#include <random>

#include <gtest/gtest.h>

#include "stablequad/autograd.hpp"
#include "stablequad/error.hpp"
#include "stablequad/rng.hpp"

using namespace stablequad;

namespace {

// Builds a scalar from parameters on a fresh tape; used to get a LossFn for
// grad_check out of any op composition.
using Builder = std::function<Tape::Id(Tape&, const std::vector<Tape::Id>&)>;

LossFn tape_loss(Builder build) {
  return [build](const std::vector<MatrixXd>& params, std::vector<MatrixXd>* grads) {
    Tape t;
    std::vector<Tape::Id> ids;
    for (const MatrixXd& p : params) ids.push_back(t.parameter(p));
    const Tape::Id out = build(t, ids);
    if (grads) {
      t.backward(out);
      grads->clear();
      for (Tape::Id id : ids) grads->push_back(t.grad(id));
    }
    return t.scalar(out);
  };
}

}  // namespace

TEST(Tape, QuadraticFormGradient) {
  // d/dA ||A x||^2 = 2 (A x) x^T; A = I, x = (1, 2) gives [[2, 4], [4, 8]].
  Tape t;
  const auto A = t.parameter(MatrixXd::Identity(2, 2));
  MatrixXd x(2, 1);
  x << 1, 2;
  const auto out = t.frobenius_sq(t.matmul(A, t.constant(x)));
  EXPECT_DOUBLE_EQ(t.scalar(out), 5.0);
  t.backward(out);
  MatrixXd expected(2, 2);
  expected << 2, 4, 4, 8;
  EXPECT_EQ(t.grad(A), expected);
}

TEST(Tape, FrobeniusGradient) {
  Tape t;
  MatrixXd x(2, 1);
  x << 3, -4;
  const auto p = t.parameter(x);
  const auto out = t.frobenius_sq(p);
  EXPECT_DOUBLE_EQ(t.scalar(out), 25.0);
  t.backward(out);
  EXPECT_DOUBLE_EQ(t.grad(p)(0), 6.0);
  EXPECT_DOUBLE_EQ(t.grad(p)(1), -8.0);
}

TEST(Tape, L1SubgradientAtZero) {
  Tape t;
  MatrixXd x(1, 3);
  x << -2, 0, 1;
  const auto p = t.parameter(x);
  const auto out = t.l1_mean(p);
  EXPECT_DOUBLE_EQ(t.scalar(out), 1.0);
  t.backward(out);
  EXPECT_DOUBLE_EQ(t.grad(p)(0), -1.0 / 3);
  EXPECT_DOUBLE_EQ(t.grad(p)(1), 0.0);
  EXPECT_DOUBLE_EQ(t.grad(p)(2), 1.0 / 3);
}

TEST(Tape, ReusedNodeAccumulates) {
  Tape t;
  const auto p = t.parameter(MatrixXd::Constant(1, 1, 3.0));
  const auto out = t.frobenius_sq(t.add(p, p));  // (2p)^2
  t.backward(out);
  EXPECT_DOUBLE_EQ(t.grad(p)(0), 24.0);
}

TEST(Tape, ShapeMismatchThrows) {
  Tape t;
  const auto a = t.parameter(MatrixXd::Zero(2, 3));
  const auto b = t.parameter(MatrixXd::Zero(2, 3));
  try {
    t.matmul(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Tape, SkewUnfoldMatchesDefinition) {
  std::mt19937_64 gen(21);
  const Eigen::Index n = 3;
  const MatrixXd T1 = normal_matrix(gen, n, n * n);
  Tape t;
  const MatrixXd S = t.value(t.skew_unfold(t.constant(T1)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) EXPECT_EQ(S(i, j + n * k), T1(i, j + n * k) - T1(j, i + n * k));
}

TEST(GradCheck, ElementaryOps) {
  std::mt19937_64 gen(22);
  const Eigen::Index n = 3, N = 5;
  const std::vector<MatrixXd> p{normal_matrix(gen, n, n), normal_matrix(gen, n, N), normal_matrix(gen, n, 1)};
  const MatrixXd M = normal_matrix(gen, n, N);
  auto loss = tape_loss([&](Tape& t, const std::vector<Tape::Id>& v) {
    const auto AX = t.matmul(v[0], v[1]);
    const auto a = t.add_col(t.mask(AX, M), v[2]);
    const auto b = t.sub_col(t.scale(t.transpose(t.transpose(AX)), -0.7), v[2]);
    const auto c = t.sub(a, b);
    return t.add(t.mean_sq(c), t.frobenius_sq(t.colwise_kron(v[1])));
  });
  EXPECT_LT(grad_check(loss, p, 1e-6, 20, 1), 1e-6);
}

TEST(GradCheck, SkewUnfoldAndBlockRightMul) {
  std::mt19937_64 gen(23);
  const Eigen::Index n = 3;
  const std::vector<MatrixXd> p{normal_matrix(gen, n, n * n), normal_matrix(gen, n, n)};
  const MatrixXd W = normal_matrix(gen, n, n * n);
  auto loss = tape_loss([&](Tape& t, const std::vector<Tape::Id>& v) {
    const auto Q = t.matmul(v[1], t.transpose(v[1]));
    const auto H = t.block_right_mul(t.skew_unfold(v[0]), Q);
    return t.frobenius_sq(t.sub(H, t.constant(W)));
  });
  EXPECT_LT(grad_check(loss, p, 1e-6, 20, 2), 1e-6);
}

TEST(GradCheck, QuadRhs) {
  std::mt19937_64 gen(24);
  const Eigen::Index n = 3, N = 7;
  const std::vector<MatrixXd> p{normal_matrix(gen, n, n), normal_matrix(gen, n, n * n), normal_matrix(gen, n, 1),
                                normal_matrix(gen, n, N)};
  const MatrixXd Y = normal_matrix(gen, n, N);
  auto loss = tape_loss([&](Tape& t, const std::vector<Tape::Id>& v) {
    return t.mean_sq(t.sub(t.quad_rhs(v[0], v[1], v[2], v[3]), t.constant(Y)));
  });
  EXPECT_LT(grad_check(loss, p, 1e-6, 20, 3), 1e-6);
}

TEST(GradCheck, Rk4Step) {
  std::mt19937_64 gen(25);
  const Eigen::Index n = 3, N = 6;
  const std::vector<MatrixXd> p{normal_matrix(gen, n, n), normal_matrix(gen, n, n * n, 0.3), normal_matrix(gen, n, 1),
                                normal_matrix(gen, n, N)};
  const MatrixXd Y = normal_matrix(gen, n, N);
  auto loss = tape_loss([&](Tape& t, const std::vector<Tape::Id>& v) {
    return t.mean_sq(t.sub(t.rk4(v[0], v[1], v[2], v[3], 0.05), t.constant(Y)));
  });
  EXPECT_LT(grad_check(loss, p, 1e-6, 20, 4), 1e-6);
}

TEST(GradCheck, ForwardMatchesOdesim) {
  std::mt19937_64 gen(26);
  const Eigen::Index n = 3;
  const QuadModel m(normal_matrix(gen, n, n), normal_matrix(gen, n, n * n), normal_matrix(gen, n, 1).col(0));
  const MatrixXd X = normal_matrix(gen, n, 4);
  Tape t;
  const auto out = t.rk4(t.constant(m.A), t.constant(m.H), t.constant(MatrixXd(m.B)), t.constant(X), 0.1);
  EXPECT_EQ(t.value(out), rk4_step(m, X, 0.1));
}

TEST(GradCheck, DetectsWrongGradient) {
  LossFn wrong = [](const std::vector<MatrixXd>& p, std::vector<MatrixXd>* g) {
    if (g) *g = {3.0 * p[0]};
    return p[0].squaredNorm();
  };
  EXPECT_GT(grad_check(wrong, {MatrixXd::Ones(2, 2)}, 1e-6), 0.1);
}

TEST(GradCheck, EpsOutOfRange) {
  LossFn f = [](const std::vector<MatrixXd>& p, std::vector<MatrixXd>* g) {
    if (g) *g = {2.0 * p[0]};
    return p[0].squaredNorm();
  };
  EXPECT_THROW(grad_check(f, {MatrixXd::Ones(1, 1)}, 1.0), Error);
  EXPECT_THROW(grad_check(f, {MatrixXd::Ones(1, 1)}, 1e-12), Error);
}
