#include "stablequad/quadtensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "stablequad/error.hpp"

namespace stablequad {

QuadModel::QuadModel(MatrixXd a, MatrixXd h, VectorXd b)
    : A(std::move(a)), H(std::move(h)), B(std::move(b)) {
  validate();
}

QuadModel QuadModel::zeros(Eigen::Index n) {
  return QuadModel(MatrixXd::Zero(n, n), MatrixXd::Zero(n, n * n), VectorXd::Zero(n));
}

void QuadModel::validate() const {
  const Eigen::Index n = A.rows();
  if (n < 1 || A.cols() != n || H.rows() != n || H.cols() != n * n || B.size() != n) {
    throw Error(ErrorCode::ShapeMismatch,
                "QuadModel expects A n x n, H n x n^2, B n; got A " +
                    std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + ", H " +
                    std::to_string(H.rows()) + "x" + std::to_string(H.cols()) + ", B " +
                    std::to_string(B.size()));
  }
}

VectorXd QuadModel::rhs(const VectorXd& x) const {
  MatrixXd X = x;
  return rhs(X).col(0);
}

MatrixXd QuadModel::rhs(const MatrixXd& X) const {
  MatrixXd out = A * X;
  out.noalias() += H * colwise_kron(X);
  out.colwise() += B;
  return out;
}

Tensor3::Tensor3(Eigen::Index n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

Tensor3 Tensor3::from_mode1(const MatrixXd& unfolded) {
  const Eigen::Index n = unfolded.rows();
  if (unfolded.cols() != n * n) {
    throw Error(ErrorCode::ShapeMismatch, "mode-1 unfolding must be n x n^2");
  }
  Tensor3 T(n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) T(i, j, k) = unfolded(i, j + n * k);
  return T;
}

VectorXd kron_squared(const VectorXd& x) {
  const Eigen::Index n = x.size();
  VectorXd out(n * n);
  for (Eigen::Index i = 0; i < n; ++i) out.segment(n * i, n) = x(i) * x;
  return out;
}

MatrixXd colwise_kron(const MatrixXd& X) {
  const Eigen::Index n = X.rows();
  MatrixXd out(n * n, X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = X(i, c);
      for (Eigen::Index j = 0; j < n; ++j) out(n * i + j, c) = xi * X(j, c);
    }
  }
  return out;
}

MatrixXd matricize(const Tensor3& T, int mode) {
  const Eigen::Index n = T.size();
  MatrixXd out(n, n * n);
  if (mode == 1) {
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j + n * k) = T(i, j, k);
  } else if (mode == 2) {
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(j, i + n * k) = T(i, j, k);
  } else {
    throw Error(ErrorCode::ConfigError, "matricize mode must be 1 or 2");
  }
  return out;
}

namespace {

void require_square_h(const MatrixXd& H) {
  if (H.cols() != H.rows() * H.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "H must be n x n^2");
  }
}

double sampled_cubic_residual(const MatrixXd& W, int num_samples, std::uint64_t seed) {
  // W plays the role of (Q) H; the residual is |x^T W (x kron x)|.
  const Eigen::Index n = W.rows();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  VectorXd x(n);
  for (int s = 0; s < num_samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = normal(gen);
    const double norm = x.norm();
    if (norm == 0.0) continue;
    x /= norm;
    worst = std::max(worst, std::abs(x.dot(W * kron_squared(x))));
  }
  return worst;
}

}  // namespace

double index_condition_residual(const MatrixXd& H) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  auto h = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k) { return H(i, n * j + k); };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      for (Eigen::Index k = j; k < n; ++k) {
        const double s = h(i, j, k) + h(i, k, j) + h(j, i, k) + h(j, k, i) + h(k, i, j) + h(k, j, i);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

double energy_preserving_residual(const MatrixXd& H, int num_samples, std::uint64_t seed) {
  require_square_h(H);
  if (num_samples < 1) throw Error(ErrorCode::ConfigError, "num_samples must be >= 1");
  return std::max(sampled_cubic_residual(H, num_samples, seed), index_condition_residual(H));
}

double gen_energy_preserving_residual(const MatrixXd& H, const MatrixXd& Q, int num_samples,
                                      std::uint64_t seed) {
  require_square_h(H);
  if (Q.rows() != H.rows() || Q.cols() != H.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "Q must be n x n");
  }
  require_spd(Q);
  const MatrixXd QH = Q * H;
  return energy_preserving_residual(QH, num_samples, seed);
}

void require_spd(const MatrixXd& Q, const char* what) {
  if (Q.rows() != Q.cols()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be square");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (!(asym < 1e-10 * scale)) {
    throw Error(ErrorCode::NonSPD, std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorCode::NonSPD, std::string(what) + " is not positive definite");
  }
}

namespace {

struct Position {
  Eigen::Index row, block, col;
  bool operator==(const Position& o) const {
    return row == o.row && block == o.block && col == o.col;
  }
};

}  // namespace

MatrixXd to_skew_form(const MatrixXd& H, const SkewFormOptions& opts) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (!(energy_preserving_residual(H) < opts.precondition_tol * scale)) {
    throw Error(ErrorCode::NotEnergyPreserving, "to_skew_form requires an energy-preserving H");
  }

  // Action equivalence and block skewness only couple entries whose index
  // multiset {row, block, col} coincides, so the stacked system is block
  // diagonal with blocks of at most 6 unknowns.
  MatrixXd out = MatrixXd::Zero(n, n * n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p; q < n; ++q)
      for (Eigen::Index r = q; r < n; ++r) {
        std::array<Eigen::Index, 3> idx{p, q, r};
        std::vector<Position> unknowns;
        std::sort(idx.begin(), idx.end());
        do {
          Position pos{idx[0], idx[1], idx[2]};
          if (std::find(unknowns.begin(), unknowns.end(), pos) == unknowns.end())
            unknowns.push_back(pos);
        } while (std::next_permutation(idx.begin(), idx.end()));

        auto local = [&](const Position& pos) {
          return static_cast<Eigen::Index>(
              std::find(unknowns.begin(), unknowns.end(), pos) - unknowns.begin());
        };

        std::vector<Eigen::VectorXd> rows;
        std::vector<double> rhs;
        std::array<Eigen::Index, 3> vals{p, q, r};
        // Each distinct value takes the role of the free index once; the
        // remaining two form the symmetric pair.
        for (int lead = 0; lead < 3; ++lead) {
          if (lead > 0 && vals[lead] == vals[lead - 1]) continue;
          Eigen::Index i = vals[(lead + 1) % 3], j = vals[(lead + 2) % 3];
          const Eigen::Index k = vals[lead];

          Eigen::VectorXd action = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns.size()));
          action(local({k, i, j})) += 1.0;
          action(local({k, j, i})) += 1.0;
          rows.push_back(action);
          rhs.push_back(H(k, n * i + j) + H(k, n * j + i));

          Eigen::VectorXd skew = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns.size()));
          skew(local({i, k, j})) += 1.0;
          skew(local({j, k, i})) += 1.0;
          rows.push_back(skew);
          rhs.push_back(0.0);
        }

        MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(unknowns.size()));
        VectorXd b(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t s = 0; s < rows.size(); ++s) {
          M.row(static_cast<Eigen::Index>(s)) = rows[s].transpose();
          b(static_cast<Eigen::Index>(s)) = rhs[s];
        }
        const VectorXd sol = M.completeOrthogonalDecomposition().solve(b);
        const double resid = (M * sol - b).cwiseAbs().maxCoeff();
        if (!(resid <= opts.solve_tol * scale)) {
          throw Error(ErrorCode::SolveFailed, "skew-form linear system residual " + std::to_string(resid));
        }
        for (std::size_t u = 0; u < unknowns.size(); ++u) {
          const Position& pos = unknowns[u];
          out(pos.row, n * pos.block + pos.col) = sol(static_cast<Eigen::Index>(u));
        }
      }
  return out;
}

MatrixXd to_skew_form_general(const MatrixXd& H, const MatrixXd& Q, const SkewFormOptions& opts) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  if (Q.rows() != n || Q.cols() != n) throw Error(ErrorCode::ShapeMismatch, "Q must be n x n");
  require_spd(Q);
  const double scale = std::max(1.0, (Q * H).cwiseAbs().maxCoeff());
  if (!(gen_energy_preserving_residual(H, Q) < opts.precondition_tol * scale)) {
    throw Error(ErrorCode::NotEnergyPreserving,
                "to_skew_form_general requires x^T Q H (x kron x) = 0");
  }

  // Q = L^T L with L upper triangular.
  const Eigen::LLT<MatrixXd> llt(0.5 * (Q + Q.transpose()));
  const MatrixXd L = llt.matrixU();
  const MatrixXd Linv = L.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n));

  // Hhat = L H (L^-1 kron L^-1) is energy-preserving in the coordinates L x.
  MatrixXd kron_inv(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) kron_inv.block(n * a, n * b, n, n) = Linv(a, b) * Linv;
  const MatrixXd Hhat = L * H * kron_inv;
  const MatrixXd J = to_skew_form(Hhat, opts);

  // H (x kron x) = sum_b x_b G_b Q x with G_b = sum_a L(a,b) Linv J_a Linv^T.
  std::vector<MatrixXd> Jhat(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a)
    Jhat[static_cast<std::size_t>(a)] = Linv * J.middleCols(n * a, n) * Linv.transpose();
  MatrixXd out(n, n * n);
  for (Eigen::Index b = 0; b < n; ++b) {
    MatrixXd G = MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) G += L(a, b) * Jhat[static_cast<std::size_t>(a)];
    out.middleCols(n * b, n) = G * Q;
  }
  return out;
}

MatrixXd symmetrize_H(const MatrixXd& H) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  MatrixXd out = H;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const VectorXd avg = 0.5 * (H.col(n * i + j) + H.col(n * j + i));
      out.col(n * i + j) = avg;
      out.col(n * j + i) = avg;
    }
  return out;
}

MatrixXd h_times_kron_right(const MatrixXd& H, const VectorXd& m) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) out.col(a) = H.middleCols(n * a, n) * m;
  return out;
}

MatrixXd h_times_kron_left(const MatrixXd& H, const VectorXd& m) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  MatrixXd out = MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) out += m(a) * H.middleCols(n * a, n);
  return out;
}

double block_skewness_residual(const MatrixXd& H) {
  require_square_h(H);
  const Eigen::Index n = H.rows();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const MatrixXd blk = H.middleCols(n * a, n);
    worst = std::max(worst, (blk + blk.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace stablequad
