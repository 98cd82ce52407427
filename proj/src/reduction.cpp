#include "stablequad/reduction.hpp"

#include <algorithm>
#include <functional>

#include "stablequad/error.hpp"

namespace stablequad {

namespace {

PodBasis truncated(const Eigen::BDCSVD<MatrixXd>& svd, Eigen::Index rank) {
  PodBasis basis;
  basis.singular_values = svd.singularValues();
  basis.V = svd.matrixU().leftCols(rank);
  const double total = basis.singular_values.squaredNorm();
  basis.energy_captured = total > 0.0 ? basis.singular_values.head(rank).squaredNorm() / total : 1.0;
  return basis;
}

}  // namespace

PodBasis pod_basis(const MatrixXd& Y, Eigen::Index rank) {
  if (rank < 1 || rank > std::min(Y.rows(), Y.cols())) {
    throw Error(ErrorCode::RankTooLarge, "requested rank " + std::to_string(rank) + " exceeds min(N, M) = " +
                                             std::to_string(std::min(Y.rows(), Y.cols())));
  }
  Eigen::BDCSVD<MatrixXd> svd(Y, Eigen::ComputeThinU);
  return truncated(svd, rank);
}

PodBasis pod_basis_energy(const MatrixXd& Y, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::ConfigError, "energy fraction must lie in (0, 1]");
  if (Y.size() == 0) throw Error(ErrorCode::RankTooLarge, "empty snapshot matrix");
  Eigen::BDCSVD<MatrixXd> svd(Y, Eigen::ComputeThinU);
  const VectorXd s2 = svd.singularValues().array().square();
  const double total = s2.sum();
  const Eigen::Index max_rank = std::min(Y.rows(), Y.cols());
  Eigen::Index rank = max_rank;
  double acc = 0.0;
  for (Eigen::Index r = 0; r < max_rank; ++r) {
    acc += s2(r);
    // Relative slack so an exactly attainable fraction is not missed to roundoff.
    if (acc >= fraction * total * (1.0 - 1e-12)) {
      rank = r + 1;
      break;
    }
  }
  return truncated(svd, rank);
}

PodBasis blockdiag_basis(const std::vector<PodBasis>& bases) {
  if (bases.empty()) throw Error(ErrorCode::ConfigError, "blockdiag_basis needs at least one basis");
  if (bases.size() == 1) return bases.front();
  Eigen::Index rows = 0, cols = 0, svs = 0;
  for (const PodBasis& b : bases) {
    rows += b.V.rows();
    cols += b.V.cols();
    svs += b.singular_values.size();
  }
  PodBasis out;
  out.V = MatrixXd::Zero(rows, cols);
  out.singular_values.resize(svs);
  double kept = 0.0, total = 0.0;
  Eigen::Index r = 0, c = 0, s = 0;
  for (const PodBasis& b : bases) {
    out.V.block(r, c, b.V.rows(), b.V.cols()) = b.V;
    out.singular_values.segment(s, b.singular_values.size()) = b.singular_values;
    kept += b.singular_values.head(b.V.cols()).squaredNorm();
    total += b.singular_values.squaredNorm();
    r += b.V.rows();
    c += b.V.cols();
    s += b.singular_values.size();
  }
  std::sort(out.singular_values.data(), out.singular_values.data() + svs, std::greater<double>());
  out.energy_captured = total > 0.0 ? kept / total : 1.0;
  return out;
}

MatrixXd project(const MatrixXd& Y, const PodBasis& basis) {
  if (Y.rows() != basis.V.rows()) throw Error(ErrorCode::ShapeMismatch, "project: snapshot height differs from basis");
  return basis.V.transpose() * Y;
}

MatrixXd unproject(const MatrixXd& X, const PodBasis& basis) {
  if (X.rows() != basis.V.cols()) throw Error(ErrorCode::ShapeMismatch, "unproject: reduced height differs from rank");
  return basis.V * X;
}

void check_orthonormal(const MatrixXd& V, double tol) {
  const MatrixXd G = V.transpose() * V - MatrixXd::Identity(V.cols(), V.cols());
  if (G.size() > 0 && G.cwiseAbs().maxCoeff() > tol) {
    throw Error(ErrorCode::ShapeMismatch, "basis columns are not orthonormal");
  }
}

double relative_l2(const MatrixXd& truth, const MatrixXd& learned, NormKind norm) {
  if (truth.rows() != learned.rows() || truth.cols() != learned.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "relative_l2: shapes differ");
  }
  auto measure = [norm](const MatrixXd& M) {
    return norm == NormKind::frobenius ? M.norm() : spectral_norm(M);
  };
  const double denom = measure(truth);
  if (denom == 0.0) throw Error(ErrorCode::ZeroTruth, "reference snapshots are identically zero");
  return measure(truth - learned) / denom;
}

}  // namespace stablequad
