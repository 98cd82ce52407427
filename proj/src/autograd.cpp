#include "stablequad/autograd.hpp"

#include <cmath>
#include <random>

#include "stablequad/error.hpp"
#include "stablequad/rng.hpp"

namespace stablequad {

namespace {

void require_same_shape(const MatrixXd& a, const MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

Eigen::Index block_size(const MatrixXd& H, const char* op) {
  const Eigen::Index n = H.rows();
  if (H.cols() != n * n) throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": expected n x n^2");
  return n;
}

}  // namespace

Tape::Id Tape::push(Kind kind, std::vector<Id> inputs, MatrixXd value) {
  Node node;
  node.kind = kind;
  node.inputs = std::move(inputs);
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check(Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tape: unknown node id");
  }
}

Tape::Id Tape::constant(MatrixXd value) { return push(Kind::constant, {}, std::move(value)); }

Tape::Id Tape::parameter(MatrixXd value) { return push(Kind::parameter, {}, std::move(value)); }

Tape::Id Tape::matmul(Id a, Id b) {
  check(a);
  check(b);
  const MatrixXd& va = nodes_[a].value;
  const MatrixXd& vb = nodes_[b].value;
  if (va.cols() != vb.rows()) throw Error(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
  MatrixXd out = va * vb;
  return push(Kind::matmul, {a, b}, std::move(out));
}

Tape::Id Tape::add(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "add");
  MatrixXd out = nodes_[a].value + nodes_[b].value;
  return push(Kind::add, {a, b}, std::move(out));
}

Tape::Id Tape::sub(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "sub");
  MatrixXd out = nodes_[a].value - nodes_[b].value;
  return push(Kind::sub, {a, b}, std::move(out));
}

Tape::Id Tape::transpose(Id a) {
  check(a);
  MatrixXd out = nodes_[a].value.transpose();
  return push(Kind::transpose, {a}, std::move(out));
}

Tape::Id Tape::scale(Id a, double s) {
  check(a);
  MatrixXd out = s * nodes_[a].value;
  Id id = push(Kind::scale, {a}, std::move(out));
  nodes_[id].scalar_arg = s;
  return id;
}

Tape::Id Tape::mask(Id a, const MatrixXd& m) {
  check(a);
  require_same_shape(nodes_[a].value, m, "mask");
  MatrixXd out = nodes_[a].value.cwiseProduct(m);
  Id id = push(Kind::mask, {a}, std::move(out));
  nodes_[id].aux = m;
  return id;
}

Tape::Id Tape::add_col(Id X, Id v) {
  check(X);
  check(v);
  const MatrixXd& vv = nodes_[v].value;
  if (vv.cols() != 1 || vv.rows() != nodes_[X].value.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "add_col: expected a matching column vector");
  }
  MatrixXd out = nodes_[X].value;
  out.colwise() += vv.col(0);
  return push(Kind::add_col, {X, v}, std::move(out));
}

Tape::Id Tape::sub_col(Id X, Id v) {
  check(X);
  check(v);
  const MatrixXd& vv = nodes_[v].value;
  if (vv.cols() != 1 || vv.rows() != nodes_[X].value.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "sub_col: expected a matching column vector");
  }
  MatrixXd out = nodes_[X].value;
  out.colwise() -= vv.col(0);
  return push(Kind::sub_col, {X, v}, std::move(out));
}

Tape::Id Tape::colwise_kron(Id X) {
  check(X);
  MatrixXd out = stablequad::colwise_kron(nodes_[X].value);
  return push(Kind::colwise_kron, {X}, std::move(out));
}

Tape::Id Tape::frobenius_sq(Id a) {
  check(a);
  MatrixXd out(1, 1);
  out(0, 0) = nodes_[a].value.squaredNorm();
  return push(Kind::frobenius_sq, {a}, std::move(out));
}

Tape::Id Tape::mean_sq(Id a) {
  check(a);
  const MatrixXd& v = nodes_[a].value;
  if (v.size() == 0) throw Error(ErrorCode::ShapeMismatch, "mean_sq of an empty matrix");
  MatrixXd out(1, 1);
  out(0, 0) = v.squaredNorm() / static_cast<double>(v.size());
  return push(Kind::mean_sq, {a}, std::move(out));
}

Tape::Id Tape::l1_mean(Id a) {
  check(a);
  const MatrixXd& v = nodes_[a].value;
  if (v.size() == 0) throw Error(ErrorCode::ShapeMismatch, "l1_mean of an empty matrix");
  MatrixXd out(1, 1);
  out(0, 0) = v.cwiseAbs().sum() / static_cast<double>(v.size());
  return push(Kind::l1_mean, {a}, std::move(out));
}

Tape::Id Tape::skew_unfold(Id T1) {
  check(T1);
  const MatrixXd& t = nodes_[T1].value;
  const Eigen::Index n = block_size(t, "skew_unfold");
  MatrixXd out(n, n * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.middleCols(n * k, n) = t.middleCols(n * k, n) - t.middleCols(n * k, n).transpose();
  }
  return push(Kind::skew_unfold, {T1}, std::move(out));
}

Tape::Id Tape::block_right_mul(Id H, Id Q) {
  check(H);
  check(Q);
  const MatrixXd& h = nodes_[H].value;
  const MatrixXd& q = nodes_[Q].value;
  const Eigen::Index n = block_size(h, "block_right_mul");
  if (q.rows() != n || q.cols() != n) throw Error(ErrorCode::ShapeMismatch, "block_right_mul: Q must be n x n");
  MatrixXd out(n, n * n);
  for (Eigen::Index k = 0; k < n; ++k) out.middleCols(n * k, n) = h.middleCols(n * k, n) * q;
  return push(Kind::block_right_mul, {H, Q}, std::move(out));
}

namespace {

QuadModel model_from(const MatrixXd& A, const MatrixXd& H, const MatrixXd& B, const MatrixXd& X) {
  if (B.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "B must be a column vector");
  QuadModel model(A, H, B.col(0));
  if (X.rows() != model.dim()) throw Error(ErrorCode::ShapeMismatch, "state batch has the wrong height");
  return model;
}

}  // namespace

Tape::Id Tape::rk4(Id A, Id H, Id B, Id X, double dt) {
  for (Id id : {A, H, B, X}) check(id);
  const QuadModel model = model_from(nodes_[A].value, nodes_[H].value, nodes_[B].value, nodes_[X].value);
  Rk4Trace trace;
  MatrixXd out = rk4_step(model, nodes_[X].value, dt, &trace);
  Id id = push(Kind::rk4, {A, H, B, X}, std::move(out));
  nodes_[id].scalar_arg = dt;
  nodes_[id].trace = std::move(trace);
  return id;
}

Tape::Id Tape::quad_rhs(Id A, Id H, Id B, Id X) {
  for (Id id : {A, H, B, X}) check(id);
  const QuadModel model = model_from(nodes_[A].value, nodes_[H].value, nodes_[B].value, nodes_[X].value);
  MatrixXd out = model.rhs(nodes_[X].value);
  return push(Kind::quad_rhs, {A, H, B, X}, std::move(out));
}

const MatrixXd& Tape::value(Id id) const {
  check(id);
  return nodes_[id].value;
}

double Tape::scalar(Id id) const {
  const MatrixXd& v = value(id);
  if (v.size() != 1) throw Error(ErrorCode::ShapeMismatch, "node is not a scalar");
  return v(0, 0);
}

const MatrixXd& Tape::grad(Id id) const {
  check(id);
  return nodes_[id].grad;
}

void Tape::accumulate(Id id, const MatrixXd& g) {
  MatrixXd& dst = nodes_[id].grad;
  if (dst.size() == 0) {
    dst = g;
  } else {
    dst += g;
  }
}

void Tape::rhs_adjoint(const MatrixXd& A, const MatrixXd& H, const MatrixXd& S, const MatrixXd& W,
                       MatrixXd& dA, MatrixXd& dH, MatrixXd& dB, MatrixXd& dS) const {
  const Eigen::Index n = S.rows();
  dA.noalias() += W * S.transpose();
  dH.noalias() += W * stablequad::colwise_kron(S).transpose();
  dB.col(0) += W.rowwise().sum();
  // d/ds of H (s kron s) applied to w is (M + M^T) s with M(i, j) = (H^T w)(n i + j).
  const MatrixXd G = H.transpose() * W;
  dS.noalias() = A.transpose() * W;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dS.row(i) += (G.row(n * i + j) + G.row(n * j + i)).cwiseProduct(S.row(j));
    }
  }
}

void Tape::backward(Id out) {
  check(out);
  if (nodes_[out].value.size() != 1) throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar output");
  for (Node& node : nodes_) node.grad.resize(0, 0);
  nodes_[out].grad = MatrixXd::Ones(1, 1);

  for (Id id = out; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0) continue;
    const MatrixXd g = node.grad;
    const std::vector<Id>& in = node.inputs;
    switch (node.kind) {
      case Kind::constant:
      case Kind::parameter:
        break;
      case Kind::matmul:
        accumulate(in[0], g * nodes_[in[1]].value.transpose());
        accumulate(in[1], nodes_[in[0]].value.transpose() * g);
        break;
      case Kind::add:
        accumulate(in[0], g);
        accumulate(in[1], g);
        break;
      case Kind::sub:
        accumulate(in[0], g);
        accumulate(in[1], -g);
        break;
      case Kind::transpose:
        accumulate(in[0], g.transpose());
        break;
      case Kind::scale:
        accumulate(in[0], node.scalar_arg * g);
        break;
      case Kind::mask:
        accumulate(in[0], g.cwiseProduct(node.aux));
        break;
      case Kind::add_col:
        accumulate(in[0], g);
        accumulate(in[1], g.rowwise().sum());
        break;
      case Kind::sub_col:
        accumulate(in[0], g);
        accumulate(in[1], -g.rowwise().sum());
        break;
      case Kind::colwise_kron: {
        const MatrixXd& X = nodes_[in[0]].value;
        const Eigen::Index n = X.rows();
        MatrixXd dX = MatrixXd::Zero(n, X.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) {
            dX.row(i) += (g.row(n * i + j) + g.row(n * j + i)).cwiseProduct(X.row(j));
          }
        }
        accumulate(in[0], dX);
        break;
      }
      case Kind::frobenius_sq:
        accumulate(in[0], (2.0 * g(0, 0)) * nodes_[in[0]].value);
        break;
      case Kind::mean_sq: {
        const MatrixXd& v = nodes_[in[0]].value;
        accumulate(in[0], (2.0 * g(0, 0) / static_cast<double>(v.size())) * v);
        break;
      }
      case Kind::l1_mean: {
        const MatrixXd& v = nodes_[in[0]].value;
        const MatrixXd sign = v.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
        accumulate(in[0], (g(0, 0) / static_cast<double>(v.size())) * sign);
        break;
      }
      case Kind::skew_unfold: {
        const Eigen::Index n = g.rows();
        MatrixXd dT(n, n * n);
        for (Eigen::Index k = 0; k < n; ++k) {
          dT.middleCols(n * k, n) = g.middleCols(n * k, n) - g.middleCols(n * k, n).transpose();
        }
        accumulate(in[0], dT);
        break;
      }
      case Kind::block_right_mul: {
        const MatrixXd& h = nodes_[in[0]].value;
        const MatrixXd& q = nodes_[in[1]].value;
        const Eigen::Index n = h.rows();
        MatrixXd dH(n, n * n);
        MatrixXd dQ = MatrixXd::Zero(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
          dH.middleCols(n * k, n) = g.middleCols(n * k, n) * q.transpose();
          dQ.noalias() += h.middleCols(n * k, n).transpose() * g.middleCols(n * k, n);
        }
        accumulate(in[0], dH);
        accumulate(in[1], dQ);
        break;
      }
      case Kind::quad_rhs: {
        const MatrixXd& A = nodes_[in[0]].value;
        const MatrixXd& H = nodes_[in[1]].value;
        MatrixXd dA = MatrixXd::Zero(A.rows(), A.cols());
        MatrixXd dH = MatrixXd::Zero(H.rows(), H.cols());
        MatrixXd dB = MatrixXd::Zero(A.rows(), 1);
        MatrixXd dX;
        rhs_adjoint(A, H, nodes_[in[3]].value, g, dA, dH, dB, dX);
        accumulate(in[0], dA);
        accumulate(in[1], dH);
        accumulate(in[2], dB);
        accumulate(in[3], dX);
        break;
      }
      case Kind::rk4: {
        const MatrixXd& A = nodes_[in[0]].value;
        const MatrixXd& H = nodes_[in[1]].value;
        const double dt = node.scalar_arg;
        const Rk4Trace& tr = node.trace;
        MatrixXd dA = MatrixXd::Zero(A.rows(), A.cols());
        MatrixXd dH = MatrixXd::Zero(H.rows(), H.cols());
        MatrixXd dB = MatrixXd::Zero(A.rows(), 1);
        // out = X + dt/6 (k1 + 2 k2 + 2 k3 + k4), with k_i = f(s_i).
        MatrixXd dX = g;
        const MatrixXd dk1 = (dt / 6.0) * g;
        MatrixXd dk2 = (dt / 3.0) * g;
        MatrixXd dk3 = (dt / 3.0) * g;
        const MatrixXd dk4 = (dt / 6.0) * g;
        MatrixXd ds;
        rhs_adjoint(A, H, tr.s4, dk4, dA, dH, dB, ds);  // s4 = X + dt k3
        dX += ds;
        dk3 += dt * ds;
        rhs_adjoint(A, H, tr.s3, dk3, dA, dH, dB, ds);  // s3 = X + dt/2 k2
        dX += ds;
        dk2 += (0.5 * dt) * ds;
        MatrixXd dk1_total = dk1;
        rhs_adjoint(A, H, tr.s2, dk2, dA, dH, dB, ds);  // s2 = X + dt/2 k1
        dX += ds;
        dk1_total += (0.5 * dt) * ds;
        rhs_adjoint(A, H, tr.s1, dk1_total, dA, dH, dB, ds);
        dX += ds;
        accumulate(in[0], dA);
        accumulate(in[1], dH);
        accumulate(in[2], dB);
        accumulate(in[3], dX);
        break;
      }
    }
  }
}

double grad_check(const LossFn& loss, const std::vector<MatrixXd>& params, double eps, int directions,
                  std::uint64_t seed) {
  if (!(eps >= 1e-8 && eps <= 1e-3)) throw Error(ErrorCode::ConfigError, "grad_check eps must lie in [1e-8, 1e-3]");
  std::vector<MatrixXd> grads;
  loss(params, &grads);
  if (grads.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "loss returned the wrong number of gradients");

  std::mt19937_64 gen(seed);
  double worst = 0.0;
  for (int d = 0; d < directions; ++d) {
    std::vector<MatrixXd> dir;
    double norm_sq = 0.0;
    for (const MatrixXd& p : params) {
      dir.push_back(normal_matrix(gen, p.rows(), p.cols()));
      norm_sq += dir.back().squaredNorm();
    }
    const double norm = std::sqrt(norm_sq);
    double analytic = 0.0;
    std::vector<MatrixXd> plus = params;
    std::vector<MatrixXd> minus = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
      dir[i] /= norm;
      analytic += grads[i].cwiseProduct(dir[i]).sum();
      plus[i] += eps * dir[i];
      minus[i] -= eps * dir[i];
    }
    const double numeric = (loss(plus, nullptr) - loss(minus, nullptr)) / (2.0 * eps);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < 1e-14) continue;
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace stablequad
