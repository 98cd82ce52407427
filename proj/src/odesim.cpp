#include "stablequad/odesim.hpp"

#include <limits>

#include "stablequad/error.hpp"

namespace stablequad {

namespace {

void check_finite_stage(const VectorXd& k) {
  if (!k.allFinite()) throw Error(ErrorCode::NonFinite, "RK4 stage evaluated to NaN/Inf");
}

}  // namespace

VectorXd rk4_step(const RhsFn& rhs, const VectorXd& x, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  const VectorXd k1 = rhs(x);
  check_finite_stage(k1);
  const VectorXd k2 = rhs(x + (0.5 * dt) * k1);
  check_finite_stage(k2);
  const VectorXd k3 = rhs(x + (0.5 * dt) * k2);
  check_finite_stage(k3);
  const VectorXd k4 = rhs(x + dt * k3);
  check_finite_stage(k4);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

MatrixXd rk4_step(const QuadModel& model, const MatrixXd& X, double dt, Rk4Trace* trace) {
  const double half = 0.5 * dt;
  const MatrixXd k1 = model.rhs(X);
  MatrixXd s2 = X + half * k1;
  const MatrixXd k2 = model.rhs(s2);
  MatrixXd s3 = X + half * k2;
  const MatrixXd k3 = model.rhs(s3);
  MatrixXd s4 = X + dt * k3;
  const MatrixXd k4 = model.rhs(s4);
  MatrixXd out = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (trace) {
    trace->s1 = X;
    trace->s2 = std::move(s2);
    trace->s3 = std::move(s3);
    trace->s4 = std::move(s4);
  }
  return out;
}

VectorXd rk4_step(const QuadModel& model, const VectorXd& x, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  const MatrixXd X = x;
  MatrixXd out = rk4_step(model, X, dt);
  if (!out.allFinite()) throw Error(ErrorCode::NonFinite, "RK4 stage evaluated to NaN/Inf");
  return out.col(0);
}

namespace {

template <class Step>
SimResult run_simulation(const VectorXd& x0, int steps, double dt, int substeps, Step&& step) {
  if (steps < 0) throw Error(ErrorCode::ConfigError, "steps must be nonnegative");
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  if (substeps < 1) throw Error(ErrorCode::ConfigError, "substeps must be >= 1");
  SimResult result;
  result.X.resize(steps + 1, x0.size());
  result.X.row(0) = x0.transpose();
  const double h = dt / substeps;
  VectorXd x = x0;
  for (int i = 0; i < steps; ++i) {
    for (int s = 0; s < substeps; ++s) {
      x = step(x, h);
      if (!x.allFinite() || x.norm() > kDivergenceNorm) {
        result.X.conservativeResize(i + 1, Eigen::NoChange);
        result.diverged = true;
        return result;
      }
    }
    result.X.row(i + 1) = x.transpose();
  }
  return result;
}

}  // namespace

SimResult simulate(const QuadModel& model, const VectorXd& x0, int steps, double dt, int substeps) {
  model.validate();
  if (x0.size() != model.dim()) throw Error(ErrorCode::ShapeMismatch, "initial state size mismatch");
  return run_simulation(x0, steps, dt, substeps, [&](const VectorXd& x, double h) -> VectorXd {
    const MatrixXd X = x;
    return rk4_step(model, X, h).col(0);
  });
}

SimResult simulate(const RhsFn& rhs, const VectorXd& x0, int steps, double dt, int substeps) {
  return run_simulation(x0, steps, dt, substeps, [&](const VectorXd& x, double h) -> VectorXd {
    try {
      return rk4_step(rhs, x, h);
    } catch (const Error&) {
      return VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
    }
  });
}

void Dataset::validate() const {
  if (trajectories.empty()) throw Error(ErrorCode::ConfigError, "dataset has no trajectories");
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dataset dt must be positive");
  const Eigen::Index n = trajectories.front().cols();
  for (const MatrixXd& traj : trajectories) {
    if (traj.cols() != n) throw Error(ErrorCode::ShapeMismatch, "trajectories disagree on state dimension");
    if (traj.rows() < 2) throw Error(ErrorCode::ConfigError, "each trajectory needs at least two snapshots");
  }
  if (!derivatives.empty()) {
    if (derivatives.size() != trajectories.size()) {
      throw Error(ErrorCode::ShapeMismatch, "derivative list does not match trajectories");
    }
    for (std::size_t i = 0; i < derivatives.size(); ++i) {
      if (derivatives[i].rows() != trajectories[i].rows() || derivatives[i].cols() != n) {
        throw Error(ErrorCode::ShapeMismatch, "derivative shape does not match its trajectory");
      }
    }
  }
  if (truth && truth->dim() != n) throw Error(ErrorCode::ShapeMismatch, "truth model dimension mismatch");
}

void Dataset::pairs(MatrixXd& X0, MatrixXd& X1) const {
  validate();
  Eigen::Index total = 0;
  for (const MatrixXd& traj : trajectories) total += traj.rows() - 1;
  const Eigen::Index n = dim();
  X0.resize(n, total);
  X1.resize(n, total);
  Eigen::Index c = 0;
  for (const MatrixXd& traj : trajectories) {
    const Eigen::Index m = traj.rows() - 1;
    X0.middleCols(c, m) = traj.topRows(m).transpose();
    X1.middleCols(c, m) = traj.bottomRows(m).transpose();
    c += m;
  }
}

MatrixXd Dataset::snapshot_matrix() const {
  validate();
  Eigen::Index total = 0;
  for (const MatrixXd& traj : trajectories) total += traj.rows();
  MatrixXd Y(dim(), total);
  Eigen::Index c = 0;
  for (const MatrixXd& traj : trajectories) {
    Y.middleCols(c, traj.rows()) = traj.transpose();
    c += traj.rows();
  }
  return Y;
}

}  // namespace stablequad
