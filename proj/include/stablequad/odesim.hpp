#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stablequad/quadtensor.hpp"

namespace stablequad {

using RhsFn = std::function<VectorXd(const VectorXd&)>;

/// Classical RK4. Throws NonFinite when a stage is NaN/Inf.
VectorXd rk4_step(const RhsFn& rhs, const VectorXd& x, double dt);

/// Stage inputs of one batched step: X, X + dt/2 k1, X + dt/2 k2, X + dt k3.
struct Rk4Trace {
  MatrixXd s1, s2, s3, s4;
};

/// Batched RK4 on the columns of X. The single-state overload for a
/// QuadModel goes through this routine, so both agree bit for bit.
/// Non-finite stages are not checked here (callers decide).
MatrixXd rk4_step(const QuadModel& model, const MatrixXd& X, double dt, Rk4Trace* trace = nullptr);

VectorXd rk4_step(const QuadModel& model, const VectorXd& x, double dt);

struct SimResult {
  MatrixXd X;  // rows are snapshots, row 0 is x0
  bool diverged = false;
};

constexpr double kDivergenceNorm = 1e12;

/// steps RK4 steps of size dt; each step is split into `substeps` equal
/// internal steps. Stops early (partial trajectory, diverged = true) once
/// the norm exceeds kDivergenceNorm or a value turns non-finite.
SimResult simulate(const QuadModel& model, const VectorXd& x0, int steps, double dt, int substeps = 1);
SimResult simulate(const RhsFn& rhs, const VectorXd& x0, int steps, double dt, int substeps = 1);

struct Dataset {
  std::vector<MatrixXd> trajectories;  // each T x n
  /// Exact time derivatives at the snapshots, when known (noise-free
  /// synthetic data only). Same shapes as trajectories.
  std::vector<MatrixXd> derivatives;
  double dt = 0.0;
  double t0 = 0.0;
  std::string name;
  std::map<std::string, double> meta;
  std::optional<QuadModel> truth;

  Eigen::Index dim() const { return trajectories.empty() ? 0 : trajectories.front().cols(); }

  /// Throws ConfigError/ShapeMismatch on violated invariants.
  void validate() const;

  /// Snapshot pairs as columns: X0.col(p) is followed by X1.col(p) after dt.
  void pairs(MatrixXd& X0, MatrixXd& X1) const;

  /// All snapshots stacked as columns (n x total).
  MatrixXd snapshot_matrix() const;
};

enum class BenchmarkName { lorenz, mhd, burgers_dirichlet, burgers_neumann, chafee };

const char* to_string(BenchmarkName name);
BenchmarkName benchmark_from_string(const std::string& s);

struct BenchmarkConfig {
  BenchmarkName name = BenchmarkName::lorenz;
  int grid_points = 0;
  int time_points = 0;
  double horizon = 0.0;
  /// One scalar per IC for the PDEs; concatenated state vectors for
  /// lorenz and mhd.
  std::vector<double> ic_params;
  /// Held-out ICs. For the PDEs these are removed from ic_params when
  /// present there.
  std::vector<double> test_ic_params;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  /// mu (viscosity), alpha (lifting scale), nu / mu for mhd, test_horizon.
  std::map<std::string, double> extras;
  /// 0 = choose automatically from dt and the diffusion limit.
  int substeps = 0;

  double extra(const std::string& key, double fallback) const;
  void validate() const;
};

BenchmarkConfig default_config(BenchmarkName name);

struct BenchmarkData {
  Dataset train;
  Dataset test;
};

BenchmarkData generate_benchmark(const BenchmarkConfig& cfg);

/// Dense truth operators.
QuadModel lorenz_model();          // raw coordinates
QuadModel lorenz_scaled_model();   // x/8, y/8, (z - 25)/8
QuadModel mhd_model(double nu, double mu);
QuadModel burgers_dirichlet_model(int grid_points, double mu);
QuadModel burgers_neumann_model(int grid_points, double mu);

/// Stencil right-hand sides (no dense H), used for large grids.
RhsFn burgers_dirichlet_rhs(int grid_points, double mu);
RhsFn burgers_neumann_rhs(int grid_points, double mu);
RhsFn chafee_rhs(int grid_points);

/// [u; alpha u^2] with u = v - 1, applied column-wise (grid x T input).
MatrixXd lift_chafee(const MatrixXd& v, double alpha);
/// Recovers v from the first half of a lifted matrix.
MatrixXd unlift_chafee(const MatrixXd& lifted);

}  // namespace stablequad
