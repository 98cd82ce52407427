#include <cmath>
#include <random>

#include "stablequad/error.hpp"
#include "stablequad/odesim.hpp"
#include "stablequad/rng.hpp"

namespace stablequad {

const char* to_string(BenchmarkName name) {
  switch (name) {
    case BenchmarkName::lorenz: return "lorenz";
    case BenchmarkName::mhd: return "mhd";
    case BenchmarkName::burgers_dirichlet: return "burgers_dirichlet";
    case BenchmarkName::burgers_neumann: return "burgers_neumann";
    case BenchmarkName::chafee: return "chafee";
  }
  return "unknown";
}

BenchmarkName benchmark_from_string(const std::string& s) {
  if (s == "lorenz") return BenchmarkName::lorenz;
  if (s == "mhd") return BenchmarkName::mhd;
  if (s == "burgers_dirichlet") return BenchmarkName::burgers_dirichlet;
  if (s == "burgers_neumann") return BenchmarkName::burgers_neumann;
  if (s == "chafee") return BenchmarkName::chafee;
  throw Error(ErrorCode::ConfigError, "unknown benchmark '" + s + "'");
}

double BenchmarkConfig::extra(const std::string& key, double fallback) const {
  auto it = extras.find(key);
  return it == extras.end() ? fallback : it->second;
}

namespace {

bool is_pde(BenchmarkName name) {
  return name == BenchmarkName::burgers_dirichlet || name == BenchmarkName::burgers_neumann ||
         name == BenchmarkName::chafee;
}

Eigen::Index state_dim(BenchmarkName name) {
  return name == BenchmarkName::lorenz ? 3 : 6;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? a : a + (b - a) * i / (count - 1);
  return out;
}

}  // namespace

void BenchmarkConfig::validate() const {
  if (!(horizon > 0.0)) throw Error(ErrorCode::ConfigError, "horizon must be positive");
  if (time_points < 2) throw Error(ErrorCode::ConfigError, "time_points must be >= 2");
  if (noise_std < 0.0) throw Error(ErrorCode::ConfigError, "noise_std must be nonnegative");
  if (substeps < 0) throw Error(ErrorCode::ConfigError, "substeps must be nonnegative");
  if (ic_params.empty()) throw Error(ErrorCode::ConfigError, "no initial conditions given");
  if (is_pde(name)) {
    if (grid_points < 3) throw Error(ErrorCode::ConfigError, "grid_points must be >= 3");
    if (name != BenchmarkName::chafee && !(extra("mu", 0.05) > 0.0)) {
      throw Error(ErrorCode::ConfigError, "viscosity mu must be positive");
    }
    if (name == BenchmarkName::chafee && extra("alpha", 0.5) == 0.0) {
      throw Error(ErrorCode::ConfigError, "lifting scale alpha must be nonzero");
    }
  } else {
    const auto n = static_cast<std::size_t>(state_dim(name));
    if (ic_params.size() % n != 0 || test_ic_params.size() % n != 0) {
      throw Error(ErrorCode::ConfigError, "initial conditions must be whole state vectors");
    }
    if (name == BenchmarkName::mhd && (extra("nu", 0.0) < 0.0 || extra("mu", 0.0) < 0.0)) {
      throw Error(ErrorCode::ConfigError, "nu and mu must be nonnegative");
    }
  }
}

BenchmarkConfig default_config(BenchmarkName name) {
  BenchmarkConfig cfg;
  cfg.name = name;
  switch (name) {
    case BenchmarkName::lorenz:
      cfg.grid_points = 3;
      cfg.time_points = 5000;
      cfg.horizon = 20.0;
      cfg.ic_params = {-8.0, 7.0, 27.0};
      cfg.test_ic_params = {10.0, 10.0, -10.0, 100.0, -100.0, 100.0, -500.0, 500.0, 500.0};
      cfg.noise_std = 0.1;
      break;
    case BenchmarkName::mhd:
      cfg.grid_points = 6;
      cfg.time_points = 2001;
      cfg.horizon = 10.0;
      cfg.ic_params = {0.4, -0.3, 0.2, 0.3, 0.1, -0.2};
      cfg.test_ic_params = {-0.2, 0.35, 0.3, -0.1, 0.25, 0.3};
      cfg.extras = {{"nu", 0.0}, {"mu", 0.0}};
      break;
    case BenchmarkName::burgers_dirichlet:
      cfg.grid_points = 250;
      cfg.time_points = 500;
      cfg.horizon = 1.0;
      cfg.ic_params = linspace(3.0, 5.0, 17);
      cfg.test_ic_params = {3.5, 4.0, 4.5};
      cfg.extras = {{"mu", 0.05}};
      break;
    case BenchmarkName::burgers_neumann:
      cfg.grid_points = 1000;
      cfg.time_points = 501;
      cfg.horizon = 1.0;
      cfg.ic_params = linspace(0.8, 4.0, 17);
      cfg.test_ic_params = {1.6, 2.4, 3.2};
      cfg.extras = {{"mu", 0.05}};
      break;
    case BenchmarkName::chafee: {
      cfg.grid_points = 1000;
      cfg.time_points = 500;
      cfg.horizon = 8.0;
      cfg.ic_params = linspace(1.0, 3.0, 13);
      // 4th, 8th and 11th values in increasing order.
      cfg.test_ic_params = {cfg.ic_params[3], cfg.ic_params[7], cfg.ic_params[10]};
      cfg.extras = {{"alpha", 0.5}};
      break;
    }
  }
  return cfg;
}

QuadModel lorenz_model() {
  MatrixXd A(3, 3);
  A << -10.0, 10.0, 0.0, 28.0, -1.0, 0.0, 0.0, 0.0, -8.0 / 3.0;
  MatrixXd H = MatrixXd::Zero(3, 9);
  H(1, 0 * 3 + 2) = -1.0;  // -x z
  H(2, 0 * 3 + 1) = 1.0;   // x y
  return QuadModel(A, H, VectorXd::Zero(3));
}

QuadModel lorenz_scaled_model() {
  MatrixXd A(3, 3);
  A << -10.0, 10.0, 0.0, 3.0, -1.0, 0.0, 0.0, 0.0, -8.0 / 3.0;
  MatrixXd H = MatrixXd::Zero(3, 9);
  H(1, 0 * 3 + 2) = -8.0;
  H(2, 0 * 3 + 1) = 8.0;
  VectorXd B(3);
  B << 0.0, 0.0, -25.0 / 3.0;
  return QuadModel(A, H, B);
}

QuadModel mhd_model(double nu, double mu) {
  const int n = 6;
  VectorXd diag(n);
  diag << -2 * nu, -5 * nu, -9 * nu, -2 * mu, -5 * mu, -9 * mu;
  MatrixXd H = MatrixXd::Zero(n, n * n);
  auto set = [&](int row, int a, int b, double c) { H(row, n * a + b) += c; };
  // v1..v3 are states 0..2, b1..b3 are states 3..5.
  set(0, 1, 2, 4.0);
  set(0, 4, 5, -4.0);
  set(1, 0, 2, -7.0);
  set(1, 3, 5, 7.0);
  set(2, 0, 1, 3.0);
  set(2, 3, 4, -3.0);
  set(3, 1, 5, 2.0);
  set(3, 2, 4, -2.0);
  set(4, 2, 3, 5.0);
  set(4, 0, 5, -5.0);
  set(5, 0, 4, 9.0);
  set(5, 1, 3, -9.0);
  return QuadModel(MatrixXd(diag.asDiagonal()), H, VectorXd::Zero(n));
}

// Dirichlet Burgers on nodes 0..N-1 (boundaries included and pinned to 0).
// Convection uses the split form (v_{i-1} + v_i + v_{i+1})(v_{i+1} - v_{i-1}) / (6h),
// whose discrete energy contribution telescopes to zero.
QuadModel burgers_dirichlet_model(int N, double mu) {
  const double h = 1.0 / (N - 1);
  const double d = mu / (h * h);
  const double c = 1.0 / (6.0 * h);
  MatrixXd A = MatrixXd::Zero(N, N);
  MatrixXd H = MatrixXd::Zero(N, static_cast<Eigen::Index>(N) * N);
  for (int i = 1; i < N - 1; ++i) {
    A(i, i) = -2.0 * d;
    const bool has_l = i - 1 >= 1;
    const bool has_r = i + 1 <= N - 2;
    const int l = i - 1;
    const int r = i + 1;
    if (has_l) {
      A(i, l) = d;
      H(i, static_cast<Eigen::Index>(l) * N + l) += c;
      H(i, static_cast<Eigen::Index>(i) * N + l) += c;
    }
    if (has_r) {
      A(i, r) = d;
      H(i, static_cast<Eigen::Index>(r) * N + r) -= c;
      H(i, static_cast<Eigen::Index>(i) * N + r) -= c;
    }
  }
  return QuadModel(A, H, VectorXd::Zero(N));
}

RhsFn burgers_dirichlet_rhs(int N, double mu) {
  const double h = 1.0 / (N - 1);
  const double d = mu / (h * h);
  const double c = 1.0 / (6.0 * h);
  return [N, d, c](const VectorXd& v) {
    VectorXd out = VectorXd::Zero(N);
    for (int i = 1; i < N - 1; ++i) {
      const double l = i - 1 >= 1 ? v(i - 1) : 0.0;
      const double r = i + 1 <= N - 2 ? v(i + 1) : 0.0;
      out(i) = d * (l - 2.0 * v(i) + r) - c * (l + v(i) + r) * (r - l);
    }
    return out;
  };
}

// Neumann Burgers: every node is a state; the ghost values v_{-1} = v_1 and
// v_N = v_{N-2} enforce the zero-flux condition.
QuadModel burgers_neumann_model(int N, double mu) {
  const double h = 1.0 / (N - 1);
  const double d = mu / (h * h);
  const double c = 1.0 / (2.0 * h);
  MatrixXd A = MatrixXd::Zero(N, N);
  MatrixXd H = MatrixXd::Zero(N, static_cast<Eigen::Index>(N) * N);
  for (int i = 0; i < N; ++i) {
    const int l = i == 0 ? 1 : i - 1;
    const int r = i == N - 1 ? N - 2 : i + 1;
    A(i, i) += -2.0 * d;
    A(i, l) += d;
    A(i, r) += d;
    H(i, static_cast<Eigen::Index>(i) * N + r) -= c;
    H(i, static_cast<Eigen::Index>(i) * N + l) += c;
  }
  return QuadModel(A, H, VectorXd::Zero(N));
}

RhsFn burgers_neumann_rhs(int N, double mu) {
  const double h = 1.0 / (N - 1);
  const double d = mu / (h * h);
  const double c = 1.0 / (2.0 * h);
  return [N, d, c](const VectorXd& v) {
    VectorXd out(N);
    for (int i = 0; i < N; ++i) {
      const double l = v(i == 0 ? 1 : i - 1);
      const double r = v(i == N - 1 ? N - 2 : i + 1);
      out(i) = d * (l - 2.0 * v(i) + r) - c * v(i) * (r - l);
    }
    return out;
  };
}

RhsFn chafee_rhs(int N) {
  const double h = 1.0 / (N - 1);
  const double d = 1.0 / (h * h);
  return [N, d](const VectorXd& v) {
    VectorXd out(N);
    for (int i = 0; i < N; ++i) {
      const double l = v(i == 0 ? 1 : i - 1);
      const double r = v(i == N - 1 ? N - 2 : i + 1);
      const double vi = v(i);
      out(i) = d * (l - 2.0 * vi + r) + vi - vi * vi * vi;
    }
    return out;
  };
}

MatrixXd lift_chafee(const MatrixXd& v, double alpha) {
  if (alpha == 0.0) throw Error(ErrorCode::ConfigError, "alpha must be nonzero");
  const MatrixXd u = v.array() - 1.0;
  MatrixXd out(2 * v.rows(), v.cols());
  out.topRows(v.rows()) = u;
  out.bottomRows(v.rows()) = alpha * u.array().square();
  return out;
}

MatrixXd unlift_chafee(const MatrixXd& lifted) {
  if (lifted.rows() % 2 != 0) throw Error(ErrorCode::ShapeMismatch, "lifted state must have even length");
  return lifted.topRows(lifted.rows() / 2).array() + 1.0;
}

namespace {

struct IcSplit {
  std::vector<double> train;
  std::vector<double> test;
};

IcSplit split_scalar_ics(const BenchmarkConfig& cfg) {
  IcSplit split;
  split.test = cfg.test_ic_params;
  for (double p : cfg.ic_params) {
    bool held_out = false;
    for (double q : cfg.test_ic_params) held_out = held_out || std::abs(p - q) <= 1e-9 * std::max(1.0, std::abs(q));
    if (!held_out) split.train.push_back(p);
  }
  if (split.train.empty()) throw Error(ErrorCode::ConfigError, "every initial condition is held out");
  return split;
}

int auto_substeps(const BenchmarkConfig& cfg, double dt) {
  if (cfg.substeps > 0) return cfg.substeps;
  double limit = dt / 10.0;
  if (is_pde(cfg.name)) {
    const double h = 1.0 / (cfg.grid_points - 1);
    const double mu = cfg.name == BenchmarkName::chafee ? 1.0 : cfg.extra("mu", 0.05);
    limit = std::min(limit, 0.25 * h * h / mu);
  }
  return static_cast<int>(std::ceil(dt / limit - 1e-9));
}

void add_noise(MatrixXd& traj, double std, std::uint64_t seed) {
  if (std <= 0.0) return;
  std::mt19937_64 gen(seed);
  traj += normal_matrix(gen, traj.rows(), traj.cols(), std);
}

MatrixXd rhs_rows(const RhsFn& f, const MatrixXd& traj) {
  MatrixXd out(traj.rows(), traj.cols());
  for (Eigen::Index t = 0; t < traj.rows(); ++t) out.row(t) = f(traj.row(t).transpose()).transpose();
  return out;
}

MatrixXd integrate(const RhsFn& f, const VectorXd& x0, int steps, double dt, int substeps) {
  SimResult sim = simulate(f, x0, steps, dt, substeps);
  if (sim.diverged) throw Error(ErrorCode::NonFinite, "ground-truth integration diverged");
  return sim.X;
}

constexpr int kDenseTruthLimit = 128;

}  // namespace

BenchmarkData generate_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  const double dt = cfg.horizon / (cfg.time_points - 1);
  const int steps = cfg.time_points - 1;
  const int substeps = auto_substeps(cfg, dt);

  BenchmarkData data;
  for (Dataset* ds : {&data.train, &data.test}) {
    ds->dt = dt;
    ds->t0 = 0.0;
    ds->name = to_string(cfg.name);
    ds->meta = cfg.extras;
    ds->meta["grid_points"] = cfg.grid_points;
    ds->meta["time_points"] = cfg.time_points;
    ds->meta["horizon"] = cfg.horizon;
    ds->meta["noise_std"] = cfg.noise_std;
    ds->meta["seed"] = static_cast<double>(cfg.seed);
    ds->meta["substeps"] = substeps;
  }
  const bool clean = cfg.noise_std == 0.0;

  switch (cfg.name) {
    case BenchmarkName::lorenz: {
      const QuadModel raw = lorenz_model();
      const QuadModel scaled = lorenz_scaled_model();
      const RhsFn raw_rhs = [&raw](const VectorXd& x) { return raw.rhs(x); };
      const RhsFn scaled_rhs = [&scaled](const VectorXd& x) { return scaled.rhs(x); };
      auto to_scaled = [](MatrixXd X) {
        X.array() /= 8.0;
        X.col(2).array() -= 25.0 / 8.0;
        return X;
      };
      for (int split = 0; split < 2; ++split) {
        const std::vector<double>& ics = split == 0 ? cfg.ic_params : cfg.test_ic_params;
        Dataset& ds = split == 0 ? data.train : data.test;
        const int split_steps =
            split == 0 ? steps : static_cast<int>(std::lround(cfg.extra("test_horizon", cfg.horizon) / dt));
        for (std::size_t k = 0; k * 3 < ics.size(); ++k) {
          const VectorXd x0 = Eigen::Map<const VectorXd>(ics.data() + 3 * k, 3);
          MatrixXd traj = integrate(raw_rhs, x0, split_steps, dt, substeps);
          if (split == 0) add_noise(traj, cfg.noise_std, derive_seed(cfg.seed, kStreamNoise, k));
          ds.trajectories.push_back(to_scaled(traj));
          if (split == 1 || clean) ds.derivatives.push_back(rhs_rows(scaled_rhs, ds.trajectories.back()));
        }
        ds.truth = scaled;
      }
      break;
    }
    case BenchmarkName::mhd: {
      const QuadModel truth = mhd_model(cfg.extra("nu", 0.0), cfg.extra("mu", 0.0));
      const RhsFn rhs = [&truth](const VectorXd& x) { return truth.rhs(x); };
      for (int split = 0; split < 2; ++split) {
        const std::vector<double>& ics = split == 0 ? cfg.ic_params : cfg.test_ic_params;
        Dataset& ds = split == 0 ? data.train : data.test;
        for (std::size_t k = 0; k * 6 < ics.size(); ++k) {
          const VectorXd x0 = Eigen::Map<const VectorXd>(ics.data() + 6 * k, 6);
          MatrixXd traj = integrate(rhs, x0, steps, dt, substeps);
          if (split == 0) add_noise(traj, cfg.noise_std, derive_seed(cfg.seed, kStreamNoise, k));
          ds.trajectories.push_back(traj);
          if (split == 1 || clean) ds.derivatives.push_back(rhs_rows(rhs, traj));
        }
        ds.truth = truth;
      }
      break;
    }
    case BenchmarkName::burgers_dirichlet:
    case BenchmarkName::burgers_neumann:
    case BenchmarkName::chafee: {
      const int N = cfg.grid_points;
      const double mu = cfg.extra("mu", 0.05);
      const double alpha = cfg.extra("alpha", 0.5);
      const Eigen::ArrayXd zeta = Eigen::ArrayXd::LinSpaced(N, 0.0, 1.0);
      const double two_pi = 2.0 * M_PI;
      RhsFn rhs;
      std::optional<QuadModel> truth;
      if (cfg.name == BenchmarkName::burgers_dirichlet) {
        rhs = burgers_dirichlet_rhs(N, mu);
        if (N <= kDenseTruthLimit) truth = burgers_dirichlet_model(N, mu);
      } else if (cfg.name == BenchmarkName::burgers_neumann) {
        rhs = burgers_neumann_rhs(N, mu);
        if (N <= kDenseTruthLimit) truth = burgers_neumann_model(N, mu);
      } else {
        rhs = chafee_rhs(N);
      }
      auto initial = [&](double p) -> VectorXd {
        switch (cfg.name) {
          case BenchmarkName::burgers_dirichlet:
            return (p * two_pi * zeta).sin() * zeta * (1.0 - zeta);
          case BenchmarkName::burgers_neumann:
            return p * (two_pi * zeta).cos().square();
          default:
            return 0.1 + p * (2.0 * two_pi * zeta).sin().square();
        }
      };
      const IcSplit ics = split_scalar_ics(cfg);
      for (int split = 0; split < 2; ++split) {
        const std::vector<double>& params = split == 0 ? ics.train : ics.test;
        Dataset& ds = split == 0 ? data.train : data.test;
        for (std::size_t k = 0; k < params.size(); ++k) {
          MatrixXd traj = integrate(rhs, initial(params[k]), steps, dt, substeps);
          if (split == 0) add_noise(traj, cfg.noise_std, derive_seed(cfg.seed, kStreamNoise, k));
          const bool exact = split == 1 || clean;
          if (cfg.name == BenchmarkName::chafee) {
            MatrixXd lifted = lift_chafee(traj.transpose(), alpha).transpose();
            if (exact) {
              // d/dt [u; alpha u^2] = [v_t; 2 alpha u v_t]
              const MatrixXd vt = rhs_rows(rhs, traj);
              MatrixXd dl(lifted.rows(), lifted.cols());
              dl.leftCols(N) = vt;
              dl.rightCols(N) = 2.0 * alpha * lifted.leftCols(N).cwiseProduct(vt);
              ds.derivatives.push_back(std::move(dl));
            }
            ds.trajectories.push_back(std::move(lifted));
          } else {
            if (exact) ds.derivatives.push_back(rhs_rows(rhs, traj));
            ds.trajectories.push_back(std::move(traj));
          }
          ds.meta["ic_" + std::to_string(k)] = params[k];
        }
        ds.truth = truth;
      }
      break;
    }
  }
  // Derivatives are all-or-nothing per split.
  for (Dataset* ds : {&data.train, &data.test}) {
    if (ds->derivatives.size() != ds->trajectories.size()) ds->derivatives.clear();
  }
  return data;
}

}  // namespace stablequad
