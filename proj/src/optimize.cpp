#include "stablequad/optimize.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <numeric>

namespace stablequad {

double cyclic_lr(int step, const FitConfig& cfg) {
  if (step < 0) throw Error(ErrorCode::ConfigError, "step must be nonnegative");
  const double half = 0.5 * cfg.lr_cycle;
  const double pos = static_cast<double>(step % cfg.lr_cycle);
  const double frac = pos <= half ? pos / half : (cfg.lr_cycle - pos) / half;
  return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * frac;
}

void adam_step(AdamState& state, std::vector<MatrixXd>& params, const std::vector<MatrixXd>& grads, double lr) {
  if (grads.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "adam: gradient count mismatch");
  if (state.m.empty()) {
    for (const MatrixXd& p : params) {
      state.m.push_back(MatrixXd::Zero(p.rows(), p.cols()));
      state.v.push_back(MatrixXd::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "adam: state size mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(kAdamBeta1, state.t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, state.t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const MatrixXd& g = grads[i];
    if (g.rows() != params[i].rows() || g.cols() != params[i].cols() || state.m[i].rows() != g.rows() ||
        state.m[i].cols() != g.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "adam: gradient shape mismatch");
    }
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g.cwiseAbs2();
    params[i].array() -= lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + kAdamEps);
  }
}

namespace {

std::optional<VectorXd> shift_of(const ParamSet& p) {
  if (p.method != Method::atrmi) return std::nullopt;
  return VectorXd(p.get("m").col(0));
}

CertificateKind certificate_kind(const FitConfig& cfg) {
  if (cfg.method == Method::atrmi && cfg.conserve_energy) return CertificateKind::energy_conserving;
  return certificate_for(cfg.method);
}

FitResult finish(const ParamSet& p, const FitConfig& cfg, FitReport report) {
  FitResult result;
  result.params = to_stable_params(p);
  result.model = assemble(result.params);
  const MatrixXd Q = p.Q_fac * p.Q_fac.transpose();
  result.report = std::move(report);
  result.report.certificate = certify(result.model, certificate_kind(cfg), Q, shift_of(p));
  result.report.config_echo = cfg;
  result.report.mask_names = p.names;
  result.report.pruned_masks = p.masks;
  return result;
}

}  // namespace

FitResult fit_from(ParamSet& params, const LossData& data, const FitConfig& cfg, const FitObserver& observer,
                   int step_offset) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  FitReport report;
  report.loss_history.reserve(static_cast<std::size_t>(cfg.steps));
  AdamState adam;
  ParamSet last_finite = params;
  for (int step = 0; step < cfg.steps; ++step) {
    LossValue lv = evaluate_loss(params, data, cfg.lambda_H, true);
    bool finite = std::isfinite(lv.total);
    for (const MatrixXd& g : lv.grads) finite = finite && g.allFinite();
    if (!finite) {
      report.nonfinite_step = step_offset + step;
      report.round_lengths.push_back(step);
      report.final_loss = report.loss_history.empty() ? lv.total : report.loss_history.back();
      FitResult partial = finish(last_finite, cfg, std::move(report));
      throw FitError("loss became non-finite at step " + std::to_string(step_offset + step), std::move(partial));
    }
    report.loss_history.push_back(lv.total);
    for (std::size_t i = 0; i < lv.grads.size(); ++i) lv.grads[i].array() *= params.masks[i].array();
    last_finite = params;
    adam_step(adam, params.values, lv.grads, cyclic_lr(step, cfg));
    if (observer) observer(step_offset + step, params, lv.total);
  }
  report.round_lengths.push_back(cfg.steps);
  report.final_loss = evaluate_loss(params, data, cfg.lambda_H, false).total;
  if (!std::isfinite(report.final_loss)) {
    report.nonfinite_step = step_offset + cfg.steps;
    FitResult partial = finish(last_finite, cfg, std::move(report));
    throw FitError("loss became non-finite after the last step", std::move(partial));
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return finish(params, cfg, std::move(report));
}

FitResult fit(const Dataset& data, const FitConfig& cfg, const FitObserver& observer) {
  cfg.validate();
  const LossData ld = make_loss_data(data, cfg.loss_mode);
  ParamSet p = init_params(cfg.method, ld.X0.rows(), cfg);
  return fit_from(p, ld, cfg, observer);
}

namespace {

void zero_entry(ParamSet& p, std::size_t k, Eigen::Index i, Eigen::Index j) {
  p.masks[k](i, j) = 0.0;
  p.values[k](i, j) = 0.0;
}

// Linear part A = (J - J^T - R R^T) Q. An off-diagonal pair {i, j} is pruned
// when both A_ij and A_ji are small: the skew entry goes to zero and R R^T is
// restricted to the connected components of the remaining pairs, so the
// masked R factor still yields a positive definite block-diagonal product.
// Diagonal entries are never pruned; R R^T must stay nonsingular.
void prune_linear(ParamSet& p, const MatrixXd& A, double tol) {
  const Eigen::Index n = p.n;
  const std::size_t kJ = p.index("J_raw");
  const std::size_t kR = p.index("R_fac");
  std::vector<Eigen::Index> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<Eigen::Index(Eigen::Index)> root = [&](Eigen::Index i) {
    return comp[i] == i ? i : comp[i] = root(comp[i]);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(A(i, j)) < tol && std::abs(A(j, i)) < tol) {
        zero_entry(p, kJ, i, j);
        zero_entry(p, kJ, j, i);
      } else {
        comp[root(i)] = root(j);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (root(i) != root(k)) zero_entry(p, kR, i, k);
}

// Free Hessian: the coefficient of x_a x_c is shared by columns n a + c and
// n c + a, so both are pruned together on the symmetrized value.
void prune_free_hessian(ParamSet& p, std::size_t k, double tol) {
  const Eigen::Index n = p.n;
  const MatrixXd H = p.values[k];
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index c = a; c < n; ++c) {
        const double sym = 0.5 * (H(r, n * a + c) + H(r, n * c + a));
        if (std::abs(sym) < tol) {
          zero_entry(p, k, r, n * a + c);
          zero_entry(p, k, r, n * c + a);
        }
      }
    }
  }
}

// Skew-block Hessian: the assembled block entries (i, j) and (j, i) come from
// the same tensor pair, which is pruned jointly.
void prune_skew_hessian(ParamSet& p, const MatrixXd& H, double tol) {
  const Eigen::Index n = p.n;
  const std::size_t k = p.index("H_ten");
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        if (std::abs(H(i, n * a + j)) < tol && std::abs(H(j, n * a + i)) < tol) {
          zero_entry(p, k, i, n * a + j);
          zero_entry(p, k, j, n * a + i);
        }
      }
    }
  }
}

void prune_vector(ParamSet& p, const std::string& name, double tol) {
  const std::size_t k = p.index(name);
  for (Eigen::Index i = 0; i < p.values[k].rows(); ++i)
    if (std::abs(p.values[k](i, 0)) < tol) zero_entry(p, k, i, 0);
}

}  // namespace

void regauge_translation(ParamSet& p) {
  if (p.method != Method::atrmi) return;
  const AtrParams a = std::get<AtrParams>(to_stable_params(p));
  const QuadModel model = assemble_atr(a);
  const MatrixXd Q = p.Q_fac * p.Q_fac.transpose();
  auto translated_A = [&](const VectorXd& m) {
    return MatrixXd(model.A + h_times_kron_right(model.H, m) + h_times_kron_left(model.H, m));
  };
  auto margin = [&](const VectorXd& m) {
    const MatrixXd QA = Q * translated_A(m);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (QA + QA.transpose()), Eigen::EigenvaluesOnly);
    return -eig.eigenvalues().maxCoeff();
  };
  const double base = margin(a.m);
  if (!(base > 0.0)) return;
  std::vector<Eigen::Index> order(p.n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return std::abs(a.m(i)) < std::abs(a.m(j)); });
  VectorXd m = a.m;
  const std::size_t km = p.index("m");
  for (Eigen::Index i : order) {
    if (m(i) == 0.0 || p.masks[km](i, 0) == 0.0) continue;
    VectorXd trial = m;
    trial(i) = 0.0;
    if (margin(trial) >= 0.5 * base) m = trial;
  }
  if (m == a.m) return;

  const MatrixXd At = translated_A(m);
  // (J - R) Q = A~ with J skew and R symmetric.
  const MatrixXd M = Q.llt().solve(At.transpose()).transpose();
  const MatrixXd P = -0.5 * (M + M.transpose());
  Eigen::LLT<MatrixXd> chol(P);
  if (chol.info() != Eigen::Success) return;
  p.values[p.index("J_raw")] = 0.25 * (M - M.transpose());
  p.values[p.index("R_fac")] = chol.matrixL();
  p.values[km] = m;
  p.values[p.index("B_tilde")] = model.B + model.H * kron_squared(m) + model.A * m;
}

int prune(ParamSet& p, double threshold) {
  double before = 0.0;
  for (const MatrixXd& m : p.masks) before += m.sum();
  switch (p.method) {
    case Method::opinf: {
      const std::size_t kA = p.index("A");
      for (Eigen::Index i = 0; i < p.n; ++i)
        for (Eigen::Index j = 0; j < p.n; ++j)
          if (std::abs(p.values[kA](i, j)) < threshold) zero_entry(p, kA, i, j);
      prune_free_hessian(p, p.index("H"), threshold);
      prune_vector(p, "B", threshold);
      break;
    }
    case Method::lasmi: {
      const QuadModel m = assemble_las(std::get<LasParams>(to_stable_params(p)));
      prune_linear(p, m.A, threshold);
      prune_free_hessian(p, p.index("H_free"), threshold);
      break;
    }
    case Method::gasmi: {
      const QuadModel m = assemble_gas(std::get<GasParams>(to_stable_params(p)));
      prune_linear(p, m.A, threshold);
      prune_skew_hessian(p, m.H, threshold);
      break;
    }
    case Method::atrmi: {
      const QuadModel t = translated_model(std::get<AtrParams>(to_stable_params(p)));
      prune_linear(p, t.A, threshold);
      prune_skew_hessian(p, t.H, threshold);
      prune_vector(p, "B_tilde", threshold);
      prune_vector(p, "m", threshold);
      break;
    }
  }
  double after = 0.0;
  for (const MatrixXd& m : p.masks) after += m.sum();
  if (after == 0.0) throw Error(ErrorCode::AllPruned, "thresholding removed every coefficient");
  return static_cast<int>(before - after);
}

FitResult sparse_fit(const Dataset& data, const FitConfig& cfg, const FitObserver& observer) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const LossData ld = make_loss_data(data, cfg.loss_mode);
  ParamSet p = init_params(cfg.method, ld.X0.rows(), cfg);
  FitReport merged;
  FitResult result;
  for (int round = 0; round <= cfg.threshold_rounds; ++round) {
    if (round == 1) regauge_translation(p);
    if (round > 0) prune(p, cfg.threshold);
    try {
      result = fit_from(p, ld, cfg, observer, round * cfg.steps);
    } catch (const FitError& e) {
      FitResult partial = e.partial();
      merged.loss_history.insert(merged.loss_history.end(), partial.report.loss_history.begin(),
                                 partial.report.loss_history.end());
      merged.round_lengths.insert(merged.round_lengths.end(), partial.report.round_lengths.begin(),
                                  partial.report.round_lengths.end());
      partial.report.loss_history = merged.loss_history;
      partial.report.round_lengths = merged.round_lengths;
      throw FitError(e.what(), std::move(partial));
    }
    merged.loss_history.insert(merged.loss_history.end(), result.report.loss_history.begin(),
                               result.report.loss_history.end());
    merged.round_lengths.push_back(cfg.steps);
  }
  result.report.loss_history = std::move(merged.loss_history);
  result.report.round_lengths = std::move(merged.round_lengths);
  result.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

int count_nonzeros(const QuadModel& m, double tol) {
  auto count = [tol](const auto& x) { return static_cast<int>((x.array().abs() > tol).count()); };
  return count(m.A) + count(m.H) + count(m.B);
}

}  // namespace stablequad
