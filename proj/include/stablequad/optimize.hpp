#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stablequad/error.hpp"
#include "stablequad/autograd.hpp"
#include "stablequad/odesim.hpp"
#include "stablequad/stableparam.hpp"

namespace stablequad {

enum class Method { opinf, lasmi, gasmi, atrmi };
enum class LossMode { rk4, derivative };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
const char* to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s);

/// The certificate each method guarantees by construction (opinf: local,
/// checked rather than guaranteed).
CertificateKind certificate_for(Method m);

struct FitConfig {
  Method method = Method::gasmi;
  LossMode loss_mode = LossMode::rk4;
  int steps = 12000;
  double lr_min = 1e-6;
  double lr_max = 1e-2;
  int lr_cycle = 4000;
  double lambda_H = 0.0;
  double init_std = 0.1;
  std::uint64_t seed = 0;
  double threshold = 0.1;
  int threshold_rounds = 4;
  /// Lyapunov weight held fixed during the fit; identity when unset.
  std::optional<MatrixXd> fixed_Q;
  /// atrmi only: R = 0 and B~ = 0, so the energy (x - m)^T Q (x - m) / 2 is conserved.
  bool conserve_energy = false;
  /// opinf only: also learn a constant term B.
  bool opinf_constant = false;

  void validate() const;
};

/// Optimizer-side view of one method's parameters. Values of frozen entries
/// (fixed Q factor, R under conserve_energy, pruned coefficients) never move.
struct ParamSet {
  Method method = Method::gasmi;
  Eigen::Index n = 0;
  std::vector<std::string> names;
  std::vector<MatrixXd> values;
  /// 1 = trainable, 0 = pinned at its current value (zero after pruning).
  std::vector<MatrixXd> masks;
  MatrixXd Q_fac;

  std::size_t index(const std::string& name) const;
  const MatrixXd& get(const std::string& name) const { return values[index(name)]; }
};

/// Random i.i.d. normal(0, init_std) start for the method.
ParamSet init_params(Method method, Eigen::Index n, const FitConfig& cfg);

StableParams to_stable_params(const ParamSet& p);
ParamSet from_stable_params(const StableParams& sp, const FitConfig& cfg);

/// Training pairs (or snapshots and derivatives) as n x N column batches.
struct LossData {
  MatrixXd X0;
  MatrixXd X1;  // next snapshot (rk4) or time derivative at X0 (derivative)
  double dt = 0.0;
  LossMode mode = LossMode::rk4;
};

LossData make_loss_data(const Dataset& ds, LossMode mode);

/// Mean squared one-step (or derivative) residual plus
/// lambda_H * mean |H| of the assembled Hessian.
struct LossValue {
  double total = 0.0;
  double data = 0.0;
  std::vector<MatrixXd> grads;  // one per ParamSet value; empty when not requested
};

LossValue evaluate_loss(const ParamSet& p, const LossData& data, double lambda_H, bool with_grad);

/// LossFn over the given ParamSet's values, for grad_check.
LossFn make_loss_fn(const ParamSet& p, const LossData& data, double lambda_H);

/// Triangular cycle starting at lr_min and peaking at lr_cycle / 2.
double cyclic_lr(int step, const FitConfig& cfg);

struct AdamState {
  std::vector<MatrixXd> m;
  std::vector<MatrixXd> v;
  int t = 0;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

/// One bias-corrected Adam update of params in place.
void adam_step(AdamState& state, std::vector<MatrixXd>& params, const std::vector<MatrixXd>& grads, double lr);

struct FitReport {
  std::vector<double> loss_history;  // all rounds, concatenated
  std::vector<int> round_lengths;
  double final_loss = 0.0;
  StabilityCertificate certificate;
  double wall_time = 0.0;
  std::vector<std::string> mask_names;
  std::vector<MatrixXd> pruned_masks;  // sparse fits: 1 = kept
  FitConfig config_echo;
  int nonfinite_step = -1;
};

struct FitResult {
  QuadModel model;
  StableParams params;
  FitReport report;
};

/// Raised on a NaN/Inf loss; carries the partial result (last finite iterate).
class FitError : public Error {
 public:
  FitError(const std::string& what, FitResult partial)
      : Error(ErrorCode::NonFiniteLoss, what), partial_(std::move(partial)) {}
  const FitResult& partial() const { return partial_; }

 private:
  FitResult partial_;
};

/// Called after every optimizer step with the global step index.
using FitObserver = std::function<void(int step, const ParamSet& params, double loss)>;

FitResult fit(const Dataset& data, const FitConfig& cfg, const FitObserver& observer = nullptr);

/// Runs cfg.steps Adam steps from the given parameters, updating them in
/// place. Observer step indices start at step_offset.
FitResult fit_from(ParamSet& params, const LossData& data, const FitConfig& cfg,
                   const FitObserver& observer = nullptr, int step_offset = 0);

/// Marks every parameter entry whose assembled coefficient falls below the
/// threshold (see the README for the per-method mapping). Returns the number
/// of newly pruned entries. Throws AllPruned when nothing trainable is left.
int prune(ParamSet& p, double threshold);

/// atrmi: the translation m is not identified by the data, since moving it
/// while re-expressing A~ and B~ leaves the assembled model unchanged.
/// Sets components of m to zero (smallest first) as long as the translated
/// linear part keeps at least half of its stability margin, and rewrites
/// J, R and B~ to match. No-op for other methods.
void regauge_translation(ParamSet& p);

/// Initial fit, then threshold_rounds x (prune, re-fit). Before the first
/// pruning of an atrmi fit the translation is regauged.
FitResult sparse_fit(const Dataset& data, const FitConfig& cfg, const FitObserver& observer = nullptr);

/// Nonzero entries in the assembled A, H and B.
int count_nonzeros(const QuadModel& m, double tol = 0.0);

}  // namespace stablequad
