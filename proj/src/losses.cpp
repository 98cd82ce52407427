#include <algorithm>
#include <cctype>
#include <random>

#include "stablequad/autograd.hpp"
#include "stablequad/optimize.hpp"
#include "stablequad/rng.hpp"

namespace stablequad {

const char* to_string(Method m) {
  switch (m) {
    case Method::opinf: return "opinf";
    case Method::lasmi: return "lasmi";
    case Method::gasmi: return "gasmi";
    case Method::atrmi: return "atrmi";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  // Accepts the mixed-case spellings (lasMI, gasMI, atrMI) as well.
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "opinf" || s == "opinf_benchmark") return Method::opinf;
  if (s == "lasmi") return Method::lasmi;
  if (s == "gasmi") return Method::gasmi;
  if (s == "atrmi") return Method::atrmi;
  throw Error(ErrorCode::ConfigError, "unknown method '" + name + "'");
}

const char* to_string(LossMode m) { return m == LossMode::rk4 ? "rk4" : "derivative"; }

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "rk4") return LossMode::rk4;
  if (s == "derivative") return LossMode::derivative;
  throw Error(ErrorCode::ConfigError, "unknown loss mode '" + s + "'");
}

CertificateKind certificate_for(Method m) {
  switch (m) {
    case Method::opinf:
    case Method::lasmi: return CertificateKind::local;
    case Method::gasmi: return CertificateKind::global;
    case Method::atrmi: return CertificateKind::trapping;
  }
  return CertificateKind::local;
}

void FitConfig::validate() const {
  if (steps < 1) throw Error(ErrorCode::ConfigError, "steps must be >= 1");
  if (!(lr_min > 0.0) || lr_min > lr_max) throw Error(ErrorCode::ConfigError, "need 0 < lr_min <= lr_max");
  if (lr_cycle < 2) throw Error(ErrorCode::ConfigError, "lr_cycle must be >= 2");
  if (lambda_H < 0.0) throw Error(ErrorCode::ConfigError, "lambda_H must be nonnegative");
  if (init_std < 0.0) throw Error(ErrorCode::ConfigError, "init_std must be nonnegative");
  if (threshold < 0.0 || threshold_rounds < 0) throw Error(ErrorCode::ConfigError, "invalid thresholding settings");
  if (conserve_energy && method != Method::atrmi) {
    throw Error(ErrorCode::ConfigError, "conserve_energy applies to atrmi only");
  }
}

std::size_t ParamSet::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw Error(ErrorCode::ConfigError, "parameter set has no '" + name + "'");
}

namespace {

MatrixXd q_factor(Eigen::Index n, const FitConfig& cfg) {
  if (!cfg.fixed_Q) return MatrixXd::Identity(n, n);
  const MatrixXd& Q = *cfg.fixed_Q;
  if (Q.rows() != n || Q.cols() != n) throw Error(ErrorCode::ShapeMismatch, "fixed Q does not match the data dimension");
  require_spd(Q);
  return Eigen::LLT<MatrixXd>(Q).matrixL();
}

void add_param(ParamSet& p, const std::string& name, MatrixXd value, bool trainable) {
  p.names.push_back(name);
  p.masks.push_back(trainable ? MatrixXd::Ones(value.rows(), value.cols())
                              : MatrixXd::Zero(value.rows(), value.cols()));
  p.values.push_back(std::move(value));
}

}  // namespace

ParamSet init_params(Method method, Eigen::Index n, const FitConfig& cfg) {
  cfg.validate();
  if (n < 1) throw Error(ErrorCode::ShapeMismatch, "state dimension must be positive");
  std::mt19937_64 gen(derive_seed(cfg.seed, kStreamInit));
  auto rnd = [&](Eigen::Index r, Eigen::Index c) { return normal_matrix(gen, r, c, cfg.init_std); };
  ParamSet p;
  p.method = method;
  p.n = n;
  p.Q_fac = q_factor(n, cfg);
  const Eigen::Index n2 = n * n;
  switch (method) {
    case Method::opinf:
      add_param(p, "A", rnd(n, n), true);
      add_param(p, "H", rnd(n, n2), true);
      add_param(p, "B", cfg.opinf_constant ? rnd(n, 1) : MatrixXd::Zero(n, 1), cfg.opinf_constant);
      break;
    case Method::lasmi:
      add_param(p, "J_raw", rnd(n, n), true);
      add_param(p, "R_fac", rnd(n, n), true);
      add_param(p, "H_free", rnd(n, n2), true);
      break;
    case Method::gasmi:
      add_param(p, "J_raw", rnd(n, n), true);
      add_param(p, "R_fac", rnd(n, n), true);
      add_param(p, "H_ten", rnd(n, n2), true);
      break;
    case Method::atrmi: {
      add_param(p, "J_raw", rnd(n, n), true);
      MatrixXd R = rnd(n, n);
      add_param(p, "R_fac", cfg.conserve_energy ? MatrixXd::Zero(n, n) : R, !cfg.conserve_energy);
      add_param(p, "H_ten", rnd(n, n2), true);
      add_param(p, "m", MatrixXd::Zero(n, 1), true);
      MatrixXd B = rnd(n, 1);
      add_param(p, "B_tilde", cfg.conserve_energy ? MatrixXd::Zero(n, 1) : B, !cfg.conserve_energy);
      break;
    }
  }
  return p;
}

StableParams to_stable_params(const ParamSet& p) {
  switch (p.method) {
    case Method::opinf:
      return OpinfParams{p.get("A"), p.get("H"), p.get("B").col(0)};
    case Method::lasmi:
      return LasParams{p.get("J_raw"), p.get("R_fac"), p.Q_fac, p.get("H_free")};
    case Method::gasmi:
      return GasParams{p.get("J_raw"), p.get("R_fac"), p.Q_fac, Tensor3::from_mode1(p.get("H_ten"))};
    case Method::atrmi:
      return AtrParams{p.get("J_raw"), p.get("R_fac"), p.Q_fac, Tensor3::from_mode1(p.get("H_ten")),
                       p.get("m").col(0), p.get("B_tilde").col(0)};
  }
  throw Error(ErrorCode::ConfigError, "unknown method");
}

ParamSet from_stable_params(const StableParams& sp, const FitConfig& cfg) {
  ParamSet p;
  struct Visitor {
    ParamSet& p;
    const FitConfig& cfg;
    void operator()(const OpinfParams& o) const {
      p.method = Method::opinf;
      p.n = o.A.rows();
      p.Q_fac = MatrixXd::Identity(p.n, p.n);
      add_param(p, "A", o.A, true);
      add_param(p, "H", o.H, true);
      add_param(p, "B", o.B, cfg.opinf_constant);
    }
    void operator()(const LasParams& o) const {
      p.method = Method::lasmi;
      p.n = o.J_raw.rows();
      p.Q_fac = o.Q_fac;
      add_param(p, "J_raw", o.J_raw, true);
      add_param(p, "R_fac", o.R_fac, true);
      add_param(p, "H_free", o.H_free, true);
    }
    void operator()(const GasParams& o) const {
      p.method = Method::gasmi;
      p.n = o.J_raw.rows();
      p.Q_fac = o.Q_fac;
      add_param(p, "J_raw", o.J_raw, true);
      add_param(p, "R_fac", o.R_fac, true);
      add_param(p, "H_ten", matricize(o.H_ten, 1), true);
    }
    void operator()(const AtrParams& o) const {
      p.method = Method::atrmi;
      p.n = o.J_raw.rows();
      p.Q_fac = o.Q_fac;
      add_param(p, "J_raw", o.J_raw, true);
      add_param(p, "R_fac", o.R_fac, !cfg.conserve_energy);
      add_param(p, "H_ten", matricize(o.H_ten, 1), true);
      add_param(p, "m", MatrixXd(o.m), true);
      add_param(p, "B_tilde", MatrixXd(o.B_tilde), !cfg.conserve_energy);
    }
  };
  std::visit(Visitor{p, cfg}, sp);
  return p;
}

LossData make_loss_data(const Dataset& ds, LossMode mode) {
  LossData data;
  data.dt = ds.dt;
  data.mode = mode;
  if (mode == LossMode::rk4) {
    ds.pairs(data.X0, data.X1);
  } else {
    ds.validate();
    if (ds.derivatives.empty()) {
      throw Error(ErrorCode::ConfigError, "derivative loss needs a dataset that carries time derivatives");
    }
    data.X0 = ds.snapshot_matrix();
    Dataset d = ds;
    d.trajectories = ds.derivatives;
    d.derivatives.clear();
    d.truth.reset();
    data.X1 = d.snapshot_matrix();
  }
  if (data.X0.cols() == 0) throw Error(ErrorCode::ConfigError, "dataset has no snapshot pairs");
  return data;
}

namespace {

struct Graph {
  Tape tape;
  std::vector<Tape::Id> param_ids;
  Tape::Id total = -1;
  Tape::Id data_term = -1;
};

// Records the assembled operators exactly as stableparam assembles them,
// then the method's residual.
void build(Graph& g, const ParamSet& p, const LossData& data, double lambda_H) {
  Tape& t = g.tape;
  for (const MatrixXd& v : p.values) g.param_ids.push_back(t.parameter(v));
  auto id = [&](const char* name) { return g.param_ids[p.index(name)]; };
  const Eigen::Index n = p.n;

  Tape::Id A, H, B;
  Tape::Id shift = -1;
  if (p.method == Method::opinf) {
    A = id("A");
    H = id("H");
    B = id("B");
  } else {
    const Tape::Id Qf = t.constant(p.Q_fac);
    const Tape::Id Q = t.matmul(Qf, t.transpose(Qf));
    const Tape::Id J = id("J_raw");
    const Tape::Id Rf = id("R_fac");
    const Tape::Id skew = t.sub(J, t.transpose(J));
    const Tape::Id R = t.matmul(Rf, t.transpose(Rf));
    A = t.matmul(t.sub(skew, R), Q);
    if (p.method == Method::lasmi) {
      H = id("H_free");
    } else {
      H = t.block_right_mul(t.skew_unfold(id("H_ten")), Q);
    }
    if (p.method == Method::atrmi) {
      B = id("B_tilde");
      shift = id("m");
    } else {
      B = t.constant(MatrixXd::Zero(n, 1));
    }
  }

  Tape::Id X0 = t.constant(data.X0);
  Tape::Id X1 = t.constant(data.X1);
  if (shift >= 0) {
    // The translated model acts on x - m; in derivative mode the target is
    // unchanged by the shift.
    X0 = t.sub_col(X0, shift);
    if (data.mode == LossMode::rk4) X1 = t.sub_col(X1, shift);
  }
  const Tape::Id pred = data.mode == LossMode::rk4 ? t.rk4(A, H, B, X0, data.dt) : t.quad_rhs(A, H, B, X0);
  g.data_term = t.mean_sq(t.sub(X1, pred));
  g.total = g.data_term;
  if (lambda_H > 0.0) g.total = t.add(g.data_term, t.scale(t.l1_mean(H), lambda_H));
}

}  // namespace

LossValue evaluate_loss(const ParamSet& p, const LossData& data, double lambda_H, bool with_grad) {
  if (data.X0.rows() != p.n) throw Error(ErrorCode::ShapeMismatch, "data dimension does not match parameters");
  Graph g;
  build(g, p, data, lambda_H);
  LossValue out;
  out.total = g.tape.scalar(g.total);
  out.data = g.tape.scalar(g.data_term);
  if (with_grad) {
    g.tape.backward(g.total);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const MatrixXd& gr = g.tape.grad(g.param_ids[i]);
      out.grads.push_back(gr.size() == 0 ? MatrixXd::Zero(p.values[i].rows(), p.values[i].cols()) : gr);
    }
  }
  return out;
}

LossFn make_loss_fn(const ParamSet& p, const LossData& data, double lambda_H) {
  return [p, data, lambda_H](const std::vector<MatrixXd>& values, std::vector<MatrixXd>* grads) {
    ParamSet q = p;
    q.values = values;
    LossValue lv = evaluate_loss(q, data, lambda_H, grads != nullptr);
    if (grads) *grads = std::move(lv.grads);
    return lv.total;
  };
}

}  // namespace stablequad
