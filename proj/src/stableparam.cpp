#include "stablequad/stableparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stablequad/error.hpp"

namespace stablequad {

MatrixXd stable_matrix(const MatrixXd& J_raw, const MatrixXd& R_fac, const MatrixXd& Q_fac) {
  // Same operation sequence as the fitting tape, so both agree bit for bit.
  const MatrixXd J_t = J_raw.transpose();
  const MatrixXd R_t = R_fac.transpose();
  const MatrixXd Q_t = Q_fac.transpose();
  const MatrixXd skew = J_raw - J_t;
  const MatrixXd R = R_fac * R_t;
  const MatrixXd inner = skew - R;
  const MatrixXd Q = Q_fac * Q_t;
  return inner * Q;
}

MatrixXd energy_preserving_hessian(const Tensor3& H_ten, const MatrixXd& Q_fac) {
  const Eigen::Index n = H_ten.size();
  const MatrixXd skew_blocks = matricize(H_ten, 1) - matricize(H_ten, 2);
  const MatrixXd Q_t = Q_fac.transpose();
  const MatrixXd Q = Q_fac * Q_t;
  MatrixXd H(n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) H.middleCols(n * a, n) = skew_blocks.middleCols(n * a, n) * Q;
  return H;
}

QuadModel assemble_las(const LasParams& p) {
  const Eigen::Index n = p.J_raw.rows();
  return QuadModel(stable_matrix(p.J_raw, p.R_fac, p.Q_fac), p.H_free, VectorXd::Zero(n));
}

QuadModel assemble_gas(const GasParams& p) {
  const Eigen::Index n = p.J_raw.rows();
  return QuadModel(stable_matrix(p.J_raw, p.R_fac, p.Q_fac),
                   energy_preserving_hessian(p.H_ten, p.Q_fac), VectorXd::Zero(n));
}

QuadModel translated_model(const AtrParams& p) {
  return QuadModel(stable_matrix(p.J_raw, p.R_fac, p.Q_fac),
                   energy_preserving_hessian(p.H_ten, p.Q_fac), p.B_tilde);
}

QuadModel assemble_atr(const AtrParams& p) {
  // Expanding A~ (x - m) + H ((x - m) kron (x - m)) + B~ in powers of x.
  const QuadModel t = translated_model(p);
  const MatrixXd& H = t.H;
  MatrixXd A = t.A - h_times_kron_right(H, p.m) - h_times_kron_left(H, p.m);
  VectorXd B = t.B - A * p.m - H * kron_squared(p.m);
  return QuadModel(std::move(A), H, std::move(B));
}

QuadModel assemble(const StableParams& p) {
  struct Visitor {
    QuadModel operator()(const OpinfParams& o) const { return QuadModel(o.A, o.H, o.B); }
    QuadModel operator()(const LasParams& o) const { return assemble_las(o); }
    QuadModel operator()(const GasParams& o) const { return assemble_gas(o); }
    QuadModel operator()(const AtrParams& o) const { return assemble_atr(o); }
  };
  return std::visit(Visitor{}, p);
}

namespace {

double max_eigenvalue_sym(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

MatrixXd sym_part(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

Radius local_radius(const MatrixXd& J, const MatrixXd& R, const MatrixXd& Q, const MatrixXd& H) {
  const double jscale = std::max(1.0, J.cwiseAbs().maxCoeff());
  if ((J + J.transpose()).cwiseAbs().maxCoeff() > 1e-10 * jscale) {
    throw Error(ErrorCode::NotSkew, "J must be skew-symmetric");
  }
  require_spd(R, "R");
  require_spd(Q, "Q");
  if (H.cwiseAbs().maxCoeff() == 0.0) return Radius::infinite();
  const MatrixXd QRQ = sym_part(Q.transpose() * R * Q);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(QRQ, Eigen::EigenvaluesOnly);
  const double sigma_sq = eig.eigenvalues().minCoeff();
  return Radius::bounded(sigma_sq / (spectral_norm(Q) * spectral_norm(H)));
}

double trapping_radius(const AtrParams& p) {
  const MatrixXd Q = p.Q_fac * p.Q_fac.transpose();
  const MatrixXd At = stable_matrix(p.J_raw, p.R_fac, p.Q_fac);
  const double sigma = -max_eigenvalue_sym(sym_part(Q * At));
  if (!(sigma >= 1e-12)) {
    throw Error(ErrorCode::NotStrictlyStable, "(Q A~)_s is not strictly negative definite");
  }
  return p.B_tilde.norm() / sigma;
}

const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::local: return "local";
    case CertificateKind::global: return "global";
    case CertificateKind::trapping: return "trapping";
    case CertificateKind::energy_conserving: return "energy_conserving";
  }
  return "unknown";
}

CertificateKind certificate_kind_from_string(const std::string& s) {
  if (s == "local") return CertificateKind::local;
  if (s == "global") return CertificateKind::global;
  if (s == "trapping") return CertificateKind::trapping;
  if (s == "energy_conserving") return CertificateKind::energy_conserving;
  throw Error(ErrorCode::ConfigError, "unknown certificate kind '" + s + "'");
}

StabilityCertificate certify(const QuadModel& model, CertificateKind claimed,
                             const std::optional<MatrixXd>& Q_opt,
                             const std::optional<VectorXd>& m_opt, const CertifyOptions& opts) {
  model.validate();
  const Eigen::Index n = model.dim();
  StabilityCertificate cert;
  cert.kind = claimed;
  cert.lyapunov_Q = Q_opt.value_or(MatrixXd::Identity(n, n));
  const MatrixXd& Q = cert.lyapunov_Q;
  const VectorXd m = m_opt.value_or(VectorXd::Zero(n));

  if (Q.rows() != n || Q.cols() != n || m.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "certificate Q / m do not match the model dimension");
  }
  if (!model.A.allFinite() || !model.H.allFinite() || !model.B.allFinite()) {
    cert.residuals["finite"] = 0.0;
    return cert;
  }
  try {
    require_spd(Q);
  } catch (const Error&) {
    cert.residuals["Q_spd"] = 0.0;
    return cert;
  }

  // Every kind records the same linear evidence; trapping and
  // energy_conserving use the operators translated by m.
  const bool translated =
      claimed == CertificateKind::trapping || claimed == CertificateKind::energy_conserving;
  MatrixXd A = model.A;
  VectorXd B = model.B;
  if (translated) {
    A = model.A + h_times_kron_right(model.H, m) + h_times_kron_left(model.H, m);
    B = model.B + model.H * kron_squared(m) + model.A * m;
  }
  const MatrixXd S = sym_part(Q * A);
  Eigen::SelfAdjointEigenSolver<MatrixXd> sym_eig(S, Eigen::EigenvaluesOnly);
  const double sym_max = sym_eig.eigenvalues().maxCoeff();
  const double sym_scale = std::max(1.0, spectral_norm(S));
  const std::string sym_role = translated ? "(QA~)_s" : "(QA)_s";
  for (Eigen::Index i = 0; i < n; ++i) cert.eig_evidence.push_back({sym_eig.eigenvalues()(i), sym_role});
  cert.residuals["sym_max_eig"] = sym_max;

  const double h_norm = spectral_norm(model.H);
  const double energy_scale = std::max(1.0, spectral_norm(Q) * h_norm);
  const double energy_res = energy_preserving_residual(Q * model.H, opts.num_samples, 0);
  cert.residuals["energy_residual"] = energy_res;
  const bool energy_ok = energy_res < opts.energy_tol * energy_scale;

  switch (claimed) {
    case CertificateKind::local: {
      Eigen::EigenSolver<MatrixXd> eig(A, false);
      double max_real = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        cert.eig_evidence.push_back({eig.eigenvalues()(i), "A"});
        max_real = std::max(max_real, eig.eigenvalues()(i).real());
      }
      cert.residuals["max_real_eig_A"] = max_real;
      cert.valid = max_real < -opts.strictness * std::max(1.0, spectral_norm(A));
      if (sym_max < -opts.strictness * sym_scale) {
        // (QA)_s = -Q R Q for A = (J - R) Q, so sigma_min(L)^2 = -lambda_max.
        if (h_norm == 0.0) {
          cert.radius = Radius::infinite();
        } else {
          cert.radius = Radius::bounded(-sym_max / (spectral_norm(Q) * h_norm));
        }
      }
      break;
    }
    case CertificateKind::global: {
      cert.residuals["B_norm"] = B.norm();
      cert.valid = sym_max < -opts.strictness * sym_scale && energy_ok && B.norm() <= opts.energy_tol;
      cert.radius = Radius::infinite();
      break;
    }
    case CertificateKind::trapping: {
      cert.residuals["B_tilde_norm"] = B.norm();
      const bool strict = sym_max < -opts.strictness * sym_scale;
      cert.valid = strict && energy_ok;
      if (strict) cert.radius = Radius::bounded(B.norm() / (-sym_max));
      break;
    }
    case CertificateKind::energy_conserving: {
      const double sym_abs = sym_eig.eigenvalues().cwiseAbs().maxCoeff();
      cert.residuals["B_tilde_norm"] = B.norm();
      cert.residuals["sym_abs_eig"] = sym_abs;
      cert.valid = sym_abs <= opts.energy_tol * sym_scale && energy_ok && B.norm() <= opts.energy_tol;
      break;
    }
  }
  return cert;
}

}  // namespace stablequad
