#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stablequad/quadtensor.hpp"

namespace stablequad {

/// Locally stable: A = (J - J^T - R R^T) Q Q^T, H free, B = 0.
struct LasParams {
  MatrixXd J_raw;
  MatrixXd R_fac;
  MatrixXd Q_fac;
  MatrixXd H_free;  // n x n^2
};

/// Globally stable: A as for LasParams, H = (T_(1) - T_(2)) (I kron Q Q^T).
struct GasParams {
  MatrixXd J_raw;
  MatrixXd R_fac;
  MatrixXd Q_fac;
  Tensor3 H_ten;
};

/// Attracting trapping region: the GasParams operators describe the
/// dynamics in the coordinates x - m, with forcing B_tilde there.
struct AtrParams {
  MatrixXd J_raw;
  MatrixXd R_fac;
  MatrixXd Q_fac;
  Tensor3 H_ten;
  VectorXd m;
  VectorXd B_tilde;
};

/// Unconstrained operators (the integral-form OpInf baseline).
struct OpinfParams {
  MatrixXd A;
  MatrixXd H;
  VectorXd B;
};

using StableParams = std::variant<OpinfParams, LasParams, GasParams, AtrParams>;

/// (J_raw - J_raw^T - R_fac R_fac^T) Q_fac Q_fac^T
MatrixXd stable_matrix(const MatrixXd& J_raw, const MatrixXd& R_fac, const MatrixXd& Q_fac);

/// (T_(1) - T_(2)) (I kron Q_fac Q_fac^T)
MatrixXd energy_preserving_hessian(const Tensor3& H_ten, const MatrixXd& Q_fac);

QuadModel assemble_las(const LasParams& p);
QuadModel assemble_gas(const GasParams& p);
QuadModel assemble_atr(const AtrParams& p);
QuadModel assemble(const StableParams& p);

/// The translated model (A~, H, B~) of an AtrParams.
QuadModel translated_model(const AtrParams& p);

/// A radius that can be unbounded (H = 0 makes the quadratic Lyapunov
/// argument global).
struct Radius {
  double value = 0.0;
  bool unbounded = false;

  static Radius bounded(double v) { return {v, false}; }
  static Radius infinite() { return {0.0, true}; }
};

/// sigma_min(L)^2 / (||Q||_2 ||H||_2) with L L^T = Q^T R Q. V = x^T Q x / 2
/// decreases for 0 < ||x|| < r.
Radius local_radius(const MatrixXd& J, const MatrixXd& R, const MatrixXd& Q, const MatrixXd& H);

/// ||B~|| / sigma_min((Q A~)_s). Throws NotStrictlyStable when the symmetric
/// part is not (numerically) negative definite.
double trapping_radius(const AtrParams& p);

enum class CertificateKind { local, global, trapping, energy_conserving };

const char* to_string(CertificateKind kind);
CertificateKind certificate_kind_from_string(const std::string& s);

struct EigenEvidence {
  std::complex<double> value;
  std::string role;
};

struct StabilityCertificate {
  CertificateKind kind = CertificateKind::local;
  bool valid = false;
  std::vector<EigenEvidence> eig_evidence;
  MatrixXd lyapunov_Q;
  std::optional<Radius> radius;
  std::map<std::string, double> residuals;
};

struct CertifyOptions {
  double energy_tol = 1e-8;
  /// Strict negativity means eigenvalue < -strictness * max(1, ||M||_2).
  /// Symmetric eigensolvers are accurate to a few n * eps * ||M||_2, so this
  /// leaves three orders of magnitude of headroom.
  double strictness = 1e-12;
  int num_samples = 200;
};

/// Runs the eigenvalue and residual tests for the claimed kind. An invalid
/// certificate is returned rather than thrown.
StabilityCertificate certify(const QuadModel& model, CertificateKind claimed,
                             const std::optional<MatrixXd>& Q = std::nullopt,
                             const std::optional<VectorXd>& m = std::nullopt,
                             const CertifyOptions& opts = {});

}  // namespace stablequad
