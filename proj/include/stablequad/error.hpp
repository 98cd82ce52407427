#pragma once

#include <stdexcept>
#include <string>

namespace stablequad {

enum class ErrorCode {
  NonSPD,
  NotSkew,
  NotEnergyPreserving,
  SolveFailed,
  NotStrictlyStable,
  NonFinite,
  NonFiniteLoss,
  ConfigError,
  ShapeMismatch,
  RankTooLarge,
  ZeroTruth,
  AllPruned,
  IoError,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a machine-checkable code so
/// the CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSPD: return "NonSPD";
    case ErrorCode::NotSkew: return "NotSkew";
    case ErrorCode::NotEnergyPreserving: return "NotEnergyPreserving";
    case ErrorCode::SolveFailed: return "SolveFailed";
    case ErrorCode::NotStrictlyStable: return "NotStrictlyStable";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::AllPruned: return "AllPruned";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace stablequad
