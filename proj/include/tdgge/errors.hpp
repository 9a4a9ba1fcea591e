#ifndef TDGGE_ERRORS_HPP
#define TDGGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tdgge {

enum class ErrorCode {
  InvalidArgument,
  DegenerateParams,
  NoBracket,
  InvalidSize,
  GridMismatch,
  PoleProximity,
  RecursionPole,
  NoConvergence,
  NegativeDensity,
  UnsupportedRoot,
  LimitNotConverged,
  SizeBudgetExceeded,
  SingularGaudin,
  RootMatchFailed,
  DegeneracyUnresolved,
  InvalidFreePoint,
  NotSupported
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateParams: return "DegenerateParams";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::PoleProximity: return "PoleProximity";
    case ErrorCode::RecursionPole: return "RecursionPole";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NegativeDensity: return "NegativeDensity";
    case ErrorCode::UnsupportedRoot: return "UnsupportedRoot";
    case ErrorCode::LimitNotConverged: return "LimitNotConverged";
    case ErrorCode::SizeBudgetExceeded: return "SizeBudgetExceeded";
    case ErrorCode::SingularGaudin: return "SingularGaudin";
    case ErrorCode::RootMatchFailed: return "RootMatchFailed";
    case ErrorCode::DegeneracyUnresolved: return "DegeneracyUnresolved";
    case ErrorCode::InvalidFreePoint: return "InvalidFreePoint";
    case ErrorCode::NotSupported: return "NotSupported";
  }
  return "Unknown";
}

// Carries the failing module so CLI messages are qualified.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + to_string(code) + ": " + what),
        code_(code),
        module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

  // Failures of an iterative numerical procedure, as opposed to bad input.
  bool is_convergence_failure() const noexcept {
    return code_ == ErrorCode::NoConvergence || code_ == ErrorCode::LimitNotConverged ||
           code_ == ErrorCode::RootMatchFailed;
  }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace tdgge

#endif
