#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracorder {

enum class ErrorKind {
  NonConvergence,
  DomainError,
  NotImplemented,
  SpecError,
  EllipticityError,
  ConditionViolated,
  EigensolverFailure,
  ContourError,
  SingularCluster,
  ToleranceExceeded,
  LinearSolveFailure,
  OutOfDomain,
  DegenerateSeries,
  RemainderDominates,
  SignChangeInWindow,
  WindowTooNarrow,
  NoConvergence,
  WindowSuspect,
  UniquenessInconclusive,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NotImplemented: return "NotImplemented";
    case ErrorKind::SpecError: return "SpecError";
    case ErrorKind::EllipticityError: return "EllipticityError";
    case ErrorKind::ConditionViolated: return "ConditionViolated";
    case ErrorKind::EigensolverFailure: return "EigensolverFailure";
    case ErrorKind::ContourError: return "ContourError";
    case ErrorKind::SingularCluster: return "SingularCluster";
    case ErrorKind::ToleranceExceeded: return "ToleranceExceeded";
    case ErrorKind::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::RemainderDominates: return "RemainderDominates";
    case ErrorKind::SignChangeInWindow: return "SignChangeInWindow";
    case ErrorKind::WindowTooNarrow: return "WindowTooNarrow";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::WindowSuspect: return "WindowSuspect";
    case ErrorKind::UniquenessInconclusive: return "UniquenessInconclusive";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind, so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fracorder
