#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reflekt {

enum class ErrorKind {
  NonPositiveMass,
  MetricAxiomViolation,
  UnknownPoint,
  EmptyDomain,
  UnknownGenerator,
  ResolutionTooLarge,
  NegativeArgument,
  DimensionMismatch,
  CoverageFailure,
  GeometryViolation,
  SingularSystem,
  EmptyInner,
  ZeroDenominator,
  FeasibilityFailure,
  ZeroMass,
  NonPositiveTime,
  NotAhlforsRegular,
  InvalidCutoff,
  InvalidArgument,
  InvariantViolation,
  ConfigError,
  IoFailure,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveMass: return "NonPositiveMass";
    case ErrorKind::MetricAxiomViolation: return "MetricAxiomViolation";
    case ErrorKind::UnknownPoint: return "UnknownPoint";
    case ErrorKind::EmptyDomain: return "EmptyDomain";
    case ErrorKind::UnknownGenerator: return "UnknownGenerator";
    case ErrorKind::ResolutionTooLarge: return "ResolutionTooLarge";
    case ErrorKind::NegativeArgument: return "NegativeArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::CoverageFailure: return "CoverageFailure";
    case ErrorKind::GeometryViolation: return "GeometryViolation";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::EmptyInner: return "EmptyInner";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::FeasibilityFailure: return "FeasibilityFailure";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::NotAhlforsRegular: return "NotAhlforsRegular";
    case ErrorKind::InvalidCutoff: return "InvalidCutoff";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace reflekt
