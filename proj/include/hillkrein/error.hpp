#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hillkrein {

enum class ErrorCode {
  NotOrthogonal,
  NonPositivePeriod,
  DimensionMismatch,
  InvalidArgument,
  IntegratorFailure,
  SingularBoundary,
  SingularTruncation,
  AsymmetricCutoff,
  NonConvergent,
  SingularShift,
  InsufficientOrder,
  SingularDenominator,
  ContourThroughZero,
  NonIntegerWinding,
  NonCommutingC,
  NonCommutingAverage,
  NotSymmetric,
  SchemaError,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotOrthogonal: return "NotOrthogonal";
    case ErrorCode::NonPositivePeriod: return "NonPositivePeriod";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IntegratorFailure: return "IntegratorFailure";
    case ErrorCode::SingularBoundary: return "SingularBoundary";
    case ErrorCode::SingularTruncation: return "SingularTruncation";
    case ErrorCode::AsymmetricCutoff: return "AsymmetricCutoff";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::InsufficientOrder: return "InsufficientOrder";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::ContourThroughZero: return "ContourThroughZero";
    case ErrorCode::NonIntegerWinding: return "NonIntegerWinding";
    case ErrorCode::NonCommutingC: return "NonCommutingC";
    case ErrorCode::NonCommutingAverage: return "NonCommutingAverage";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

// Errors caused by the input rather than by a numerical breakdown.
constexpr bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotOrthogonal:
    case ErrorCode::NonPositivePeriod:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::AsymmetricCutoff:
    case ErrorCode::NonCommutingC:
    case ErrorCode::NonCommutingAverage:
    case ErrorCode::NotSymmetric:
    case ErrorCode::SchemaError:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hillkrein
