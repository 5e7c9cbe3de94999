#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmorph {

enum class ErrorCode {
  // expression language
  UnknownFunction,
  UnbalancedParen,
  UnexpectedToken,
  UnboundVariable,
  DomainError,
  // geometry
  OutOfDomain,
  NotPositiveDefinite,
  WeightNotPositive,
  WeightMissing,
  // map calculus
  CriticalPoint,
  ChartMismatch,
  // conformal analysis
  NotHWC,
  NotSubmersive,
  EqualDimensions,
  NotImmersion,
  // verifier / sampling
  SamplerExhausted,
  // spin solver
  StepUnderflow,
  NonPositiveWeight,
  BlowUp,
  // catch-all for malformed input documents
  SchemaError,
  Internal,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::UnbalancedParen: return "UnbalancedParen";
    case ErrorCode::UnexpectedToken: return "UnexpectedToken";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::WeightNotPositive: return "WeightNotPositive";
    case ErrorCode::WeightMissing: return "WeightMissing";
    case ErrorCode::CriticalPoint: return "CriticalPoint";
    case ErrorCode::ChartMismatch: return "ChartMismatch";
    case ErrorCode::NotHWC: return "NotHWC";
    case ErrorCode::NotSubmersive: return "NotSubmersive";
    case ErrorCode::EqualDimensions: return "EqualDimensions";
    case ErrorCode::NotImmersion: return "NotImmersion";
    case ErrorCode::SamplerExhausted: return "SamplerExhausted";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

/// Library-wide exception. `offset` is a byte offset into the source text
/// for parser/evaluator diagnostics, npos otherwise.
class Error : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Error(ErrorCode code, std::string message, std::size_t offset = npos)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message +
                           (offset == npos ? std::string()
                                           : " (at offset " + std::to_string(offset) + ")")),
        code_(code),
        offset_(offset) {}

  ErrorCode code() const { return code_; }
  std::size_t offset() const { return offset_; }

 private:
  ErrorCode code_;
  std::size_t offset_;
};

}  // namespace fmorph
