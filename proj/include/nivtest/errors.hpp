#pragma once

#include <stdexcept>
#include <string>

namespace nivtest {

enum class ErrorCode {
  // input / configuration problems
  NonSquare,
  NotSymmetric,
  DimensionMismatch,
  OutOfDomain,
  OutOfRange,
  IndexZero,
  ZeroLength,
  DegenerateMixture,
  RankDeficientInstruments,
  BasisCollision,
  MissingColumn,
  NonNumericCell,
  DomainViolation,
  UnknownTable,
  // numerical failures
  NonFinite,
  DidNotConverge,
  IntegrationFailure,
  NoConvergence,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for errors caused by bad inputs or configuration (CLI exit 2),
/// false for numerical failures encountered during computation (exit 3).
inline bool is_input_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::DidNotConverge:
    case ErrorCode::IntegrationFailure:
    case ErrorCode::NoConvergence:
      return false;
    default:
      return true;
  }
}

inline const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IndexZero: return "IndexZero";
    case ErrorCode::ZeroLength: return "ZeroLength";
    case ErrorCode::DegenerateMixture: return "DegenerateMixture";
    case ErrorCode::RankDeficientInstruments: return "RankDeficientInstruments";
    case ErrorCode::BasisCollision: return "BasisCollision";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
  }
  return "Unknown";
}

}  // namespace nivtest
