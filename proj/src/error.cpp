#include "outlr/error.hpp"

namespace outlr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedProblem: return "MalformedProblem";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonpositiveDelta: return "NonpositiveDelta";
    case ErrorCode::MixedResidualArity: return "MixedResidualArity";
    case ErrorCode::NonpositiveDepth: return "NonpositiveDepth";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::UnderconstrainedPoint: return "UnderconstrainedPoint";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DataError: return "DataError";
  }
  return "Unknown";
}

}  // namespace outlr
