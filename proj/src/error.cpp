#include "loopshape/error.hpp"

namespace loopshape {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::AboveNyquist: return "AboveNyquist";
    case ErrorCode::OutsideFrdRange: return "OutsideFrdRange";
    case ErrorCode::PoleArgument: return "PoleArgument";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::IterationBudget: return "IterationBudget";
    case ErrorCode::DegenerateInterpolation: return "DegenerateInterpolation";
    case ErrorCode::ComplexResidue: return "ComplexResidue";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InsufficientGrid: return "InsufficientGrid";
    case ErrorCode::ImproperTransferFunction: return "ImproperTransferFunction";
    case ErrorCode::BilinearSingularity: return "BilinearSingularity";
    case ErrorCode::FrdPlantUnsupported: return "FrdPlantUnsupported";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotoneFrequencies: return "NonMonotoneFrequencies";
    case ErrorCode::MixedColumnSchemas: return "MixedColumnSchemas";
  }
  return "Unknown";
}

std::string_view error_module(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DomainMismatch:
    case ErrorCode::AboveNyquist:
    case ErrorCode::OutsideFrdRange:
      return "tfcore";
    case ErrorCode::PoleArgument:
    case ErrorCode::OrderOutOfRange:
    case ErrorCode::UnsupportedOrder:
    case ErrorCode::IterationBudget:
    case ErrorCode::DegenerateInterpolation:
    case ErrorCode::ComplexResidue:
      return "fracapprox";
    case ErrorCode::InvalidSpec:
      return "filters";
    case ErrorCode::InsufficientGrid:
      return "analysis";
    case ErrorCode::ImproperTransferFunction:
    case ErrorCode::BilinearSingularity:
    case ErrorCode::FrdPlantUnsupported:
      return "timesim";
    case ErrorCode::VersionUnsupported:
    case ErrorCode::SchemaViolation:
    case ErrorCode::MalformedRow:
    case ErrorCode::NonMonotoneFrequencies:
    case ErrorCode::MixedColumnSchemas:
      return "session";
  }
  return "unknown";
}

}  // namespace loopshape
