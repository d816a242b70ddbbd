#include "gex/error.hpp"

namespace gex {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::BallTooLarge: return "BallTooLarge";
    case ErrorCode::NotAttractive: return "NotAttractive";
    case ErrorCode::SupportIndicatorNotMonotone: return "SupportIndicatorNotMonotone";
    case ErrorCode::BoundarySignViolation: return "BoundarySignViolation";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::DivisionNearZero: return "DivisionNearZero";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::ConstructionMismatch: return "ConstructionMismatch";
    case ErrorCode::MarkTimeCollision: return "MarkTimeCollision";
    case ErrorCode::TreeSizeExplosion: return "TreeSizeExplosion";
    case ErrorCode::MissingLeafSpin: return "MissingLeafSpin";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::NoExtinctionSamples: return "NoExtinctionSamples";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::SetTooLarge: return "SetTooLarge";
    case ErrorCode::RhoDegenerate: return "RhoDegenerate";
    case ErrorCode::CoincidentStart: return "CoincidentStart";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ProfileDoesNotBracket: return "ProfileDoesNotBracket";
    case ErrorCode::DeskScaleExceeded: return "DeskScaleExceeded";
  }
  return "Unknown";
}

bool is_runtime_guard(ErrorCode code) {
  switch (code) {
    case ErrorCode::TreeSizeExplosion:
    case ErrorCode::DeskScaleExceeded:
    case ErrorCode::StepTooLarge:
    case ErrorCode::DivisionNearZero:
    case ErrorCode::NoExtinctionSamples:
    case ErrorCode::MarkTimeCollision:
    case ErrorCode::SupportIndicatorNotMonotone:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace gex
