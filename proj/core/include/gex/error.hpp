#pragma once

#include <stdexcept>
#include <string>

namespace gex {

enum class ErrorCode {
  RadiusTooLarge,
  DimensionUnsupported,
  InvalidArgument,
  ParameterOutOfRange,
  BallTooLarge,
  NotAttractive,
  SupportIndicatorNotMonotone,
  BoundarySignViolation,
  StepTooLarge,
  DivisionNearZero,
  NonPositiveValue,
  ConstructionMismatch,
  MarkTimeCollision,
  TreeSizeExplosion,
  MissingLeafSpin,
  HorizonExceeded,
  NoExtinctionSamples,
  SupportMismatch,
  SetTooLarge,
  RhoDegenerate,
  CoincidentStart,
  PreconditionViolated,
  ProfileDoesNotBracket,
  DeskScaleExceeded,
};

const char* to_string(ErrorCode code);

// True for errors raised by runtime guards (size caps, desk-scale limits)
// rather than by malformed input.
bool is_runtime_guard(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace gex
