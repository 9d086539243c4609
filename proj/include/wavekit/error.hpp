#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavekit {

enum class ErrorCode {
  NonPositiveMass,
  NonPositiveWidth,
  FrameMismatch,
  UnsupportedUnitPair,
  NotNormalized,
  TooFewSamples,
  NegativeAmplitude,
  NonMonotoneGrid,
  DivergentNorm,
  MaxSubdivisions,
  NonFiniteIntegrand,
  MethodUnavailable,
  GridTooCoarse,
  NotRestFrame,
  TailNotConverged,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view code_name(ErrorCode code);

// True for failures of a numerical procedure to reach its tolerance, as
// opposed to rejected input.
bool is_convergence_failure(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

} // namespace wavekit
