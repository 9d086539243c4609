#include "wavekit/error.hpp"

namespace wavekit {

std::string_view code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::NonPositiveMass: return "NonPositiveMass";
  case ErrorCode::NonPositiveWidth: return "NonPositiveWidth";
  case ErrorCode::FrameMismatch: return "FrameMismatch";
  case ErrorCode::UnsupportedUnitPair: return "UnsupportedUnitPair";
  case ErrorCode::NotNormalized: return "NotNormalized";
  case ErrorCode::TooFewSamples: return "TooFewSamples";
  case ErrorCode::NegativeAmplitude: return "NegativeAmplitude";
  case ErrorCode::NonMonotoneGrid: return "NonMonotoneGrid";
  case ErrorCode::DivergentNorm: return "DivergentNorm";
  case ErrorCode::MaxSubdivisions: return "MaxSubdivisions";
  case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
  case ErrorCode::MethodUnavailable: return "MethodUnavailable";
  case ErrorCode::GridTooCoarse: return "GridTooCoarse";
  case ErrorCode::NotRestFrame: return "NotRestFrame";
  case ErrorCode::TailNotConverged: return "TailNotConverged";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_convergence_failure(ErrorCode code) {
  switch (code) {
  case ErrorCode::DivergentNorm:
  case ErrorCode::MaxSubdivisions:
  case ErrorCode::NonFiniteIntegrand:
  case ErrorCode::GridTooCoarse:
  case ErrorCode::TailNotConverged:
    return true;
  default:
    return false;
  }
}

} // namespace wavekit
