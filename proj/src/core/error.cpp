#include "flarecast/error.hpp"

namespace flarecast {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kEmptyStream: return "empty stream";
    case ErrorKind::kInsufficientReferences: return "insufficient references";
    case ErrorKind::kDegenerateGeometry: return "degenerate reference geometry";
    case ErrorKind::kCanvasTooSmall: return "canvas too small";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kUndefinedCorrelation: return "undefined correlation";
    case ErrorKind::kEmptyMask: return "empty mask";
    case ErrorKind::kNoFlame: return "no flame detected";
    case ErrorKind::kZeroFrequencyClass: return "zero-frequency class";
    case ErrorKind::kDivisionByZero: return "division by zero";
    case ErrorKind::kNonFiniteLoss: return "non-finite loss";
    case ErrorKind::kCheckpointNotFound: return "checkpoint not found";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace flarecast
