#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flarecast {

enum class ErrorKind {
  kValidation,
  kEmptyStream,
  kInsufficientReferences,
  kDegenerateGeometry,
  kCanvasTooSmall,
  kDimensionMismatch,
  kUndefinedCorrelation,
  kEmptyMask,
  kNoFlame,
  kZeroFrequencyClass,
  kDivisionByZero,
  kNonFiniteLoss,
  kCheckpointNotFound,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind is stable and meant for
/// programmatic handling; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::kValidation, message);
}

}  // namespace flarecast
