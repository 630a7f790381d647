#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace demr {

enum class ErrorCode {
  kNonConvergence,
  kNotSymmetric,
  kDegenerateInput,
  kNotSkew,
  kInvalidPoint,
  kRankDeficient,
  kUnknownTag,
  kTagMismatch,
  kDispersedSamples,
  kBadFraction,
  kSpectralTie,
  kLengthMismatch,
  kDimMismatch,
  kMartinUndefined,
  kShapeMismatch,
  kNonFiniteLoss,
  kBadConfig,
  kIngestError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Base of every error raised by the library. `code()` identifies the
// failure class; `what()` carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// An error that still produced a usable value (the nearest-rotation
// representative, the last fixed-point iterate, ...). Callers that can live
// with the degraded result catch this and read `value()`.
template <typename T>
class ErrorWithValue : public Error {
 public:
  ErrorWithValue(ErrorCode code, const std::string& message, T value,
                 double residual)
      : Error(code, message), value_(std::move(value)), residual_(residual) {}

  const T& value() const noexcept { return value_; }
  double residual() const noexcept { return residual_; }

 private:
  T value_;
  double residual_;
};

}  // namespace demr
