#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stagetrack {

enum class ErrorCode {
  InvalidConfig,
  DegenerateGeometry,
  CoincidentPoint,
  NegativeTof,
  InsufficientAnchors,
  NoConvergence,
  NumericalBreakdown,
  Unobservable,
  FrameOrder,
  UnknownZone,
  UnknownScene,
  FieldRange,
};

std::string_view to_string(ErrorCode code);

/// Contract violation or unrecoverable input error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stagetrack
