#include "stagetrack/error.hpp"

namespace stagetrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::CoincidentPoint: return "CoincidentPoint";
    case ErrorCode::NegativeTof: return "NegativeTof";
    case ErrorCode::InsufficientAnchors: return "InsufficientAnchors";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::Unobservable: return "Unobservable";
    case ErrorCode::FrameOrder: return "FrameOrder";
    case ErrorCode::UnknownZone: return "UnknownZone";
    case ErrorCode::UnknownScene: return "UnknownScene";
    case ErrorCode::FieldRange: return "FieldRange";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace stagetrack
