#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ksupp {

enum class ErrorKind {
  InvalidInput,
  UnsupportedType,
  WeylGroupTooLarge,
  NotDominant,
  DimensionCapExceeded,
  ShapeMismatch,
  NotDominantRemainder,
  InsufficientData,
  MarginTooSmall,
  UnsupportedGroupForSampling,
  QuadratureNotConverged,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::UnsupportedType: return "UnsupportedType";
    case ErrorKind::WeylGroupTooLarge: return "WeylGroupTooLarge";
    case ErrorKind::NotDominant: return "NotDominant";
    case ErrorKind::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotDominantRemainder: return "NotDominantRemainder";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::MarginTooSmall: return "MarginTooSmall";
    case ErrorKind::UnsupportedGroupForSampling: return "UnsupportedGroupForSampling";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above; the
/// CLI maps kinds onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ksupp
