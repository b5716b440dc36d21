#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>

namespace facildyn {

enum class ErrorCode {
  InvalidArgument,
  DivisionByZero,
  NonGeneric,
  ConsumerDecoupled,
  Transcritical,
  Domain,
  Stiffness,
  NoCrossing,
  Bracket,
  Inconclusive,
  Chattering,
  Degenerate,
  Io,
  Internal,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

// Validation failures are caller mistakes; everything else is a numerical outcome.
[[nodiscard]] constexpr bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DivisionByZero:
    case ErrorCode::NonGeneric:
    case ErrorCode::ConsumerDecoupled:
    case ErrorCode::Transcritical:
    case ErrorCode::Domain:
    case ErrorCode::Degenerate:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::array<double, 2>> state = std::nullopt)
      : std::runtime_error(what), code_(code), state_(state) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// Last valid state when the failure happened mid-integration.
  [[nodiscard]] const std::optional<std::array<double, 2>>& state() const noexcept { return state_; }

 private:
  ErrorCode code_;
  std::optional<std::array<double, 2>> state_;
};

}  // namespace facildyn
