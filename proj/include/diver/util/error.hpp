#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diver {

enum class ErrorCode {
  BadArgument,
  UnknownVerb,
  DeviceFault,
  NoSuchTask,
  DuplicateName,
  InvalidScenario,
  UnmappedAddress,
  ChannelOutOfRange,
  FlashOutOfRange,
  ParseError,
  DivByZero,
  UnknownFunction,
  TypeError,
  NoSuchTimer,
  RateTooHigh,
  AuthFailure,
  ReplayDetected,
  StaleTimestamp,
  BadMagic,
  BadVersion,
  BadFrame,
  ConnectionLost,
  Timeout,
  InsufficientSamples,
  VersionMismatch,
  CorruptFile,
  Unknown,
};

std::string_view error_name(ErrorCode code);
/// Inverse of error_name; unrecognised names map to ErrorCode::Unknown.
ErrorCode error_from_name(std::string_view name);

/// Every failure surfaced by the library carries one of the wire-visible codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace diver
