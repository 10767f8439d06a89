#include "diver/util/error.hpp"

#include <array>
#include <utility>

namespace diver {

namespace {
constexpr std::array<std::pair<ErrorCode, std::string_view>, 27> kNames{{
    {ErrorCode::BadArgument, "BadArgument"},
    {ErrorCode::UnknownVerb, "UnknownVerb"},
    {ErrorCode::DeviceFault, "DeviceFault"},
    {ErrorCode::NoSuchTask, "NoSuchTask"},
    {ErrorCode::DuplicateName, "DuplicateName"},
    {ErrorCode::InvalidScenario, "InvalidScenario"},
    {ErrorCode::UnmappedAddress, "UnmappedAddress"},
    {ErrorCode::ChannelOutOfRange, "ChannelOutOfRange"},
    {ErrorCode::FlashOutOfRange, "FlashOutOfRange"},
    {ErrorCode::ParseError, "ParseError"},
    {ErrorCode::DivByZero, "DivByZero"},
    {ErrorCode::UnknownFunction, "UnknownFunction"},
    {ErrorCode::TypeError, "TypeError"},
    {ErrorCode::NoSuchTimer, "NoSuchTimer"},
    {ErrorCode::RateTooHigh, "RateTooHigh"},
    {ErrorCode::AuthFailure, "AuthFailure"},
    {ErrorCode::ReplayDetected, "ReplayDetected"},
    {ErrorCode::StaleTimestamp, "StaleTimestamp"},
    {ErrorCode::BadMagic, "BadMagic"},
    {ErrorCode::BadVersion, "BadVersion"},
    {ErrorCode::BadFrame, "BadFrame"},
    {ErrorCode::ConnectionLost, "ConnectionLost"},
    {ErrorCode::Timeout, "Timeout"},
    {ErrorCode::InsufficientSamples, "InsufficientSamples"},
    {ErrorCode::VersionMismatch, "VersionMismatch"},
    {ErrorCode::CorruptFile, "CorruptFile"},
    {ErrorCode::Unknown, "Unknown"},
}};
}  // namespace

std::string_view error_name(ErrorCode code) {
  for (const auto& [c, n] : kNames)
    if (c == code) return n;
  return "Unknown";
}

ErrorCode error_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames)
    if (n == name) return c;
  return ErrorCode::Unknown;
}

}  // namespace diver
