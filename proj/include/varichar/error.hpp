// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace varichar {

enum class ErrorCode {
  PreconditionViolation,
  InvalidDistribution,
  // chip / debug port
  AccessWhileUnpowered,
  DapDisabled,
  UnmappedAddress,
  Misaligned,
  SensorAbsent,
  SensorUnpowered,
  // codecs
  LengthMismatch,
  ReservedBitsSet,
  CoreResetOnUcla,
  BadCommand,
  BadLength,
  BadChecksum,
  MalformedRecord,
  MissingEof,
  OverlappingData,
  // power
  OutOfRange,
  OverCurrent,
  NotAdjustable,
  OutOfSweepRange,
  // sensing
  NonPositiveResistance,
  // controller
  VerifyMismatch,
  Timeout,
  LatchUp,
  ProtocolViolation,
  // orchestrator
  TooFewRecords,
  ParseError,
  ValidationError,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library surfaces as this exception. `line()` is set
/// for text-format errors (HEX records, config parse errors).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::PreconditionViolation, what);
}

}  // namespace varichar
