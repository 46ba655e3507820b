// SPDX-License-Identifier: Apache-2.0
#include "varichar/error.hpp"

namespace varichar {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::AccessWhileUnpowered: return "AccessWhileUnpowered";
    case ErrorCode::DapDisabled: return "DapDisabled";
    case ErrorCode::UnmappedAddress: return "UnmappedAddress";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::SensorAbsent: return "SensorAbsent";
    case ErrorCode::SensorUnpowered: return "SensorUnpowered";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ReservedBitsSet: return "ReservedBitsSet";
    case ErrorCode::CoreResetOnUcla: return "CoreResetOnUcla";
    case ErrorCode::BadCommand: return "BadCommand";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::BadChecksum: return "BadChecksum";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MissingEof: return "MissingEof";
    case ErrorCode::OverlappingData: return "OverlappingData";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::OverCurrent: return "OverCurrent";
    case ErrorCode::NotAdjustable: return "NotAdjustable";
    case ErrorCode::OutOfSweepRange: return "OutOfSweepRange";
    case ErrorCode::NonPositiveResistance: return "NonPositiveResistance";
    case ErrorCode::VerifyMismatch: return "VerifyMismatch";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::LatchUp: return "LatchUp";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace varichar
