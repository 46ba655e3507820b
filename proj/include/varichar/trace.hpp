// SPDX-License-Identifier: Apache-2.0
//
// Run trace: one entry per wire event (DAC frame, scan shift, debug
// transaction, reset pin, sync message, sensor conversion). Serialized as
// JSON lines:
//   {"chip":0,"kind":"dap","payload":{...},"point":0,"source":"master","step":5,"t_ns":1234}
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "varichar/codecs.hpp"
#include "varichar/types.hpp"

namespace varichar {

enum class TraceSource : std::uint8_t { Master, Slave };

enum class TraceKind : std::uint8_t {
  I2cDac,      // addr7, bytes
  Scan,        // bits
  Dap,         // op, port, addr, data (read data for reads)
  Pin,         // label = pin name
  Sync,        // label = message kind, value = progress step, bytes = payload
  SensorFreq,  // value = ro index, code = raw count
  SensorAdc,   // label = channel, code = raw ADC code
};

std::string_view to_string(TraceKind k) noexcept;

/// Trace phase for events outside the 12-step run (power-down between points).
inline constexpr std::uint8_t kPhasePowerDown = 0;

struct TraceEvent {
  TimeNs t_ns = 0;
  TraceSource source = TraceSource::Master;
  TraceKind kind = TraceKind::Pin;
  std::uint8_t step = 0;  // master step in progress when the event happened
  std::uint32_t chip = 0;
  std::uint32_t point = 0;

  std::uint8_t addr7 = 0;
  std::vector<std::uint8_t> bytes;
  ScanBits bits;
  DapTransaction dap;
  std::string label;
  std::uint32_t value = 0;
  std::uint32_t code = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

using Trace = std::vector<TraceEvent>;

std::string to_json_line(const TraceEvent& ev);
TraceEvent from_json_line(std::string_view line);

void write_jsonl(std::ostream& os, const Trace& trace);

}  // namespace varichar
