// SPDX-License-Identifier: Apache-2.0
//
// Board power path. A 12-bit 8-channel DAC generates one reference per rail,
// an analog buffer drives each rail from its reference, and the controller
// sequences the rails by writing DAC channels in order.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "varichar/codecs.hpp"
#include "varichar/types.hpp"

namespace varichar {

class ChipInstance;

struct RailSpec {
  Rail rail;
  double nominal_mv;
  bool adjustable;
  std::uint8_t dac_channel;
};

/// DVDD 3.3 V, DVDD2 1.8 V, AVDD 1.0 V, AVDD2 0.5 V; COREVDD and SRAMVDD
/// nominal 0.9 V and software adjustable; WRAPPERVDD and SENSEVDD 1.0 V.
const RailSpec& rail_spec(Rail rail);
Rail rail_for_channel(std::uint8_t channel);

inline constexpr double kDacVrefMv = 3300.0;
inline constexpr std::uint16_t kDacFullScale = 4095;
inline constexpr double kBufferLimitMa = 30.0;

/// round(mv / vref * 4095). Throws OutOfRange outside [0, vref].
std::uint16_t dac_code_for(double mv, double vref_mv = kDacVrefMv);
double dac_volts(std::uint16_t code, double vref_mv = kDacVrefMv);

/// Unity-gain buffer with a 30 mA per-channel drive limit (inclusive).
double buffer_out(double vin_mv, double i_load_ma, double limit_ma = kBufferLimitMa);

class DacState {
 public:
  struct Channel {
    bool valid = false;
    std::uint16_t code = 0;
    friend bool operator==(const Channel&, const Channel&) = default;
  };

  explicit DacState(double vref_mv = kDacVrefMv) : vref_mv_(vref_mv) {}

  void apply(const DacCommand& cmd);
  /// Output is held at 0 V until the channel's first valid write.
  double output_mv(std::uint8_t channel) const;
  const Channel& channel(std::uint8_t ch) const { return channels_.at(ch); }
  double vref_mv() const noexcept { return vref_mv_; }

  friend bool operator==(const DacState&, const DacState&) = default;

 private:
  std::array<Channel, 8> channels_{};
  double vref_mv_;
};

struct SequenceStep {
  Rail rail;
  double target_mv;
  TimeNs dwell_ns;

  friend bool operator==(const SequenceStep&, const SequenceStep&) = default;
};

struct PowerSequence {
  std::vector<SequenceStep> steps;

  /// Throws PreconditionViolation if a rail appears twice.
  void validate() const;
  bool covers_all_rails() const;
};

inline constexpr TimeNs kDefaultDwellNs = 1'000'000;

/// DVDD, DVDD2, AVDD, AVDD2, WRAPPERVDD, SENSEVDD, SRAMVDD, COREVDD with
/// 1 ms dwell each. Core and SRAM targets default to nominal.
PowerSequence default_power_sequence(double vcore_mv = 900.0, double vsram_mv = 900.0,
                                     TimeNs dwell_ns = kDefaultDwellNs);

struct TimedFrame {
  TimeNs t_ns;
  I2cFrame frame;

  friend bool operator==(const TimedFrame&, const TimedFrame&) = default;
};

/// One frame per step in order; step k is sent at the sum of the previous
/// dwells. The DAC state is updated as each frame is issued.
std::vector<TimedFrame> power_up(const PowerSequence& seq, DacState& dac,
                                 std::uint8_t addr7 = kDefaultDacAddr);

/// Zeroes each rail in the reverse rail order of `seq` (the power-up
/// sequence), using the reversed dwell times.
std::vector<TimedFrame> power_down(const PowerSequence& seq, DacState& dac,
                                   std::uint8_t addr7 = kDefaultDacAddr);

struct SweepBounds {
  double min_mv = 550.0;
  double max_mv = 1100.0;

  bool contains(double mv) const noexcept { return mv >= min_mv && mv <= max_mv; }
};

/// Retargets an adjustable rail. Throws NotAdjustable or OutOfSweepRange.
I2cFrame set_rail_voltage(Rail rail, double mv, const SweepBounds& bounds = {}, double vref_mv = kDacVrefMv,
                          std::uint8_t addr7 = kDefaultDacAddr);

/// Delivers a DAC frame through the buffer onto the chip: updates the DAC,
/// sets the rail to the DAC output and checks the buffer's drive limit
/// against the rail's load. Returns the rail that moved.
Rail drive_frame(ChipInstance& chip, DacState& dac, const I2cFrame& frame,
                 double limit_ma = kBufferLimitMa);

}  // namespace varichar
