// SPDX-License-Identifier: Apache-2.0
#include "varichar/power.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varichar/chip.hpp"
#include "varichar/error.hpp"

namespace varichar {

namespace {

constexpr std::array<RailSpec, kRailCount> kRailSpecs = {{
    {Rail::DVDD, 3300.0, false, 0},
    {Rail::DVDD2, 1800.0, false, 1},
    {Rail::AVDD, 1000.0, false, 2},
    {Rail::AVDD2, 500.0, false, 3},
    {Rail::COREVDD, 900.0, true, 4},
    {Rail::SRAMVDD, 900.0, true, 5},
    {Rail::WRAPPERVDD, 1000.0, false, 6},
    {Rail::SENSEVDD, 1000.0, false, 7},
}};

}  // namespace

const RailSpec& rail_spec(Rail rail) { return kRailSpecs[index(rail)]; }

Rail rail_for_channel(std::uint8_t channel) {
  require(channel < kRailCount, "DAC channel out of range");
  return kRailSpecs[channel].rail;
}

std::uint16_t dac_code_for(double mv, double vref_mv) {
  if (!(mv >= 0.0 && mv <= vref_mv)) {
    throw Error(ErrorCode::OutOfRange, std::to_string(mv) + " mV outside DAC range");
  }
  return static_cast<std::uint16_t>(std::lround(mv / vref_mv * kDacFullScale));
}

double dac_volts(std::uint16_t code, double vref_mv) {
  require(code <= kDacFullScale, "DAC code out of range");
  return static_cast<double>(code) / kDacFullScale * vref_mv;
}

double buffer_out(double vin_mv, double i_load_ma, double limit_ma) {
  if (i_load_ma > limit_ma) {
    throw Error(ErrorCode::OverCurrent,
                "buffer load " + std::to_string(i_load_ma) + " mA exceeds " + std::to_string(limit_ma) + " mA");
  }
  return vin_mv;
}

void DacState::apply(const DacCommand& cmd) {
  require(cmd.channel < channels_.size() && cmd.code <= kDacFullScale, "invalid DAC command");
  channels_[cmd.channel] = {true, cmd.code};
}

double DacState::output_mv(std::uint8_t channel) const {
  const auto& ch = channels_.at(channel);
  return ch.valid ? dac_volts(ch.code, vref_mv_) : 0.0;
}

void PowerSequence::validate() const {
  std::array<bool, kRailCount> seen{};
  for (const auto& s : steps) {
    require(!seen[index(s.rail)], "rail appears twice in power sequence");
    seen[index(s.rail)] = true;
  }
}

bool PowerSequence::covers_all_rails() const {
  std::array<bool, kRailCount> seen{};
  for (const auto& s : steps) seen[index(s.rail)] = true;
  return steps.size() == kRailCount && std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

PowerSequence default_power_sequence(double vcore_mv, double vsram_mv, TimeNs dwell_ns) {
  PowerSequence seq;
  for (Rail r : {Rail::DVDD, Rail::DVDD2, Rail::AVDD, Rail::AVDD2, Rail::WRAPPERVDD, Rail::SENSEVDD, Rail::SRAMVDD,
                 Rail::COREVDD}) {
    double target = rail_spec(r).nominal_mv;
    if (r == Rail::COREVDD) target = vcore_mv;
    if (r == Rail::SRAMVDD) target = vsram_mv;
    seq.steps.push_back({r, target, dwell_ns});
  }
  return seq;
}

std::vector<TimedFrame> power_up(const PowerSequence& seq, DacState& dac, std::uint8_t addr7) {
  seq.validate();
  std::vector<TimedFrame> out;
  out.reserve(seq.steps.size());
  TimeNs t = 0;
  for (const auto& s : seq.steps) {
    const auto& spec = rail_spec(s.rail);
    auto frame = dac_frame(spec.dac_channel, dac_code_for(s.target_mv, dac.vref_mv()), addr7);
    dac.apply(parse_dac_frame(frame));
    out.push_back({t, std::move(frame)});
    t += s.dwell_ns;
  }
  return out;
}

std::vector<TimedFrame> power_down(const PowerSequence& seq, DacState& dac, std::uint8_t addr7) {
  seq.validate();
  std::vector<TimedFrame> out;
  out.reserve(seq.steps.size());
  TimeNs t = 0;
  for (auto it = seq.steps.rbegin(); it != seq.steps.rend(); ++it) {
    auto frame = dac_frame(rail_spec(it->rail).dac_channel, 0, addr7);
    dac.apply(parse_dac_frame(frame));
    out.push_back({t, std::move(frame)});
    t += it->dwell_ns;
  }
  return out;
}

I2cFrame set_rail_voltage(Rail rail, double mv, const SweepBounds& bounds, double vref_mv, std::uint8_t addr7) {
  const auto& spec = rail_spec(rail);
  if (!spec.adjustable) {
    throw Error(ErrorCode::NotAdjustable, std::string(to_string(rail)) + " is not software adjustable");
  }
  if (!bounds.contains(mv)) {
    throw Error(ErrorCode::OutOfSweepRange, std::to_string(mv) + " mV outside sweep bounds");
  }
  return dac_frame(spec.dac_channel, dac_code_for(mv, vref_mv), addr7);
}

Rail drive_frame(ChipInstance& chip, DacState& dac, const I2cFrame& frame, double limit_ma) {
  const DacCommand cmd = parse_dac_frame(frame);
  dac.apply(cmd);
  const Rail rail = rail_for_channel(cmd.channel);
  chip.apply_rail(rail, dac.output_mv(cmd.channel));
  buffer_out(chip.rail_mv(rail), chip.current_draw_ma(rail), limit_ma);
  return rail;
}

}  // namespace varichar
