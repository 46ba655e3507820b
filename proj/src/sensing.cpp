// SPDX-License-Identifier: Apache-2.0
#include "varichar/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "varichar/chip.hpp"
#include "varichar/error.hpp"

namespace varichar {

double amplifier_gain(double r_g_ohm) {
  if (!(r_g_ohm > 0.0)) throw Error(ErrorCode::NonPositiveResistance, "R_G must be > 0");
  if (std::isinf(r_g_ohm)) return 1.0;
  return 1.0 + 100000.0 / r_g_ohm;
}

std::uint32_t adc_sample(double v_mv, const AdcSpec& spec) {
  if (!(v_mv > 0.0)) return 0;  // also maps NaN to 0
  const double scaled = std::floor(std::min(v_mv, spec.vref_mv) / spec.vref_mv * static_cast<double>(1u << spec.bits));
  return std::min(static_cast<std::uint32_t>(scaled), spec.max_code());
}

double sense_drop_mv(double i_ma, const SenseChannelSpec& spec) { return i_ma * spec.r_sense_ohm; }

std::uint32_t current_to_adc(double i_ma, const SenseChannelSpec& spec) {
  require(i_ma >= 0.0, "current must be >= 0");
  const double v_in = sense_drop_mv(i_ma, spec) + spec.offset_uv / 1000.0;
  return adc_sample(v_in * spec.gain(), spec.adc);
}

Reading current_from_code(std::uint32_t code, const SenseChannelSpec& spec) {
  require(code <= spec.adc.max_code(), "ADC code out of range");
  const double v_out = code * spec.adc.lsb_mv();
  return {v_out / spec.gain() / spec.r_sense_ohm, code == spec.adc.max_code()};
}

FrequencyCount count_frequency(double f_mhz, const FreqGateSpec& gate) {
  require(f_mhz >= 0.0 && gate.gate_ms > 0.0, "frequency and gate must be non-negative");
  const double cycles = std::floor(f_mhz * gate.gate_ms * 1000.0);
  if (cycles >= 65535.0) return {65535, true};
  return {static_cast<std::uint16_t>(cycles), false};
}

FrequencyCount measure_frequency(const ChipInstance& chip, std::size_t ro_idx, const FreqGateSpec& gate) {
  // SELECT is six bits wide but only 60 oscillators exist
  require(ro_idx < kRingOscillatorCount, "ring oscillator index must be < 60");
  return count_frequency(chip.ro_frequency_mhz(ro_idx), gate);
}

std::uint8_t read_count_byte(std::uint16_t count, OutputSelect os) noexcept {
  return os == OutputSelect::High ? static_cast<std::uint8_t>(count >> 8) : static_cast<std::uint8_t>(count & 0xFF);
}

Reading freq_from_count(std::uint16_t count, const FreqGateSpec& gate) {
  require(gate.gate_ms > 0.0, "gate must be > 0");
  return {count / (gate.gate_ms * 1000.0), count == 65535};
}

double fmax_estimate(std::span<const double> freqs_mhz, double kappa) {
  if (freqs_mhz.empty()) return 0.0;
  return kappa * *std::min_element(freqs_mhz.begin(), freqs_mhz.end());
}

double integrate_leakage(double i_na, const LeakageChainSpec& chain) {
  require(i_na >= 0.0, "leakage current must be >= 0");
  // nA * ms / nF = mV
  return std::min(i_na * chain.t_int_ms / chain.c_int_nf, chain.adc.vref_mv);
}

std::uint32_t leakage_to_adc(double i_na, const LeakageChainSpec& chain) {
  return adc_sample(integrate_leakage(i_na, chain), chain.adc);
}

Reading leakage_from_code(std::uint32_t code, const LeakageChainSpec& chain) {
  require(code <= chain.adc.max_code(), "ADC code out of range");
  return {chain.c_int_nf * (code * chain.adc.lsb_mv()) / chain.t_int_ms, code == chain.adc.max_code()};
}

double power_estimate(double v_mv, double i_ma) { return v_mv * i_ma / 1000.0; }

}  // namespace varichar
