// SPDX-License-Identifier: Apache-2.0
//
// Forward (physical quantity -> raw code) and inverse (code -> estimate)
// models of the board's three measurement chains:
//   current:   sense resistor -> instrumentation amp (G = 1 + 100k/R_G) -> ADC
//   leakage:   integrator V = I*t/C -> ADC
//   frequency: ring oscillator gated into a 16-bit counter, read a byte at a time
#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "varichar/types.hpp"

namespace varichar {

class ChipInstance;

struct AdcSpec {
  unsigned bits = 10;
  double vref_mv = 3300.0;

  std::uint32_t max_code() const noexcept { return (1u << bits) - 1; }
  double lsb_mv() const noexcept { return vref_mv / static_cast<double>(1u << bits); }
};

/// Estimate recovered from a raw code. `saturated` marks a full-scale code,
/// where the true value may be anywhere above the estimate.
struct Reading {
  double value = 0.0;
  bool saturated = false;
};

inline constexpr double kInfiniteOhms = std::numeric_limits<double>::infinity();

/// 1 + 100 kOhm / R_G; an open R_G (infinity) gives unity gain.
double amplifier_gain(double r_g_ohm);

/// R_G giving a gain of 200.
inline constexpr double kGain200RgOhm = 100000.0 / 199.0;

struct SenseChannelSpec {
  double r_sense_ohm = 1.0 / 3.0;
  double r_g_ohm = kGain200RgOhm;
  double offset_uv = 0.0;  // 25 for the amplifier's worst case
  AdcSpec adc;

  double gain() const { return amplifier_gain(r_g_ohm); }

  /// Three 1 Ohm resistors in parallel on COREVDD.
  static SenseChannelSpec core() { return {1.0 / 3.0, kGain200RgOhm, 0.0, {}}; }
  /// 7.50 Ohm on SRAMVDD.
  static SenseChannelSpec sram() { return {7.5, kGain200RgOhm, 0.0, {}}; }
};

struct LeakageChainSpec {
  double c_int_nf = 1.0;
  double t_int_ms = 10.0;
  AdcSpec adc;

  /// Current that charges the integrator to vref in one window (330 nA by default).
  double full_scale_na() const { return c_int_nf * adc.vref_mv / t_int_ms; }
};

struct FreqGateSpec {
  double gate_ms = 1.0;

  double max_mhz() const { return 65535.0 / (gate_ms * 1000.0); }
};

/// floor(clamp(v, 0, vref) / vref * 2^bits), saturating at 2^bits - 1.
std::uint32_t adc_sample(double v_mv, const AdcSpec& spec);

/// Voltage across the sense resistor, in mV.
double sense_drop_mv(double i_ma, const SenseChannelSpec& spec);
std::uint32_t current_to_adc(double i_ma, const SenseChannelSpec& spec);
Reading current_from_code(std::uint32_t code, const SenseChannelSpec& spec);

struct FrequencyCount {
  std::uint16_t count = 0;
  bool saturated = false;
};

/// count = min(floor(f * gate), 65535) for the selected oscillator.
FrequencyCount measure_frequency(const ChipInstance& chip, std::size_t ro_idx, const FreqGateSpec& gate = {});
/// Same counting rule for a known frequency.
FrequencyCount count_frequency(double f_mhz, const FreqGateSpec& gate = {});

enum class OutputSelect : std::uint8_t { Low, High };

std::uint8_t read_count_byte(std::uint16_t count, OutputSelect os) noexcept;

Reading freq_from_count(std::uint16_t count, const FreqGateSpec& gate = {});

/// kappa * min over the measured oscillator frequencies; 0 for an empty set.
double fmax_estimate(std::span<const double> freqs_mhz, double kappa = 1.0);

/// Integrator output V = I * t / C, clamped to the ADC reference.
double integrate_leakage(double i_na, const LeakageChainSpec& chain = {});
std::uint32_t leakage_to_adc(double i_na, const LeakageChainSpec& chain = {});
Reading leakage_from_code(std::uint32_t code, const LeakageChainSpec& chain = {});

/// V * I in mW.
double power_estimate(double v_mv, double i_ma);

}  // namespace varichar
