// SPDX-License-Identifier: Apache-2.0
//
// Behavioral model of the customized Cortex-M3 test chip: supply rails and
// power-state rules, the scan chain, the debug-visible register block, SRAM,
// ring oscillators and leakage devices, with per-chip process variability.
//
// There is no instruction execution. A test program is recognised by a
// descriptor at the start of SRAM (see ProgramDescriptor); once the core is
// released from SRAM the descriptor's result words appear after its latency
// and the core enters Sleep.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "varichar/codecs.hpp"
#include "varichar/types.hpp"

namespace varichar {

struct ModelConfig {
  // variability
  double sigma_leak = 0.8;     // lognormal shape of the die leakage factor
  double sigma_active = 0.05;  // relative, truncated normal
  double sigma_ro = 0.05;      // relative, per oscillator
  double sigma_sram = 0.02;    // relative
  // median leakage per device, indexed by LeakDevice (RVTP, RVTN, HVTP, HVTN)
  std::array<double, 4> leak_median_na = {40.0, 50.0, 4.0, 5.0};

  // voltage / temperature laws
  double v_nominal_mv = 900.0;
  double alpha = 1.3;
  double k_t_per_c = 0.002;
  double k_l_per_c = 0.08;
  double temp_c = 25.0;

  // nominal currents
  double i_core_active_ma = 15.0;
  double i_core_sleep_ma = 1.0;
  double i_sram_ma = 1.0;
  /// Currents of the jumpered fixed rails, indexed by Rail; the COREVDD and
  /// SRAMVDD entries are unused.
  std::array<double, kRailCount> fixed_rail_ma = {2.0, 1.0, 0.5, 0.2, 0.0, 0.0, 1.0, 0.5};

  /// Nominal frequency of each ring oscillator at v_nominal and 25 C.
  std::vector<double> ro_nominal_mhz = default_ro_nominal();
  double hclk_mhz = 20.0;

  std::uint32_t sram_base = 0x20000000;
  std::uint32_t sram_bytes = 64 * 1024;

  /// Throws InvalidDistribution.
  void validate() const;

  static std::vector<double> default_ro_nominal();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct VariabilityParams {
  std::uint64_t seed = 0;
  std::array<double, kRingOscillatorCount> ro_scale{};
  std::array<double, 4> leak_base_na{};
  double active_scale = 1.0;
  double sram_scale = 1.0;
  double temp_c = 25.0;

  friend bool operator==(const VariabilityParams&, const VariabilityParams&) = default;
};

/// Draws a chip's parameters. Same (seed, config) gives bit-identical params.
VariabilityParams draw_params(std::uint64_t seed, const ModelConfig& config);

enum class CoreState : std::uint8_t { Unpowered, Reset, Halted, Running, Sleep };

std::string_view to_string(CoreState s) noexcept;

/// Word layout the chip looks for at SRAM offset 0 when the core starts.
namespace program_layout {
inline constexpr std::uint32_t kMagic = 0x52484356;  // "VCHR"
inline constexpr std::uint32_t kMagicOffset = 0x0;
inline constexpr std::uint32_t kLatencyOffset = 0x4;   // latency in ns
inline constexpr std::uint32_t kResultOffset = 0x8;    // absolute result address
inline constexpr std::uint32_t kCountOffset = 0xC;     // number of result words
inline constexpr std::uint32_t kWordsOffset = 0x10;    // result words follow
inline constexpr std::uint32_t kMaxWords = 1024;
}  // namespace program_layout

struct ProgramDescriptor {
  std::uint32_t latency_ns = 0;
  std::uint32_t result_addr = 0;
  std::vector<std::uint32_t> words;

  friend bool operator==(const ProgramDescriptor&, const ProgramDescriptor&) = default;
};

class ChipInstance {
 public:
  ChipInstance(ChipVariant variant, std::uint64_t seed, const ModelConfig& config = {});

  ChipVariant variant() const noexcept { return variant_; }
  const VariabilityParams& params() const noexcept { return params_; }
  const ModelConfig& config() const noexcept { return config_; }

  double rail_mv(Rail r) const noexcept { return rails_[index(r)]; }
  bool energized(Rail r) const noexcept { return rails_[index(r)] > 0.0; }
  CoreState core_state() const noexcept { return core_; }
  bool mem_map() const noexcept { return mem_map_; }
  std::uint32_t dhcsr() const noexcept;
  bool latchup() const noexcept { return latchup_; }
  /// Number of times latch-up has been entered over the chip's lifetime.
  std::size_t latchup_events() const noexcept { return latchup_events_; }
  bool dap_enabled() const noexcept { return dap_enabled_; }
  const PllConfig& pll() const noexcept { return pll_; }
  double clock_mhz() const { return pll_.internal_mhz(config_.hclk_mhz); }
  TimeNs sim_time_ns() const noexcept { return time_ns_; }

  /// Sets a rail. Energizing SRAMVDD or COREVDD while DVDD is 0 (or dropping
  /// DVDD under them) latches up; DVDD rising from 0 puts the core in Reset;
  /// all rails at 0 is a full power-down and clears latch-up.
  void apply_rail(Rail rail, double mv);

  /// One debug-port transaction. Returns the read data (0 for writes).
  std::uint32_t dap_access(const DapTransaction& txn);

  /// Shifts a full image through the scan chain and returns the previous
  /// contents. The new image takes effect on completion.
  ScanBits shift_scan(const ScanBits& bits);

  /// Whole-chip reset (BASE_RESET pin or scan RESET bit).
  void base_reset();

  void step(TimeNs dt_ns);

  double current_draw_ma(Rail rail) const;
  double ro_frequency_mhz(std::size_t idx) const;
  double leakage_na(LeakDevice device) const;

  /// SRAM word for inspection, bypassing the debug port.
  std::optional<std::uint32_t> peek_word(std::uint32_t addr) const;
  /// Descriptor of the program the core is running, if it recognised one.
  const std::optional<ProgramDescriptor>& active_program() const noexcept { return program_; }

  friend bool operator==(const ChipInstance&, const ChipInstance&) = default;

 private:
  bool in_sram(std::uint32_t addr) const noexcept;
  void check_sensors() const;
  void release_core();
  void clear_debug_state();
  void power_off();
  std::optional<ProgramDescriptor> read_descriptor() const;

  ChipVariant variant_;
  ModelConfig config_;
  VariabilityParams params_;

  std::array<double, kRailCount> rails_{};
  CoreState core_ = CoreState::Unpowered;
  bool mem_map_ = false;
  std::uint32_t dhcsr_ctrl_ = 0;
  bool latchup_ = false;
  std::size_t latchup_events_ = 0;
  bool dap_enabled_ = false;
  PllConfig pll_;
  ScanBits chain_;
  std::vector<std::uint32_t> sram_;
  std::optional<ProgramDescriptor> program_;
  TimeNs run_elapsed_ns_ = 0;
  TimeNs time_ns_ = 0;
};

}  // namespace varichar
