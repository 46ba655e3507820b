// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "varichar/codecs.hpp"
#include "varichar/types.hpp"

namespace varichar {

struct SaturationFlags {
  bool i_core_active = false;
  bool i_core_sleep = false;
  bool i_sram = false;
  std::array<bool, 4> leak{};
  bool frequency = false;

  bool any() const noexcept;
  friend bool operator==(const SaturationFlags&, const SaturationFlags&) = default;
};

/// One characterization point. Optional fields are null when the quantity
/// was not measured (sensors absent, failed run).
struct MeasurementRecord {
  std::uint32_t chip_id = 0;
  ChipVariant variant = ChipVariant::UCLA;
  double vcore_mv = 0.0;
  double vsram_mv = 0.0;
  PllConfig pll;
  double f_clk_mhz = 0.0;

  std::optional<double> i_core_active_ma;
  std::optional<double> i_core_sleep_ma;
  std::optional<double> i_sram_ma;
  std::array<std::optional<double>, 4> leak_na;  // indexed by LeakDevice
  std::optional<double> fmax_est_mhz;

  std::vector<std::uint8_t> ro_indices;
  std::vector<std::uint16_t> ro_counts;
  std::vector<double> ro_mhz;

  SaturationFlags saturation;
  bool sensors_absent = false;
  bool sensor_error = false;
  bool result_ok = false;
  std::uint64_t seed = 0;

  /// When each slave sample was taken.
  std::vector<TimeNs> sample_times;

  std::optional<double> leak(LeakDevice d) const { return leak_na[index(d)]; }

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// `v` rounded to 6 significant digits, the resolution the slave reports
/// and the CSV stores, so a CSV round trip is exact.
double round_sig6(double v);

/// Little-endian wire form carried by the slave's Results message.
std::vector<std::uint8_t> encode_record(const MeasurementRecord& rec);
MeasurementRecord decode_record(const std::vector<std::uint8_t>& bytes);

}  // namespace varichar
