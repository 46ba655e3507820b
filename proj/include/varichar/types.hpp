// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace varichar {

/// Simulation time in nanoseconds.
using TimeNs = std::uint64_t;

enum class ChipVariant : std::uint8_t { Michigan, UCLA };

constexpr std::size_t scan_length(ChipVariant v) noexcept {
  return v == ChipVariant::Michigan ? 226 : 225;
}

/// Frequency and leakage sensors exist only on the UCLA variant.
constexpr bool has_sensors(ChipVariant v) noexcept { return v == ChipVariant::UCLA; }

std::string_view to_string(ChipVariant v) noexcept;
std::optional<ChipVariant> parse_variant(std::string_view s) noexcept;

/// The eight supply rails, in DAC channel order (channel = enum value).
enum class Rail : std::uint8_t {
  DVDD,
  DVDD2,
  AVDD,
  AVDD2,
  COREVDD,
  SRAMVDD,
  WRAPPERVDD,
  SENSEVDD,
};

inline constexpr std::size_t kRailCount = 8;

inline constexpr std::array<Rail, kRailCount> kAllRails = {
    Rail::DVDD,    Rail::DVDD2,   Rail::AVDD,       Rail::AVDD2,
    Rail::COREVDD, Rail::SRAMVDD, Rail::WRAPPERVDD, Rail::SENSEVDD,
};

constexpr std::size_t index(Rail r) noexcept { return static_cast<std::size_t>(r); }

std::string_view to_string(Rail r) noexcept;
std::optional<Rail> parse_rail(std::string_view s) noexcept;

/// Leakage test devices: regular/high threshold, P/N type.
enum class LeakDevice : std::uint8_t { RVTP, RVTN, HVTP, HVTN };

inline constexpr std::array<LeakDevice, 4> kAllLeakDevices = {
    LeakDevice::RVTP, LeakDevice::RVTN, LeakDevice::HVTP, LeakDevice::HVTN};

constexpr std::size_t index(LeakDevice d) noexcept { return static_cast<std::size_t>(d); }

std::string_view to_string(LeakDevice d) noexcept;

inline constexpr std::size_t kRingOscillatorCount = 60;

}  // namespace varichar
