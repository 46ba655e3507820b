// SPDX-License-Identifier: Apache-2.0
//
// Wire payloads the controller emits: scan-chain images, debug-port
// transactions, DAC I2C frames and Intel-HEX program images. Everything here
// is a pure function of its inputs.
//
// Scan-chain layout (bit index = shift order):
//   Michigan: 0 RESET, 1 CORE_RESET, 2..9 PLL M (LSB first), 10..17 PLL N,
//             18 CLK_SEL (1 = PLL), 19..225 reserved (zero)
//   UCLA:     same with the CORE_RESET bit removed (225 bits)
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varichar/types.hpp"

namespace varichar {

enum class ClockSelect : std::uint8_t { HCLK = 0, PLL = 1 };

std::string_view to_string(ClockSelect s) noexcept;

/// On-chip PLL control word. The multiplier and divider are raw 8-bit scan
/// fields; a configuration is runnable only when both are in 1..255.
struct PllConfig {
  std::uint8_t mult_m = 0;
  std::uint8_t div_n = 0;
  ClockSelect clk_sel = ClockSelect::HCLK;

  static constexpr double kReferenceMHz = 20.0;

  bool runnable() const noexcept { return mult_m >= 1 && div_n >= 1; }

  /// Internal clock: 20 MHz * M / N from the PLL, or the external HCLK.
  double internal_mhz(double hclk_mhz) const;

  friend bool operator==(const PllConfig&, const PllConfig&) = default;
};

using ScanBits = std::vector<bool>;

struct ScanImage {
  bool reset = false;
  std::optional<bool> core_reset;  // Michigan only
  PllConfig pll;

  friend bool operator==(const ScanImage&, const ScanImage&) = default;
};

namespace scan_layout {
inline constexpr std::size_t kReset = 0;
inline constexpr std::size_t kCoreReset = 1;  // Michigan only
inline constexpr std::size_t kFieldWidth = 8;
inline constexpr std::size_t kReservedBits = 207;
}  // namespace scan_layout

ScanBits encode_scan(const ScanImage& image, ChipVariant variant);
ScanImage decode_scan(const ScanBits& bits, ChipVariant variant);

/// Drops the CORE_RESET bit of a Michigan image, yielding the UCLA image.
ScanImage project_to_ucla(const ScanImage& michigan);

/// Hex rendering of a bit vector for logs: bit 0 is the MSB of the first
/// nibble, the tail is zero-padded to a whole nibble.
std::string scan_to_hex(const ScanBits& bits);
ScanBits scan_from_hex(std::string_view hex, std::size_t n_bits);

// --- debug access port -----------------------------------------------------

enum class DapOp : std::uint8_t { Read, Write };

/// DP accesses hit debug-port registers (CTRL/STAT); AP accesses go through
/// the memory access port onto the chip's bus.
enum class DapPort : std::uint8_t { AccessPort, DebugPort };

struct DapTransaction {
  DapOp op = DapOp::Read;
  DapPort port = DapPort::AccessPort;
  std::uint32_t addr = 0;
  std::uint32_t data = 0;

  /// Throws Misaligned for addresses that are not word aligned.
  static DapTransaction read(std::uint32_t addr);
  static DapTransaction write(std::uint32_t addr, std::uint32_t data);

  friend bool operator==(const DapTransaction&, const DapTransaction&) = default;
};

namespace dap {
inline constexpr std::uint32_t kDpCtrlStat = 0x4;
inline constexpr std::uint32_t kCsysPwrUpReq = 1u << 30;
inline constexpr std::uint32_t kCdbgPwrUpReq = 1u << 28;
inline constexpr std::uint32_t kCsysPwrUpAck = 1u << 31;
inline constexpr std::uint32_t kCdbgPwrUpAck = 1u << 29;

inline constexpr std::uint32_t kDhcsrAddr = 0xE000EDF0;
inline constexpr std::uint32_t kDhcsrKey = 0xA05F0000;
inline constexpr std::uint32_t kCDebugEn = 1u << 0;
inline constexpr std::uint32_t kCHalt = 1u << 1;
inline constexpr std::uint32_t kSHalt = 1u << 17;
inline constexpr std::uint32_t kSSleep = 1u << 18;

inline constexpr std::uint32_t kCoreResetAddr = 0x44000004;
inline constexpr std::uint32_t kMemMapAddr = 0x44000008;
}  // namespace dap

/// Debug-port power-up request (CSYSPWRUPREQ | CDBGPWRUPREQ to DP CTRL/STAT).
DapTransaction dap_enable_txn();
/// DHCSR write with key 0xA05F, C_HALT and C_DEBUGEN.
DapTransaction dhcsr_debug_enable();
DapTransaction core_reset_txn();
DapTransaction mem_map_txn();

// --- DAC frames --------------------------------------------------------------

struct I2cFrame {
  std::uint8_t addr7 = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const I2cFrame&, const I2cFrame&) = default;
};

inline constexpr std::uint8_t kDefaultDacAddr = 0x48;
inline constexpr std::uint8_t kDacWriteUpdate = 0x3;

struct DacCommand {
  std::uint8_t channel = 0;
  std::uint16_t code = 0;

  friend bool operator==(const DacCommand&, const DacCommand&) = default;
};

/// Write-and-update frame: [0x30 | ch, code >> 4, (code & 0xF) << 4].
I2cFrame dac_frame(std::uint8_t channel, std::uint16_t code, std::uint8_t addr7 = kDefaultDacAddr);
DacCommand parse_dac_frame(const I2cFrame& frame);

std::string bytes_to_hex(const std::vector<std::uint8_t>& bytes);

// --- Intel HEX ---------------------------------------------------------------

/// Program image parsed from Intel-HEX text. Bytes are kept sparse; the
/// contiguous view zero-fills any gaps between records.
class HexImage {
 public:
  HexImage() = default;
  explicit HexImage(std::map<std::uint32_t, std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  /// Builds an image of `data` laid out from `base`.
  static HexImage from_bytes(std::uint32_t base, const std::vector<std::uint8_t>& data);

  bool empty() const noexcept { return bytes_.empty(); }
  std::uint32_t base_addr() const noexcept { return bytes_.empty() ? 0 : bytes_.begin()->first; }
  /// Byte span from base_addr to the last byte, inclusive.
  std::size_t span() const noexcept;
  std::size_t byte_count() const noexcept { return bytes_.size(); }
  std::vector<std::uint8_t> contiguous() const;
  const std::map<std::uint32_t, std::uint8_t>& bytes() const noexcept { return bytes_; }

  friend bool operator==(const HexImage&, const HexImage&) = default;

 private:
  std::map<std::uint32_t, std::uint8_t> bytes_;
};

/// Accepts record types 00, 01 and 04. Errors carry the 1-based line number.
HexImage parse_hex_image(std::string_view text);

}  // namespace varichar
