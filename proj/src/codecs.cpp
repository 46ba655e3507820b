// SPDX-License-Identifier: Apache-2.0
#include "varichar/codecs.hpp"

#include "varichar/error.hpp"

namespace varichar {

std::string_view to_string(ClockSelect s) noexcept { return s == ClockSelect::PLL ? "PLL" : "HCLK"; }

double PllConfig::internal_mhz(double hclk_mhz) const {
  if (clk_sel == ClockSelect::HCLK) return hclk_mhz;
  if (!runnable()) return 0.0;
  return kReferenceMHz * mult_m / div_n;
}

namespace {

struct FieldOffsets {
  std::size_t mult;
  std::size_t div;
  std::size_t clk_sel;
  std::size_t reserved;
};

// UCLA shifts everything after RESET down by one.
constexpr FieldOffsets offsets(ChipVariant v) {
  const std::size_t first = v == ChipVariant::Michigan ? 2 : 1;
  return {first, first + scan_layout::kFieldWidth, first + 2 * scan_layout::kFieldWidth,
          first + 2 * scan_layout::kFieldWidth + 1};
}

static_assert(offsets(ChipVariant::Michigan).reserved + scan_layout::kReservedBits == 226);
static_assert(offsets(ChipVariant::UCLA).reserved + scan_layout::kReservedBits == 225);

void put_field(ScanBits& bits, std::size_t at, std::uint8_t value) {
  for (std::size_t i = 0; i < scan_layout::kFieldWidth; ++i) bits[at + i] = (value >> i) & 1u;
}

std::uint8_t get_field(const ScanBits& bits, std::size_t at) {
  std::uint8_t v = 0;
  for (std::size_t i = 0; i < scan_layout::kFieldWidth; ++i) {
    if (bits[at + i]) v |= static_cast<std::uint8_t>(1u << i);
  }
  return v;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

ScanBits encode_scan(const ScanImage& image, ChipVariant variant) {
  if (variant == ChipVariant::UCLA && image.core_reset.has_value()) {
    throw Error(ErrorCode::CoreResetOnUcla, "UCLA scan chain has no CORE_RESET bit");
  }
  require(variant == ChipVariant::UCLA || image.core_reset.has_value(),
          "Michigan scan image must carry CORE_RESET");

  ScanBits bits(scan_length(variant), false);
  const auto off = offsets(variant);
  bits[scan_layout::kReset] = image.reset;
  if (variant == ChipVariant::Michigan) bits[scan_layout::kCoreReset] = *image.core_reset;
  put_field(bits, off.mult, image.pll.mult_m);
  put_field(bits, off.div, image.pll.div_n);
  bits[off.clk_sel] = image.pll.clk_sel == ClockSelect::PLL;
  return bits;
}

ScanImage decode_scan(const ScanBits& bits, ChipVariant variant) {
  if (bits.size() != scan_length(variant)) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(scan_length(variant)) +
                                               " scan bits, got " + std::to_string(bits.size()));
  }
  const auto off = offsets(variant);
  for (std::size_t i = off.reserved; i < bits.size(); ++i) {
    if (bits[i]) throw Error(ErrorCode::ReservedBitsSet, "reserved scan bit " + std::to_string(i) + " set");
  }
  ScanImage image;
  image.reset = bits[scan_layout::kReset];
  if (variant == ChipVariant::Michigan) image.core_reset = bits[scan_layout::kCoreReset];
  image.pll.mult_m = get_field(bits, off.mult);
  image.pll.div_n = get_field(bits, off.div);
  image.pll.clk_sel = bits[off.clk_sel] ? ClockSelect::PLL : ClockSelect::HCLK;
  return image;
}

ScanImage project_to_ucla(const ScanImage& michigan) {
  ScanImage out = michigan;
  out.core_reset.reset();
  return out;
}

std::string scan_to_hex(const ScanBits& bits) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve((bits.size() + 3) / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      nibble <<= 1;
      if (i + j < bits.size() && bits[i + j]) nibble |= 1;
    }
    out.push_back(kDigits[nibble]);
  }
  return out;
}

ScanBits scan_from_hex(std::string_view hex, std::size_t n_bits) {
  if (hex.size() != (n_bits + 3) / 4) {
    throw Error(ErrorCode::LengthMismatch, "hex string length does not match " + std::to_string(n_bits) + " bits");
  }
  ScanBits bits(n_bits, false);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const int nibble = hex_digit(hex[i]);
    if (nibble < 0) throw Error(ErrorCode::PreconditionViolation, "non-hex digit in scan string");
    for (std::size_t j = 0; j < 4; ++j) {
      const bool bit = (nibble >> (3 - j)) & 1;
      const std::size_t pos = i * 4 + j;
      if (pos < n_bits) {
        bits[pos] = bit;
      } else if (bit) {
        throw Error(ErrorCode::ReservedBitsSet, "nonzero pad bits in scan string");
      }
    }
  }
  return bits;
}

DapTransaction DapTransaction::read(std::uint32_t addr) {
  if (addr % 4 != 0) throw Error(ErrorCode::Misaligned, "DAP address not word aligned");
  return {DapOp::Read, DapPort::AccessPort, addr, 0};
}

DapTransaction DapTransaction::write(std::uint32_t addr, std::uint32_t data) {
  if (addr % 4 != 0) throw Error(ErrorCode::Misaligned, "DAP address not word aligned");
  return {DapOp::Write, DapPort::AccessPort, addr, data};
}

DapTransaction dap_enable_txn() {
  return {DapOp::Write, DapPort::DebugPort, dap::kDpCtrlStat, dap::kCsysPwrUpReq | dap::kCdbgPwrUpReq};
}

DapTransaction dhcsr_debug_enable() {
  return DapTransaction::write(dap::kDhcsrAddr, dap::kDhcsrKey | dap::kCHalt | dap::kCDebugEn);
}

DapTransaction core_reset_txn() { return DapTransaction::write(dap::kCoreResetAddr, 1); }

DapTransaction mem_map_txn() { return DapTransaction::write(dap::kMemMapAddr, 1); }

I2cFrame dac_frame(std::uint8_t channel, std::uint16_t code, std::uint8_t addr7) {
  require(channel < 8, "DAC channel out of range");
  require(code <= 4095, "DAC code out of range");
  require(addr7 < 0x80, "I2C address must be 7 bits");
  return {addr7,
          {static_cast<std::uint8_t>((kDacWriteUpdate << 4) | channel), static_cast<std::uint8_t>(code >> 4),
           static_cast<std::uint8_t>((code & 0xF) << 4)}};
}

DacCommand parse_dac_frame(const I2cFrame& frame) {
  if (frame.payload.size() != 3) {
    throw Error(ErrorCode::BadLength, "DAC frame payload must be 3 bytes");
  }
  const std::uint8_t cmd = frame.payload[0] >> 4;
  const std::uint8_t channel = frame.payload[0] & 0xF;
  if (cmd != kDacWriteUpdate || channel >= 8) {
    throw Error(ErrorCode::BadCommand, "unsupported DAC command byte " + bytes_to_hex({frame.payload[0]}));
  }
  // low nibble of the last byte is don't-care
  const auto code = static_cast<std::uint16_t>((frame.payload[1] << 4) | (frame.payload[2] >> 4));
  return {channel, code};
}

std::string bytes_to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

}  // namespace varichar
