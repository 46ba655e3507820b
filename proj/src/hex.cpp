// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "varichar/codecs.hpp"
#include "varichar/error.hpp"

namespace varichar {

HexImage HexImage::from_bytes(std::uint32_t base, const std::vector<std::uint8_t>& data) {
  std::map<std::uint32_t, std::uint8_t> bytes;
  for (std::size_t i = 0; i < data.size(); ++i) bytes.emplace(base + static_cast<std::uint32_t>(i), data[i]);
  return HexImage(std::move(bytes));
}

std::size_t HexImage::span() const noexcept {
  if (bytes_.empty()) return 0;
  return static_cast<std::size_t>(bytes_.rbegin()->first - bytes_.begin()->first) + 1;
}

std::vector<std::uint8_t> HexImage::contiguous() const {
  std::vector<std::uint8_t> out(span(), 0);
  const std::uint32_t base = base_addr();
  for (const auto& [addr, b] : bytes_) out[addr - base] = b;
  return out;
}

namespace {

enum RecordType : std::uint8_t { kData = 0x00, kEof = 0x01, kExtLinear = 0x04 };

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::uint8_t> decode_record(std::string_view line, std::size_t line_no) {
  auto malformed = [&](const std::string& why) {
    return Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + why, line_no);
  };
  if (line.front() != ':') throw malformed("record does not start with ':'");
  const std::string_view digits = line.substr(1);
  if (digits.size() < 10 || digits.size() % 2 != 0) throw malformed("bad record length");

  std::vector<std::uint8_t> raw;
  raw.reserve(digits.size() / 2);
  for (std::size_t i = 0; i < digits.size(); i += 2) {
    const int hi = nibble(digits[i]);
    const int lo = nibble(digits[i + 1]);
    if (hi < 0 || lo < 0) throw malformed("non-hex character");
    raw.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  if (raw.size() != static_cast<std::size_t>(raw[0]) + 5) throw malformed("byte count does not match record");

  unsigned sum = 0;
  for (auto b : raw) sum += b;
  if ((sum & 0xFF) != 0) {
    throw Error(ErrorCode::BadChecksum, "line " + std::to_string(line_no) + ": checksum mismatch", line_no);
  }
  return raw;
}

}  // namespace

HexImage parse_hex_image(std::string_view text) {
  std::map<std::uint32_t, std::uint8_t> bytes;
  std::uint32_t upper = 0;
  bool seen_eof = false;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (seen_eof) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": data after EOF record", line_no);
    }

    const auto raw = decode_record(line, line_no);
    const std::uint8_t len = raw[0];
    const auto offset = static_cast<std::uint16_t>(raw[1] << 8 | raw[2]);
    const std::uint8_t type = raw[3];
    auto malformed = [&](const std::string& why) {
      return Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + why, line_no);
    };

    switch (type) {
      case kData:
        for (std::size_t i = 0; i < len; ++i) {
          const std::uint32_t addr = upper + offset + static_cast<std::uint32_t>(i);
          if (!bytes.emplace(addr, raw[4 + i]).second) {
            throw Error(ErrorCode::OverlappingData,
                        "line " + std::to_string(line_no) + ": byte at " + std::to_string(addr) + " already defined",
                        line_no);
          }
        }
        break;
      case kEof:
        if (len != 0) throw malformed("EOF record carries data");
        seen_eof = true;
        break;
      case kExtLinear:
        if (len != 2 || offset != 0) throw malformed("extended linear address record must be 2 bytes at offset 0");
        upper = static_cast<std::uint32_t>(raw[4] << 8 | raw[5]) << 16;
        break;
      default:
        throw malformed("unsupported record type " + std::to_string(type));
    }
  }
  if (!seen_eof) throw Error(ErrorCode::MissingEof, "no EOF record");
  return HexImage(std::move(bytes));
}

}  // namespace varichar
