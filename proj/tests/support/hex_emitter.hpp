// SPDX-License-Identifier: Apache-2.0
//
// Minimal Intel-HEX writer, used only by the tests to round-trip images.
#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace testhex {

inline std::string record(std::uint8_t type, std::uint16_t addr, const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> bytes = {static_cast<std::uint8_t>(data.size()), static_cast<std::uint8_t>(addr >> 8),
                                     static_cast<std::uint8_t>(addr & 0xFF), type};
  bytes.insert(bytes.end(), data.begin(), data.end());
  std::string line = ":";
  char buf[3];
  for (auto b : bytes) {
    std::snprintf(buf, sizeof buf, "%02X", b);
    line += buf;
  }
  std::snprintf(buf, sizeof buf, "%02X", oracle::hex_checksum(bytes));
  line += buf;
  return line + "\n";
}

/// Emits runs of consecutive bytes as data records of up to 16 bytes, with
/// an extended linear address record whenever the upper 16 bits change.
inline std::string emit(const std::map<std::uint32_t, std::uint8_t>& bytes) {
  std::string out;
  std::optional<std::uint16_t> upper;
  auto it = bytes.begin();
  while (it != bytes.end()) {
    const std::uint32_t start = it->first;
    std::vector<std::uint8_t> data;
    std::uint32_t next = start;
    while (it != bytes.end() && it->first == next && data.size() < 16 && (next >> 16) == (start >> 16)) {
      data.push_back(it->second);
      ++next;
      ++it;
    }
    const auto hi = static_cast<std::uint16_t>(start >> 16);
    if (upper != hi) {
      out += record(0x04, 0, {static_cast<std::uint8_t>(hi >> 8), static_cast<std::uint8_t>(hi & 0xFF)});
      upper = hi;
    }
    out += record(0x00, static_cast<std::uint16_t>(start & 0xFFFF), data);
  }
  out += ":00000001FF\n";
  return out;
}

}  // namespace testhex
