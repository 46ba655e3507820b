// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "hex_emitter.hpp"
#include "varichar/codecs.hpp"
#include "varichar/error.hpp"

using namespace varichar;

namespace {

const std::filesystem::path kCorpus = std::filesystem::path(VARICHAR_TEST_DATA_DIR) / "hex";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> from_hex(const std::string& s) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoul(s.substr(i, 2), nullptr, 16)));
  return out;
}

}  // namespace

TEST(Hex, EofOnlyIsEmpty) { EXPECT_TRUE(parse_hex_image(":00000001FF").empty()); }

TEST(Hex, SingleDataRecord) {
  const auto img = parse_hex_image(":0400100001020304E2\n:00000001FF\n");
  EXPECT_EQ(img.base_addr(), 0x10u);
  EXPECT_EQ(img.contiguous(), (std::vector<std::uint8_t>{1, 2, 3, 4}));
}

TEST(Hex, PerturbedChecksum) {
  try {
    parse_hex_image(":0400100001020304E3\n:00000001FF\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadChecksum);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Hex, EmitterRoundTrip) {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 300; ++iter) {
    std::map<std::uint32_t, std::uint8_t> bytes;
    const int runs = 1 + static_cast<int>(rng() % 4);
    std::uint32_t addr = static_cast<std::uint32_t>(rng() % 0x30000);
    for (int r = 0; r < runs; ++r) {
      const int len = 1 + static_cast<int>(rng() % 70);
      for (int i = 0; i < len; ++i) bytes[addr++] = static_cast<std::uint8_t>(rng());
      addr += static_cast<std::uint32_t>(rng() % 40);
    }
    const std::string text = testhex::emit(bytes);
    ASSERT_EQ(parse_hex_image(text), HexImage(bytes)) << text;
  }
}

TEST(Hex, AcceptedRecordsSumToZero) {
  for (const auto& entry : std::filesystem::directory_iterator(kCorpus)) {
    if (entry.path().extension() != ".hex") continue;
    const std::string text = slurp(entry.path());
    bool parses = true;
    try {
      parse_hex_image(text);
    } catch (const Error&) {
      parses = false;
    }
    if (!parses) continue;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty()) continue;
      unsigned sum = 0;
      for (auto b : from_hex(line.substr(1))) sum += b;
      EXPECT_EQ(sum % 256, 0u) << entry.path() << ": " << line;
    }
  }
}

TEST(Hex, Corpus) {
  const auto expectations = nlohmann::json::parse(slurp(kCorpus / "expectations.json"));
  ASSERT_GE(expectations.size(), 20u);
  std::size_t bad_checksum_cases = 0;
  for (const auto& e : expectations) {
    const std::string file = e.at("file");
    const std::string expect = e.at("expect");
    SCOPED_TRACE(file);
    const std::string text = slurp(kCorpus / file);
    if (expect == "ok") {
      std::map<std::uint32_t, std::uint8_t> want;
      for (const auto& seg : e.at("segments")) {
        std::uint32_t a = seg.at("base");
        for (auto b : from_hex(seg.at("hex"))) want[a++] = b;
      }
      EXPECT_EQ(parse_hex_image(text), HexImage(want));
      continue;
    }
    if (expect == "BadChecksum") ++bad_checksum_cases;
    try {
      parse_hex_image(text);
      ADD_FAILURE() << "accepted";
    } catch (const Error& err) {
      EXPECT_EQ(std::string(to_string(err.code())), expect);
      if (e.contains("line")) EXPECT_EQ(err.line(), e.at("line").get<std::size_t>());
    }
  }
  EXPECT_GE(bad_checksum_cases, 2u);
}
