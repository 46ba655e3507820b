// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "bench.hpp"
#include "oracles.hpp"
#include "varichar/chip.hpp"
#include "varichar/controller.hpp"

using namespace varichar;
using bench::code_of;

namespace {

constexpr std::uint32_t kSram = 0x20000000;

void write_descriptor(ChipInstance& chip, std::uint32_t latency_ns, std::uint32_t result_addr,
                      const std::vector<std::uint32_t>& words) {
  std::vector<std::uint32_t> d = {program_layout::kMagic, latency_ns, result_addr,
                                  static_cast<std::uint32_t>(words.size())};
  d.insert(d.end(), words.begin(), words.end());
  for (std::size_t i = 0; i < d.size(); ++i) {
    chip.dap_access(DapTransaction::write(kSram + static_cast<std::uint32_t>(4 * i), d[i]));
  }
}

/// Powered chip running a program that writes `words` after `latency_ns`.
void start_program(ChipInstance& chip, std::uint32_t latency_ns, const std::vector<std::uint32_t>& words) {
  bench::debug_ready(chip);
  write_descriptor(chip, latency_ns, kSram + 0x100, words);
  chip.dap_access(mem_map_txn());
  chip.dap_access(core_reset_txn());
}

}  // namespace

TEST(NewChip, ConstructorContract) {
  ChipInstance chip(ChipVariant::UCLA, 42);
  EXPECT_EQ(chip.params().ro_scale.size(), 60u);
  EXPECT_FALSE(chip.latchup());
  EXPECT_EQ(chip.core_state(), CoreState::Unpowered);
  for (Rail r : kAllRails) EXPECT_EQ(chip.rail_mv(r), 0.0);
  EXPECT_EQ(chip.sim_time_ns(), 0u);
}

TEST(NewChip, DeterministicParams) {
  EXPECT_EQ(ChipInstance(ChipVariant::UCLA, 42).params(), ChipInstance(ChipVariant::UCLA, 42).params());
  EXPECT_EQ(draw_params(42, {}), draw_params(42, {}));
  EXPECT_NE(draw_params(42, {}), draw_params(43, {}));
}

TEST(NewChip, MichiganHasNoSensors) {
  ChipInstance chip(ChipVariant::Michigan, 7);
  bench::power_on(chip);
  EXPECT_FALSE(has_sensors(chip.variant()));
  EXPECT_EQ(code_of([&] { chip.ro_frequency_mhz(0); }), ErrorCode::SensorAbsent);
  EXPECT_EQ(code_of([&] { chip.leakage_na(LeakDevice::RVTN); }), ErrorCode::SensorAbsent);
}

TEST(NewChip, InvalidDistributionRejected) {
  ModelConfig c;
  c.sigma_leak = -0.1;
  EXPECT_EQ(code_of([&] { ChipInstance(ChipVariant::UCLA, 1, c); }), ErrorCode::InvalidDistribution);
  ModelConfig d;
  d.ro_nominal_mhz.pop_back();
  EXPECT_EQ(code_of([&] { ChipInstance(ChipVariant::UCLA, 1, d); }), ErrorCode::InvalidDistribution);
}

TEST(NewChip, ParamInvariantsOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto p = draw_params(seed, {});
    ASSERT_GT(p.active_scale, 0.0);
    ASSERT_GT(p.sram_scale, 0.0);
    for (double s : p.ro_scale) ASSERT_GT(s, 0.0);
    for (double l : p.leak_base_na) ASSERT_GT(l, 0.0);
  }
}

TEST(ApplyRail, SequencedPowerUpGivesReset) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  chip.apply_rail(Rail::DVDD, 3300);
  chip.apply_rail(Rail::COREVDD, 900);
  EXPECT_FALSE(chip.latchup());
  EXPECT_EQ(chip.core_state(), CoreState::Reset);
}

TEST(ApplyRail, CoreRailBeforeDvddLatchesUp) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  chip.apply_rail(Rail::COREVDD, 900);
  EXPECT_TRUE(chip.latchup());
  chip.apply_rail(Rail::DVDD, 3300);
  EXPECT_TRUE(chip.latchup());  // persists until full power-down
}

TEST(ApplyRail, DvddDroppedUnderSramLatchesUp) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::power_on(chip);
  chip.apply_rail(Rail::DVDD, 0);
  EXPECT_TRUE(chip.latchup());
  EXPECT_EQ(chip.core_state(), CoreState::Unpowered);
}

TEST(ApplyRail, FullPowerDownClearsLatchup) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  chip.apply_rail(Rail::COREVDD, 900);
  ASSERT_TRUE(chip.latchup());
  chip.apply_rail(Rail::COREVDD, 0);
  EXPECT_EQ(chip.core_state(), CoreState::Unpowered);
  EXPECT_FALSE(chip.latchup());
  EXPECT_EQ(chip.latchup_events(), 1u);
}

TEST(ApplyRail, OutOfRangeIsPrecondition) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  EXPECT_EQ(code_of([&] { chip.apply_rail(Rail::DVDD, 3700); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([&] { chip.apply_rail(Rail::DVDD, -1); }), ErrorCode::PreconditionViolation);
}

TEST(Dap, CoreResetWithMemMapRuns) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  start_program(chip, 1'000'000, {1, 2});
  EXPECT_TRUE(chip.mem_map());
  EXPECT_EQ(chip.core_state(), CoreState::Running);
}

TEST(Dap, CoreResetWithoutMemMapStaysInReset) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::debug_ready(chip);
  write_descriptor(chip, 1000, kSram + 0x100, {5});
  chip.dap_access(core_reset_txn());
  EXPECT_EQ(chip.core_state(), CoreState::Reset);
  chip.step(10'000'000);
  EXPECT_EQ(chip.peek_word(kSram + 0x100), 0u);
}

TEST(Dap, DebugEnableHalts) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::debug_ready(chip);
  EXPECT_EQ(chip.core_state(), CoreState::Halted);
  const auto dhcsr = chip.dap_access(DapTransaction::read(dap::kDhcsrAddr));
  EXPECT_TRUE(dhcsr & dap::kSHalt);
  EXPECT_TRUE(dhcsr & dap::kCDebugEn);
}

TEST(Dap, WriteWithoutKeyIgnored) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::power_on(chip);
  chip.dap_access(dap_enable_txn());
  chip.dap_access(DapTransaction::write(dap::kDhcsrAddr, 0x3));
  EXPECT_EQ(chip.core_state(), CoreState::Reset);
}

TEST(Dap, SramReadBack) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::debug_ready(chip);
  chip.dap_access(DapTransaction::write(kSram, 0xDEADBEEF));
  EXPECT_EQ(chip.dap_access(DapTransaction::read(kSram)), 0xDEADBEEFu);
}

TEST(Dap, Errors) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  EXPECT_EQ(code_of([&] { chip.dap_access(DapTransaction::read(kSram)); }), ErrorCode::AccessWhileUnpowered);
  EXPECT_EQ(code_of([&] { chip.dap_access(dhcsr_debug_enable()); }), ErrorCode::AccessWhileUnpowered);
  bench::power_on(chip);
  EXPECT_EQ(code_of([&] { chip.dap_access(DapTransaction::read(kSram)); }), ErrorCode::DapDisabled);
  chip.dap_access(dap_enable_txn());
  EXPECT_EQ(code_of([&] { chip.dap_access(DapTransaction::read(0x10000000)); }), ErrorCode::UnmappedAddress);
  EXPECT_EQ(code_of([&] { chip.dap_access(DapTransaction::read(kSram + 64 * 1024)); }), ErrorCode::UnmappedAddress);
  DapTransaction odd{DapOp::Read, DapPort::AccessPort, kSram + 2, 0};
  EXPECT_EQ(code_of([&] { chip.dap_access(odd); }), ErrorCode::Misaligned);
  chip.apply_rail(Rail::COREVDD, 0);
  chip.apply_rail(Rail::SRAMVDD, 0);
  EXPECT_EQ(code_of([&] { chip.dap_access(DapTransaction::read(kSram)); }), ErrorCode::AccessWhileUnpowered);
}

TEST(Dap, DapStatusReportsAcks) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::power_on(chip);
  const DapTransaction rd{DapOp::Read, DapPort::DebugPort, dap::kDpCtrlStat, 0};
  EXPECT_EQ(chip.dap_access(rd), 0u);
  chip.dap_access(dap_enable_txn());
  EXPECT_EQ(chip.dap_access(rd), 0xF0000000u);
}

TEST(Dap, MemMapIsIdempotent) {
  ChipInstance a(ChipVariant::UCLA, 3);
  bench::debug_ready(a);
  ChipInstance b = a;
  a.dap_access(mem_map_txn());
  b.dap_access(mem_map_txn());
  b.dap_access(mem_map_txn());
  EXPECT_TRUE(a.mem_map());
  EXPECT_EQ(a, b);
}

TEST(Dap, DebugEnableOnUnpoweredChip) {
  ChipInstance chip(ChipVariant::Michigan, 3);
  EXPECT_EQ(code_of([&] { chip.dap_access(dhcsr_debug_enable()); }), ErrorCode::AccessWhileUnpowered);
}

TEST(Scan, MichiganAcceptsAndReturnsPrevious) {
  ChipInstance chip(ChipVariant::Michigan, 1);
  bench::power_on(chip);
  const ScanImage img{false, false, {5, 1, ClockSelect::PLL}};
  const auto bits = encode_scan(img, ChipVariant::Michigan);
  EXPECT_EQ(chip.shift_scan(bits), ScanBits(226, false));
  EXPECT_EQ(chip.shift_scan(ScanBits(226, false)), bits);
  EXPECT_EQ(chip.pll(), PllConfig{});
}

TEST(Scan, UclaRejects226Bits) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::power_on(chip);
  EXPECT_EQ(code_of([&] { chip.shift_scan(ScanBits(226, false)); }), ErrorCode::LengthMismatch);
}

TEST(Scan, ZeroVectorZeroesPllWithoutReset) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::debug_ready(chip);
  chip.shift_scan(encode_scan({false, std::nullopt, {5, 1, ClockSelect::PLL}}, ChipVariant::UCLA));
  EXPECT_DOUBLE_EQ(chip.clock_mhz(), 100.0);
  chip.shift_scan(ScanBits(225, false));
  EXPECT_EQ(chip.pll(), PllConfig{});
  EXPECT_EQ(chip.core_state(), CoreState::Halted);
}

TEST(Scan, ResetBits) {
  ChipInstance m(ChipVariant::Michigan, 1);
  bench::debug_ready(m);
  m.shift_scan(encode_scan({false, true, {}}, ChipVariant::Michigan));
  EXPECT_EQ(m.core_state(), CoreState::Reset);
  EXPECT_TRUE(m.dap_enabled());  // core reset leaves the debug port alone

  ChipInstance u(ChipVariant::UCLA, 1);
  bench::debug_ready(u);
  u.shift_scan(encode_scan({true, std::nullopt, {}}, ChipVariant::UCLA));
  EXPECT_EQ(u.core_state(), CoreState::Reset);
}

TEST(PowerGating, NoMutationOnError) {
  for (auto v : {ChipVariant::Michigan, ChipVariant::UCLA}) {
    ChipInstance chip(v, 5);
    const ChipInstance before = chip;
    EXPECT_EQ(code_of([&] { chip.shift_scan(ScanBits(scan_length(v), false)); }), ErrorCode::AccessWhileUnpowered);
    EXPECT_EQ(code_of([&] { chip.dap_access(dap_enable_txn()); }), ErrorCode::AccessWhileUnpowered);
    EXPECT_EQ(code_of([&] { chip.dap_access(DapTransaction::write(kSram, 1)); }), ErrorCode::AccessWhileUnpowered);
    EXPECT_EQ(chip, before);
  }
}

TEST(Step, ProgramCompletesAfterLatency) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  start_program(chip, 1'000'000, {0xA, 0xB});
  chip.step(999'999);
  EXPECT_EQ(chip.core_state(), CoreState::Running);
  chip.step(1'000'001);
  EXPECT_EQ(chip.core_state(), CoreState::Sleep);
  EXPECT_EQ(chip.peek_word(kSram + 0x100), 0xAu);
  EXPECT_EQ(chip.peek_word(kSram + 0x104), 0xBu);
  EXPECT_TRUE(chip.dhcsr() & dap::kSSleep);
}

TEST(Step, HaltedCoreIsInert) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::debug_ready(chip);
  write_descriptor(chip, 1000, kSram + 0x100, {7});
  const ChipInstance before = chip;
  chip.step(1'000'000);
  EXPECT_EQ(chip.sim_time_ns(), before.sim_time_ns() + 1'000'000);
  for (std::uint32_t a = kSram; a < kSram + 0x200; a += 4) ASSERT_EQ(chip.peek_word(a), before.peek_word(a));
}

TEST(Step, LatchupPreventsResults) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  chip.apply_rail(Rail::SRAMVDD, 900);  // before DVDD
  ASSERT_TRUE(chip.latchup());
  start_program(chip, 1000, {9});
  ASSERT_TRUE(chip.latchup());
  chip.step(10'000'000);
  EXPECT_EQ(chip.peek_word(kSram + 0x100), 0u);
  EXPECT_NE(chip.core_state(), CoreState::Sleep);
}

TEST(Step, GarbageInSramRunsForever) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::debug_ready(chip);
  chip.dap_access(mem_map_txn());
  chip.dap_access(core_reset_txn());
  EXPECT_EQ(chip.core_state(), CoreState::Running);
  EXPECT_FALSE(chip.active_program());
  chip.step(1'000'000'000);
  EXPECT_EQ(chip.core_state(), CoreState::Running);
}

TEST(CurrentDraw, Examples) {
  ChipInstance chip(ChipVariant::UCLA, 1, bench::nominal_config());
  EXPECT_EQ(chip.params().active_scale, 1.0);
  EXPECT_EQ(chip.current_draw_ma(Rail::COREVDD), 0.0);  // unpowered
  start_program(chip, 1'000'000, {1});
  EXPECT_DOUBLE_EQ(chip.current_draw_ma(Rail::COREVDD), 15.0);
  chip.step(2'000'000);
  ASSERT_EQ(chip.core_state(), CoreState::Sleep);
  EXPECT_DOUBLE_EQ(chip.current_draw_ma(Rail::COREVDD), 1.0);
  EXPECT_DOUBLE_EQ(chip.current_draw_ma(Rail::SRAMVDD), 1.0);
}

TEST(CurrentDraw, ActiveScalesWithVoltageSquared) {
  ChipInstance chip(ChipVariant::UCLA, 1, bench::nominal_config());
  start_program(chip, 1'000'000, {1});
  chip.apply_rail(Rail::COREVDD, 600);
  EXPECT_NEAR(chip.current_draw_ma(Rail::COREVDD), 15.0 * (0.6 / 0.9) * (0.6 / 0.9), 1e-12);
}

TEST(RoFrequency, NominalPoint) {
  ChipInstance chip(ChipVariant::UCLA, 1, bench::nominal_config());
  bench::power_on(chip);
  EXPECT_DOUBLE_EQ(chip.ro_frequency_mhz(0), 50.0);
  EXPECT_EQ(code_of([&] { chip.ro_frequency_mhz(60); }), ErrorCode::PreconditionViolation);
}

TEST(RoFrequency, TemperatureLaw) {
  ModelConfig c = bench::nominal_config();
  c.temp_c = 75.0;
  ChipInstance chip(ChipVariant::UCLA, 1, c);
  bench::power_on(chip);
  EXPECT_NEAR(chip.ro_frequency_mhz(0), 50.0 * (1.0 - 0.002 * 50.0), 1e-12);
  EXPECT_NEAR(chip.leakage_na(LeakDevice::RVTN), 50.0 * std::exp(0.08 * 50.0), 1e-9);
}

TEST(RoFrequency, SensorsNeedSenseRail) {
  ChipInstance chip(ChipVariant::UCLA, 1);
  bench::power_on(chip);
  chip.apply_rail(Rail::SENSEVDD, 0);
  EXPECT_EQ(code_of([&] { chip.ro_frequency_mhz(0); }), ErrorCode::SensorUnpowered);
  EXPECT_EQ(code_of([&] { chip.leakage_na(LeakDevice::HVTP); }), ErrorCode::SensorUnpowered);
}

TEST(RoFrequency, MonotoneInCoreVoltage) {
  std::mt19937_64 rng(31);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ChipInstance chip(ChipVariant::UCLA, seed);
    bench::power_on(chip, 550);
    const std::size_t idx = rng() % 60;
    double prev = chip.ro_frequency_mhz(idx);
    for (double v = 560; v <= 1100; v += 10) {
      chip.apply_rail(Rail::COREVDD, v);
      const double f = chip.ro_frequency_mhz(idx);
      ASSERT_GE(f, prev);
      prev = f;
    }
  }
}

TEST(Leakage, NominalPoint) {
  ChipInstance chip(ChipVariant::UCLA, 1, bench::nominal_config());
  bench::power_on(chip);
  EXPECT_DOUBLE_EQ(chip.leakage_na(LeakDevice::RVTN), 50.0);
  EXPECT_DOUBLE_EQ(chip.leakage_na(LeakDevice::RVTP), 40.0);
}

TEST(Leakage, HighVthBelowRegularVth) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    ChipInstance chip(ChipVariant::UCLA, seed);
    bench::power_on(chip);
    ASSERT_LT(chip.leakage_na(LeakDevice::HVTN), chip.leakage_na(LeakDevice::RVTN));
    ASSERT_LT(chip.leakage_na(LeakDevice::HVTP), chip.leakage_na(LeakDevice::RVTP));
  }
}

TEST(Properties, LatchupSafetyForWellOrderedSequences) {
  std::mt19937_64 rng(41);
  const std::vector<Rail> others = {Rail::DVDD2, Rail::AVDD, Rail::AVDD2, Rail::COREVDD,
                                    Rail::SRAMVDD, Rail::WRAPPERVDD, Rail::SENSEVDD};
  for (int i = 0; i < 1000; ++i) {
    ChipInstance chip(ChipVariant::UCLA, rng());
    auto order = others;
    std::shuffle(order.begin(), order.end(), rng);
    chip.apply_rail(Rail::DVDD, 3300);
    for (Rail r : order) {
      chip.apply_rail(r, 500 + static_cast<double>(rng() % 600));
      chip.step(rng() % 1000);
    }
    // random toggling of core rails while DVDD is up
    for (int k = 0; k < 5; ++k) {
      chip.apply_rail((rng() & 1) ? Rail::COREVDD : Rail::SRAMVDD, static_cast<double>(rng() % 1100));
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (Rail r : order) chip.apply_rail(r, 0);
    chip.apply_rail(Rail::DVDD, 0);
    ASSERT_EQ(chip.latchup_events(), 0u);
    ASSERT_EQ(chip.core_state(), CoreState::Unpowered);
  }
}

TEST(Properties, SramReadAfterWrite) {
  std::mt19937_64 rng(51);
  ChipInstance chip(ChipVariant::UCLA, 9);
  bench::debug_ready(chip);
  std::map<std::uint32_t, std::uint32_t> shadow;
  for (int i = 0; i < 20000; ++i) {
    const std::uint32_t addr = kSram + 4 * static_cast<std::uint32_t>(rng() % (64 * 1024 / 4));
    if (rng() % 3 != 0) {
      const auto w = static_cast<std::uint32_t>(rng());
      chip.dap_access(DapTransaction::write(addr, w));
      shadow[addr] = w;
    } else {
      const auto it = shadow.find(addr);
      ASSERT_EQ(chip.dap_access(DapTransaction::read(addr)), it == shadow.end() ? 0u : it->second);
    }
  }
}

TEST(Properties, DeterministicStateForSameOperations) {
  auto run = [] {
    ChipInstance chip(ChipVariant::Michigan, 77);
    start_program(chip, 250'000, {1, 2, 3});
    chip.step(100'000);
    chip.shift_scan(encode_scan({false, false, {7, 3, ClockSelect::PLL}}, ChipVariant::Michigan));
    chip.step(500'000);
    return chip;
  };
  EXPECT_EQ(run(), run());
}

TEST(Properties, PopulationLeakageVariesMoreThanActiveCurrent) {
  std::vector<double> leak;
  std::vector<double> active;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ChipInstance chip(ChipVariant::UCLA, seed);
    start_program(chip, 1'000'000, {1});
    active.push_back(chip.current_draw_ma(Rail::COREVDD));
    leak.push_back(chip.leakage_na(LeakDevice::RVTN));
  }
  const double cov_leak = oracle::sample_stddev(leak) / oracle::mean(leak);
  const double cov_active = oracle::sample_stddev(active) / oracle::mean(active);
  EXPECT_GT(cov_leak, cov_active);
}
