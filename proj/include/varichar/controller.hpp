// SPDX-License-Identifier: Apache-2.0
//
// Master and slave controllers running the closed-loop test procedure:
//
//    1 DAC power-up over I2C         7 set MEM MAP (debug port)
//    2 PLL via scan chain            8 CORE_RESET (debug port)
//    3 BASE_RESET                    9 wait for sleep, read results
//    4 debug port power-up          10 sync with slave over I2C
//    5 DHCSR debug halt             11 (slave) measure during steps 3..9
//    6 load program into SRAM       12 record
//
// Both controllers are state machines driven by one discrete-event
// scheduler whose clock is the chip's simulation time. The I2C link between
// them is an in-order, lossless message queue.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varichar/chip.hpp"
#include "varichar/codecs.hpp"
#include "varichar/error.hpp"
#include "varichar/power.hpp"
#include "varichar/record.hpp"
#include "varichar/sensing.hpp"
#include "varichar/trace.hpp"

namespace varichar {

enum class MasterStep : std::uint8_t {
  DacInit = 1,
  PllScan = 2,
  BaseReset = 3,
  DapEnable = 4,
  DebugHalt = 5,
  LoadProgram = 6,
  MemMap = 7,
  CoreReset = 8,
  ReadResults = 9,
  SyncSlave = 10,
  Record = 12,
};

inline constexpr std::array<MasterStep, 11> kMasterSteps = {
    MasterStep::DacInit,   MasterStep::PllScan,    MasterStep::BaseReset,   MasterStep::DapEnable,
    MasterStep::DebugHalt, MasterStep::LoadProgram, MasterStep::MemMap,     MasterStep::CoreReset,
    MasterStep::ReadResults, MasterStep::SyncSlave, MasterStep::Record};

std::string_view to_string(MasterStep s) noexcept;

// --- test programs -----------------------------------------------------------

struct TestProgram {
  HexImage image;
  std::uint32_t base_addr = 0;
  TimeNs latency_ns = 0;
  std::uint32_t result_addr = 0;
  std::vector<std::uint32_t> expected_words;

  /// Reads latency, result address and output words from the descriptor at
  /// the start of the image. `expected` overrides the descriptor's words as
  /// the pass criterion.
  static TestProgram from_image(HexImage image, std::optional<std::vector<std::uint32_t>> expected = std::nullopt);

  /// Throws PreconditionViolation unless the image and result range fit SRAM.
  void validate(const ModelConfig& config) const;
};

/// Descriptor words (little endian) as they sit at the start of SRAM.
std::vector<std::uint8_t> encode_descriptor(const ProgramDescriptor& d);

/// Writes four known words 1 ms after start.
TestProgram builtin_program(const ModelConfig& config = {});

/// Image as (address, word) pairs, little endian, zero padded to whole words.
std::vector<std::pair<std::uint32_t, std::uint32_t>> program_words(const TestProgram& program);

/// Writes the image word by word over the debug port and reads every word
/// back. Requires the core not to be running. Throws VerifyMismatch.
std::size_t load_program(ChipInstance& chip, const TestProgram& program);

// --- I2C sync ------------------------------------------------------------------

enum class SyncKind : std::uint8_t { Start, Progress, Results };

std::string_view to_string(SyncKind k) noexcept;

struct SyncMessage {
  SyncKind kind = SyncKind::Start;
  TraceSource from = TraceSource::Master;
  TimeNs t_ns = 0;
  std::uint8_t step = 0;              // Progress: master step just completed (0 = slave plan done)
  std::vector<std::uint8_t> payload;  // Results: encoded MeasurementRecord

  friend bool operator==(const SyncMessage&, const SyncMessage&) = default;
};

/// Validates Start -> Progress* -> Results: one Start first, Results only
/// after Start, nothing after Results. Throws ProtocolViolation.
void validate_sync(const std::vector<SyncMessage>& messages);

/// The message sequence of a normal run: Start at `master_t_ns`, one
/// Progress heartbeat, then Results carrying `slave_record`.
std::vector<SyncMessage> sync_exchange(TimeNs master_t_ns, const MeasurementRecord& slave_record);

/// Payload of the (single) Results message.
MeasurementRecord results_of(const std::vector<SyncMessage>& messages);

// --- run configuration -------------------------------------------------------

struct BenchTiming {
  TimeNs i2c_bit_ns = 2'500;  // 400 kHz
  TimeNs scan_tck_ns = 1'000;
  TimeNs dap_txn_ns = 10'000;
  TimeNs reset_pulse_ns = 10'000;
  TimeNs reset_settle_ns = 100'000;
  TimeNs poll_period_ns = 100'000;
  TimeNs timeout_ns = 100'000'000;
  TimeNs record_ns = 10'000;
  TimeNs active_sample_delay_ns = 100'000;
  TimeNs sleep_sample_delay_ns = 1'000'000;
};

struct MeasurePlan {
  std::vector<std::uint8_t> ro_indices = {0, 1, 2, 3, 4, 5, 6, 7};
  FreqGateSpec gate;
  LeakageChainSpec leakage;
  SenseChannelSpec core = SenseChannelSpec::core();
  SenseChannelSpec sram = SenseChannelSpec::sram();
  double kappa = 1.0;
};

struct RunSettings {
  double vcore_mv = 900.0;
  double vsram_mv = 900.0;
  PllConfig pll{5, 1, ClockSelect::PLL};
  TimeNs dwell_ns = kDefaultDwellNs;
  SweepBounds bounds;
  BenchTiming timing;
  MeasurePlan plan;
  /// Fault injection: master steps to omit.
  std::vector<MasterStep> skip_steps;
};

/// The board around one chip: the chip plus the DAC that powers it.
struct Board {
  ChipInstance chip;
  DacState dac;
  std::uint8_t dac_addr7 = kDefaultDacAddr;

  explicit Board(ChipInstance c) : chip(std::move(c)) {}
};

struct RunRecord {
  double vcore_mv = 0.0;
  double vsram_mv = 0.0;
  PllConfig pll;
  MeasurementRecord measurement;
  bool result_ok = false;
  std::optional<ErrorCode> error;
  std::string error_message;
  std::map<MasterStep, TimeNs> step_times;  // completion time of each step
  std::vector<std::uint32_t> result_words;
  std::vector<SyncMessage> sync_log;
  /// Model currents of all rails at the end of the run (jumper readings).
  std::array<double, kRailCount> rail_currents_ma{};
  /// Start and end of the slave's measurement window.
  TimeNs window_start_ns = 0;
  TimeNs window_end_ns = 0;
};

/// Executes steps 1-10 and 12 on the master and step 11 on the slave.
/// Run failures (Timeout, LatchUp, OverCurrent, VerifyMismatch, ...) are
/// reported in the record, not thrown; invalid settings throw.
RunRecord master_run(Board& board, const TestProgram& program, const RunSettings& settings, Trace* trace = nullptr);

/// Drives every rail to 0 V in the reverse of the power-up order.
void power_down_board(Board& board, const RunSettings& settings, Trace* trace = nullptr);

// --- replay --------------------------------------------------------------------

struct ReplayReport {
  std::size_t events = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> details;
  /// Slave-measured fields rebuilt from the re-taken samples (the config
  /// echo fields are left at their defaults).
  MeasurementRecord measurement;
  /// Last poll round of result words read in step 9.
  std::vector<std::uint32_t> result_words;
};

/// Re-applies the master's wire events to `chip` at their recorded times and
/// re-takes every slave sample, comparing read data and raw codes.
/// `result_addr` identifies the step 9 result reads.
ReplayReport replay_trace(ChipInstance& chip, const Trace& trace, const MeasurePlan& plan,
                          std::optional<std::uint32_t> result_addr = std::nullopt);

}  // namespace varichar
