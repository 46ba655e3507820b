// SPDX-License-Identifier: Apache-2.0
#include "varichar/chip.hpp"

#include <algorithm>
#include <cmath>

#include "varichar/error.hpp"
#include "varichar/rng.hpp"

namespace varichar {

std::vector<double> ModelConfig::default_ro_nominal() {
  // oscillators of different stage counts: 50 MHz down to ~35 MHz
  std::vector<double> f(kRingOscillatorCount);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 50.0 * (1.0 - 0.005 * static_cast<double>(i));
  return f;
}

void ModelConfig::validate() const {
  auto bad = [](const char* what) { return Error(ErrorCode::InvalidDistribution, what); };
  if (!(sigma_leak >= 0.0) || !(sigma_active >= 0.0) || !(sigma_ro >= 0.0) || !(sigma_sram >= 0.0)) {
    throw bad("sigma must be >= 0");
  }
  for (double m : leak_median_na) {
    if (!(m > 0.0)) throw bad("leakage medians must be > 0");
  }
  if (!(v_nominal_mv > 0.0)) throw bad("v_nominal_mv must be > 0");
  if (!(alpha >= 0.0)) throw bad("alpha must be >= 0");
  if (ro_nominal_mhz.size() != kRingOscillatorCount) throw bad("need exactly 60 ring oscillator frequencies");
  for (double f : ro_nominal_mhz) {
    if (!(f > 0.0)) throw bad("ring oscillator frequencies must be > 0");
  }
  if (!(i_core_active_ma >= 0.0) || !(i_core_sleep_ma >= 0.0) || !(i_sram_ma >= 0.0)) {
    throw bad("nominal currents must be >= 0");
  }
  if (sram_bytes == 0 || sram_bytes % 4 != 0 || sram_base % 4 != 0) throw bad("SRAM must be whole words");
  if (static_cast<std::uint64_t>(sram_base) + sram_bytes > 0x100000000ull) throw bad("SRAM exceeds address space");
}

VariabilityParams draw_params(std::uint64_t seed, const ModelConfig& config) {
  config.validate();
  Rng rng(seed);
  VariabilityParams p;
  p.seed = seed;
  p.temp_c = config.temp_c;
  p.active_scale = rng.positive_normal(1.0, config.sigma_active);
  p.sram_scale = rng.positive_normal(1.0, config.sigma_sram);
  for (auto& s : p.ro_scale) s = rng.positive_normal(1.0, config.sigma_ro);
  // One die-level factor shared by all four devices: a leaky die is leaky
  // across device types, which keeps the high-Vth < regular-Vth ordering.
  const double die = std::exp(config.sigma_leak * rng.normal());
  for (std::size_t d = 0; d < p.leak_base_na.size(); ++d) p.leak_base_na[d] = config.leak_median_na[d] * die;
  return p;
}

std::string_view to_string(CoreState s) noexcept {
  switch (s) {
    case CoreState::Unpowered: return "Unpowered";
    case CoreState::Reset: return "Reset";
    case CoreState::Halted: return "Halted";
    case CoreState::Running: return "Running";
    case CoreState::Sleep: return "Sleep";
  }
  return "?";
}

ChipInstance::ChipInstance(ChipVariant variant, std::uint64_t seed, const ModelConfig& config)
    : variant_(variant),
      config_(config),
      params_(draw_params(seed, config)),
      chain_(scan_length(variant), false),
      sram_(config.sram_bytes / 4, 0) {}

std::uint32_t ChipInstance::dhcsr() const noexcept {
  std::uint32_t v = dhcsr_ctrl_;
  if (core_ == CoreState::Halted) v |= dap::kSHalt;
  if (core_ == CoreState::Sleep) v |= dap::kSSleep;
  return v;
}

bool ChipInstance::in_sram(std::uint32_t addr) const noexcept {
  return addr >= config_.sram_base && addr - config_.sram_base < config_.sram_bytes;
}

void ChipInstance::clear_debug_state() {
  core_ = CoreState::Reset;
  mem_map_ = false;
  dhcsr_ctrl_ = 0;
  program_.reset();
  run_elapsed_ns_ = 0;
}

void ChipInstance::power_off() {
  core_ = CoreState::Unpowered;
  mem_map_ = false;
  dhcsr_ctrl_ = 0;
  dap_enabled_ = false;
  program_.reset();
  run_elapsed_ns_ = 0;
}

void ChipInstance::apply_rail(Rail rail, double mv) {
  require(mv >= 0.0 && mv <= 3600.0, "rail voltage must be within 0..3600 mV");
  const bool was_on = energized(rail);
  rails_[index(rail)] = mv;
  const bool on = mv > 0.0;

  if (rail == Rail::DVDD && !was_on && on) clear_debug_state();
  if (rail == Rail::DVDD && !on) power_off();
  if (rail == Rail::SRAMVDD && !on) std::fill(sram_.begin(), sram_.end(), 0u);

  const bool core_rails_up = energized(Rail::COREVDD) || energized(Rail::SRAMVDD);
  if (!energized(Rail::DVDD) && core_rails_up && !latchup_) {
    latchup_ = true;
    ++latchup_events_;
  }

  if (std::all_of(rails_.begin(), rails_.end(), [](double v) { return v == 0.0; })) {
    power_off();
    latchup_ = false;
    pll_ = PllConfig{};
    std::fill(chain_.begin(), chain_.end(), false);
  }
}

std::optional<ProgramDescriptor> ChipInstance::read_descriptor() const {
  namespace pl = program_layout;
  auto word = [&](std::uint32_t offset) { return sram_[offset / 4]; };
  if (sram_.size() * 4 < pl::kWordsOffset || word(pl::kMagicOffset) != pl::kMagic) return std::nullopt;
  ProgramDescriptor d;
  d.latency_ns = word(pl::kLatencyOffset);
  d.result_addr = word(pl::kResultOffset);
  const std::uint32_t count = word(pl::kCountOffset);
  if (count > pl::kMaxWords || pl::kWordsOffset + 4ull * count > sram_.size() * 4ull) return std::nullopt;
  if (d.result_addr % 4 != 0 || !in_sram(d.result_addr) ||
      static_cast<std::uint64_t>(d.result_addr - config_.sram_base) + 4ull * count > config_.sram_bytes) {
    return std::nullopt;
  }
  d.words.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) d.words.push_back(word(pl::kWordsOffset + 4 * i));
  return d;
}

void ChipInstance::release_core() {
  run_elapsed_ns_ = 0;
  if (!mem_map_) {
    // boots from the (absent) ROM map and never gets anywhere
    core_ = CoreState::Reset;
    program_.reset();
    return;
  }
  core_ = CoreState::Running;
  program_ = read_descriptor();
}

std::uint32_t ChipInstance::dap_access(const DapTransaction& txn) {
  if (!energized(Rail::DVDD)) throw Error(ErrorCode::AccessWhileUnpowered, "debug access with DVDD off");
  if (txn.addr % 4 != 0) throw Error(ErrorCode::Misaligned, "DAP address not word aligned");

  if (txn.port == DapPort::DebugPort) {
    if (txn.addr != dap::kDpCtrlStat) throw Error(ErrorCode::UnmappedAddress, "unknown DP register");
    constexpr std::uint32_t req = dap::kCsysPwrUpReq | dap::kCdbgPwrUpReq;
    if (txn.op == DapOp::Write) {
      dap_enabled_ = (txn.data & req) == req;
      return 0;
    }
    return dap_enabled_ ? req | dap::kCsysPwrUpAck | dap::kCdbgPwrUpAck : 0;
  }

  if (!dap_enabled_) throw Error(ErrorCode::DapDisabled, "access port used before debug power-up");

  if (in_sram(txn.addr)) {
    if (!energized(Rail::SRAMVDD)) throw Error(ErrorCode::AccessWhileUnpowered, "SRAM access with SRAMVDD off");
    auto& w = sram_[(txn.addr - config_.sram_base) / 4];
    if (txn.op == DapOp::Write) {
      w = txn.data;
      return 0;
    }
    return w;
  }

  const bool debug_enabled = (dhcsr_ctrl_ & dap::kCDebugEn) != 0;
  switch (txn.addr) {
    case dap::kDhcsrAddr:
      if (txn.op == DapOp::Read) return dhcsr();
      if ((txn.data & 0xFFFF0000u) != dap::kDhcsrKey) return 0;  // writes without the key are ignored
      dhcsr_ctrl_ = txn.data & 0xFu;
      if ((dhcsr_ctrl_ & dap::kCDebugEn) && (dhcsr_ctrl_ & dap::kCHalt)) {
        core_ = CoreState::Halted;
      } else if (core_ == CoreState::Halted) {
        core_ = CoreState::Running;  // resume
      }
      return 0;
    case dap::kCoreResetAddr:
      if (txn.op == DapOp::Read) return 0;
      // the control block only responds in debug mode
      if (debug_enabled && (txn.data & 1u)) release_core();
      return 0;
    case dap::kMemMapAddr:
      if (txn.op == DapOp::Read) return mem_map_ ? 1u : 0u;
      if (debug_enabled) mem_map_ = (txn.data & 1u) != 0;
      return 0;
    default:
      throw Error(ErrorCode::UnmappedAddress, "no device at address " + std::to_string(txn.addr));
  }
}

ScanBits ChipInstance::shift_scan(const ScanBits& bits) {
  if (bits.size() != scan_length(variant_)) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(scan_length(variant_)) + " scan bits, got " +
                                               std::to_string(bits.size()));
  }
  if (!energized(Rail::DVDD)) throw Error(ErrorCode::AccessWhileUnpowered, "scan shift with DVDD off");
  const ScanImage image = decode_scan(bits, variant_);

  ScanBits previous = std::move(chain_);
  chain_ = bits;
  pll_ = image.pll;
  if (image.reset) {
    base_reset();
  } else if (image.core_reset.value_or(false) && core_ != CoreState::Unpowered) {
    core_ = CoreState::Reset;
    program_.reset();
    run_elapsed_ns_ = 0;
  }
  return previous;
}

void ChipInstance::base_reset() {
  if (!energized(Rail::DVDD)) return;
  clear_debug_state();
}

void ChipInstance::step(TimeNs dt_ns) {
  time_ns_ += dt_ns;
  if (core_ != CoreState::Running || latchup_ || !program_) return;
  if (!energized(Rail::COREVDD) || !energized(Rail::SRAMVDD)) return;
  run_elapsed_ns_ += dt_ns;
  if (run_elapsed_ns_ < program_->latency_ns) return;
  const std::uint32_t first = (program_->result_addr - config_.sram_base) / 4;
  std::copy(program_->words.begin(), program_->words.end(), sram_.begin() + first);
  core_ = CoreState::Sleep;
}

double ChipInstance::current_draw_ma(Rail rail) const {
  if (!energized(rail)) return 0.0;
  switch (rail) {
    case Rail::COREVDD: {
      switch (core_) {
        case CoreState::Unpowered: return 0.0;
        case CoreState::Running: {
          const double ratio = rail_mv(Rail::COREVDD) / config_.v_nominal_mv;
          return config_.i_core_active_ma * params_.active_scale * ratio * ratio;
        }
        case CoreState::Reset:
        case CoreState::Halted:
        case CoreState::Sleep: return config_.i_core_sleep_ma * params_.active_scale;
      }
      return 0.0;
    }
    case Rail::SRAMVDD: return config_.i_sram_ma * params_.sram_scale;
    default: return config_.fixed_rail_ma[index(rail)];
  }
}

void ChipInstance::check_sensors() const {
  if (!has_sensors(variant_)) throw Error(ErrorCode::SensorAbsent, "Michigan chips have no on-chip sensors");
  if (!energized(Rail::SENSEVDD)) throw Error(ErrorCode::SensorUnpowered, "SENSEVDD is off");
}

double ChipInstance::ro_frequency_mhz(std::size_t idx) const {
  require(idx < kRingOscillatorCount, "ring oscillator index must be < 60");
  check_sensors();
  const double v = rail_mv(Rail::COREVDD) / config_.v_nominal_mv;
  return config_.ro_nominal_mhz[idx] * params_.ro_scale[idx] * std::pow(v, config_.alpha) *
         (1.0 - config_.k_t_per_c * (params_.temp_c - 25.0));
}

double ChipInstance::leakage_na(LeakDevice device) const {
  check_sensors();
  return params_.leak_base_na[index(device)] * std::exp(config_.k_l_per_c * (params_.temp_c - 25.0));
}

std::optional<std::uint32_t> ChipInstance::peek_word(std::uint32_t addr) const {
  if (addr % 4 != 0 || !in_sram(addr)) return std::nullopt;
  return sram_[(addr - config_.sram_base) / 4];
}

}  // namespace varichar
