// SPDX-License-Identifier: Apache-2.0
#include "varichar/controller.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <utility>

namespace varichar {

std::string_view to_string(MasterStep s) noexcept {
  switch (s) {
    case MasterStep::DacInit: return "DacInit";
    case MasterStep::PllScan: return "PllScan";
    case MasterStep::BaseReset: return "BaseReset";
    case MasterStep::DapEnable: return "DapEnable";
    case MasterStep::DebugHalt: return "DebugHalt";
    case MasterStep::LoadProgram: return "LoadProgram";
    case MasterStep::MemMap: return "MemMap";
    case MasterStep::CoreReset: return "CoreReset";
    case MasterStep::ReadResults: return "ReadResults";
    case MasterStep::SyncSlave: return "SyncSlave";
    case MasterStep::Record: return "Record";
  }
  return "?";
}

std::string_view to_string(SyncKind k) noexcept {
  switch (k) {
    case SyncKind::Start: return "Start";
    case SyncKind::Progress: return "Progress";
    case SyncKind::Results: return "Results";
  }
  return "?";
}

// --- test programs -------------------------------------------------------------

std::vector<std::uint8_t> encode_descriptor(const ProgramDescriptor& d) {
  std::vector<std::uint8_t> out;
  auto put = [&](std::uint32_t w) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
  };
  put(program_layout::kMagic);
  put(d.latency_ns);
  put(d.result_addr);
  put(static_cast<std::uint32_t>(d.words.size()));
  for (auto w : d.words) put(w);
  return out;
}

TestProgram TestProgram::from_image(HexImage image, std::optional<std::vector<std::uint32_t>> expected) {
  namespace pl = program_layout;
  const auto bytes = image.contiguous();
  auto word = [&](std::size_t off) {
    std::uint32_t w = 0;
    for (std::size_t i = 0; i < 4; ++i) w |= static_cast<std::uint32_t>(bytes[off + i]) << (8 * i);
    return w;
  };
  require(bytes.size() >= pl::kWordsOffset && word(pl::kMagicOffset) == pl::kMagic,
          "program image does not start with a behavior descriptor");
  const std::uint32_t count = word(pl::kCountOffset);
  require(count <= pl::kMaxWords && bytes.size() >= pl::kWordsOffset + 4ull * count,
          "program descriptor word count exceeds image");

  TestProgram p;
  p.base_addr = image.base_addr();
  p.latency_ns = word(pl::kLatencyOffset);
  p.result_addr = word(pl::kResultOffset);
  for (std::uint32_t i = 0; i < count; ++i) p.expected_words.push_back(word(pl::kWordsOffset + 4 * i));
  if (expected) p.expected_words = std::move(*expected);
  p.image = std::move(image);
  return p;
}

void TestProgram::validate(const ModelConfig& config) const {
  const std::uint64_t sram_end = static_cast<std::uint64_t>(config.sram_base) + config.sram_bytes;
  require(base_addr % 4 == 0, "program base must be word aligned");
  require(base_addr >= config.sram_base && base_addr + static_cast<std::uint64_t>(image.span()) <= sram_end,
          "program image does not fit in SRAM");
  require(result_addr % 4 == 0, "result address must be word aligned");
  require(result_addr >= config.sram_base &&
              result_addr + 4ull * expected_words.size() <= sram_end,
          "result range outside SRAM");
}

TestProgram builtin_program(const ModelConfig& config) {
  ProgramDescriptor d;
  d.latency_ns = 1'000'000;
  d.result_addr = config.sram_base + 0x100;
  d.words = {0xCAFEF00D, 0x12345678, 0x0BADC0DE, 0x600DF00D};
  return TestProgram::from_image(HexImage::from_bytes(config.sram_base, encode_descriptor(d)));
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> program_words(const TestProgram& program) {
  require(program.base_addr % 4 == 0, "program base must be word aligned");
  auto bytes = program.image.contiguous();
  bytes.resize((bytes.size() + 3) / 4 * 4, 0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(bytes.size() / 4);
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    const std::uint32_t w = bytes[i] | bytes[i + 1] << 8 | bytes[i + 2] << 16 | static_cast<std::uint32_t>(bytes[i + 3]) << 24;
    out.emplace_back(program.base_addr + static_cast<std::uint32_t>(i), w);
  }
  return out;
}

std::size_t load_program(ChipInstance& chip, const TestProgram& program) {
  require(chip.core_state() != CoreState::Running, "program load requires a stopped core");
  const auto words = program_words(program);
  for (const auto& [addr, w] : words) chip.dap_access(DapTransaction::write(addr, w));
  for (const auto& [addr, w] : words) {
    if (chip.dap_access(DapTransaction::read(addr)) != w) {
      throw Error(ErrorCode::VerifyMismatch, "SRAM read-back mismatch at " + std::to_string(addr));
    }
  }
  return words.size();
}

// --- sync ------------------------------------------------------------------------

void validate_sync(const std::vector<SyncMessage>& messages) {
  bool started = false;
  bool finished = false;
  for (const auto& m : messages) {
    if (finished) throw Error(ErrorCode::ProtocolViolation, "message after Results");
    switch (m.kind) {
      case SyncKind::Start:
        if (started) throw Error(ErrorCode::ProtocolViolation, "second Start");
        started = true;
        break;
      case SyncKind::Progress:
        if (!started) throw Error(ErrorCode::ProtocolViolation, "Progress before Start");
        break;
      case SyncKind::Results:
        if (!started) throw Error(ErrorCode::ProtocolViolation, "Results before Start");
        finished = true;
        break;
    }
  }
}

namespace {

TimeNs i2c_message_ns(const SyncMessage& m, const BenchTiming& timing) {
  // address + kind + step bytes, then the payload; 9 clocks per byte
  return (3 + m.payload.size()) * 9 * timing.i2c_bit_ns;
}


}  // namespace

std::vector<SyncMessage> sync_exchange(TimeNs master_t_ns, const MeasurementRecord& slave_record) {
  const BenchTiming timing;
  std::vector<SyncMessage> out;
  SyncMessage start{SyncKind::Start, TraceSource::Master, master_t_ns, 0, {}};
  SyncMessage progress{SyncKind::Progress, TraceSource::Slave, master_t_ns + i2c_message_ns(start, timing), 0, {}};
  SyncMessage results{SyncKind::Results, TraceSource::Slave, progress.t_ns + i2c_message_ns(progress, timing), 0,
                      encode_record(slave_record)};
  out.push_back(std::move(start));
  out.push_back(std::move(progress));
  out.push_back(std::move(results));
  validate_sync(out);
  return out;
}

MeasurementRecord results_of(const std::vector<SyncMessage>& messages) {
  validate_sync(messages);
  for (const auto& m : messages) {
    if (m.kind == SyncKind::Results) return decode_record(m.payload);
  }
  throw Error(ErrorCode::ProtocolViolation, "no Results message");
}

// --- simulation ----------------------------------------------------------------

namespace {

class Scheduler {
 public:
  explicit Scheduler(TimeNs start) : now_(start) {}

  TimeNs now() const noexcept { return now_; }

  void at(TimeNs t, std::function<void()> fn) {
    heap_.push_back({std::max(t, now_), seq_++, std::move(fn)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }
  void after(TimeNs dt, std::function<void()> fn) { at(now_ + dt, std::move(fn)); }
  void stop() noexcept { stopped_ = true; }

  /// Runs events in (time, insertion) order, stepping the chip to each
  /// event's time first.
  void run(ChipInstance& chip) {
    while (!heap_.empty() && !stopped_) {
      std::pop_heap(heap_.begin(), heap_.end(), Later{});
      Event ev = std::move(heap_.back());
      heap_.pop_back();
      now_ = ev.t;
      chip.step(now_ - chip.sim_time_ns());
      ev.fn();
    }
  }

 private:
  struct Event {
    TimeNs t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  std::vector<Event> heap_;
  TimeNs now_;
  std::uint64_t seq_ = 0;
  bool stopped_ = false;
};

std::string leak_label(LeakDevice d) { return "leak_" + std::string(to_string(d)); }

// Decodes one raw ADC code into the record field named by its trace label.
// Returns false for an unknown label.
bool store_adc(MeasurementRecord& rec, std::string_view label, std::uint32_t code, const MeasurePlan& plan) {
  auto current = [&](const SenseChannelSpec& spec, std::optional<double>& out, bool& sat) {
    const Reading r = current_from_code(code, spec);
    out = round_sig6(r.value);
    sat = r.saturated;
  };
  if (label == "i_sram") {
    current(plan.sram, rec.i_sram_ma, rec.saturation.i_sram);
  } else if (label == "i_core_active") {
    current(plan.core, rec.i_core_active_ma, rec.saturation.i_core_active);
  } else if (label == "i_core_sleep") {
    current(plan.core, rec.i_core_sleep_ma, rec.saturation.i_core_sleep);
  } else {
    for (LeakDevice d : kAllLeakDevices) {
      if (label == leak_label(d)) {
        const Reading r = leakage_from_code(code, plan.leakage);
        rec.leak_na[index(d)] = round_sig6(r.value);
        rec.saturation.leak[index(d)] = r.saturated;
        return true;
      }
    }
    return false;
  }
  return true;
}

void store_ro(MeasurementRecord& rec, std::uint8_t idx, std::uint16_t count, const MeasurePlan& plan) {
  rec.ro_indices.push_back(idx);
  rec.ro_counts.push_back(count);
  const Reading f = freq_from_count(count, plan.gate);
  rec.ro_mhz.push_back(round_sig6(f.value));
  rec.saturation.frequency = rec.saturation.frequency || f.saturated;
  rec.fmax_est_mhz = round_sig6(fmax_estimate(rec.ro_mhz, plan.kappa));
}

class Run;

/// Step 11: samples on the slave once Start arrives.
class Slave {
 public:
  explicit Slave(Run& run) : run_(run) {}
  void on_message(const SyncMessage& m);
  const MeasurementRecord& record() const noexcept { return rec_; }

 private:
  void plan_sensors(TimeNs t0);
  void sample_at(TimeNs t, std::function<void()> fn);
  void sample_current(const char* label, Rail rail, const SenseChannelSpec& spec);
  void maybe_done();

  Run& run_;
  MeasurementRecord rec_;
  std::size_t expected_ = 0;
  std::size_t taken_ = 0;
  bool done_sent_ = false;
  bool results_requested_ = false;
  bool results_sent_ = false;
};

class Run {
 public:
  Run(Board& board, const TestProgram& program, const RunSettings& settings, Trace* trace)
      : board_(board), program_(program), settings_(settings), trace_(trace), sched_(board.chip.sim_time_ns()),
        slave_(*this) {}

  RunRecord execute();

  // shared with the slave
  ChipInstance& chip() noexcept { return board_.chip; }
  Scheduler& sched() noexcept { return sched_; }
  const RunSettings& settings() const noexcept { return settings_; }
  const TestProgram& program() const noexcept { return program_; }
  void send(SyncMessage m);
  void log(TraceEvent ev);

 private:
  using Action = std::function<std::optional<TimeNs>()>;

  void build();
  void then(Action a) { queue_.push_back(std::move(a)); }
  void run_next();
  void wake();
  void fail(ErrorCode code, const std::string& msg);
  void deliver(const SyncMessage& m);
  bool skipped(MasterStep s) const;
  std::optional<TimeNs> dap(const DapTransaction& txn, std::uint32_t* read = nullptr);
  std::optional<TimeNs> poll_results(std::size_t i);
  MeasurementRecord echo_record() const;

  Board& board_;
  const TestProgram& program_;
  const RunSettings& settings_;
  Trace* trace_;
  Scheduler sched_;
  Slave slave_;

  std::deque<Action> queue_;
  bool parked_ = false;
  bool finished_ = false;
  std::uint8_t current_step_ = 0;
  TimeNs wait_started_ = 0;
  bool slave_done_ = false;
  std::optional<std::vector<std::uint8_t>> results_payload_;
  RunRecord out_;
};

void Run::log(TraceEvent ev) {
  if (!trace_) return;
  ev.t_ns = sched_.now();
  ev.step = current_step_;
  trace_->push_back(std::move(ev));
}

void Run::send(SyncMessage m) {
  m.t_ns = sched_.now();
  TraceEvent ev;
  ev.source = m.from;
  ev.kind = TraceKind::Sync;
  ev.label = std::string(to_string(m.kind));
  ev.value = m.step;
  ev.bytes = m.payload;
  log(std::move(ev));
  out_.sync_log.push_back(m);
  const TimeNs latency = i2c_message_ns(m, settings_.timing);
  sched_.after(latency, [this, m = std::move(m)] { deliver(m); });
}

void Run::deliver(const SyncMessage& m) {
  if (finished_) return;
  if (m.from == TraceSource::Master) {
    slave_.on_message(m);
    return;
  }
  if (m.kind == SyncKind::Progress) slave_done_ = true;
  if (m.kind == SyncKind::Results) results_payload_ = m.payload;
  wake();
}

bool Run::skipped(MasterStep s) const {
  return std::find(settings_.skip_steps.begin(), settings_.skip_steps.end(), s) != settings_.skip_steps.end();
}

std::optional<TimeNs> Run::dap(const DapTransaction& txn, std::uint32_t* read) {
  const std::uint32_t data = chip().dap_access(txn);
  TraceEvent ev;
  ev.kind = TraceKind::Dap;
  ev.dap = txn;
  if (txn.op == DapOp::Read) ev.dap.data = data;
  log(std::move(ev));
  if (read) *read = data;
  return settings_.timing.dap_txn_ns;
}

// Reads the result words every poll period until they match the expected
// words. Word `i` of the current poll round.
std::optional<TimeNs> Run::poll_results(std::size_t i) {
  const auto& timing = settings_.timing;
  const auto& expected = program_.expected_words;
  if (i == 0) out_.result_words.clear();
  if (i < expected.size()) {
    std::uint32_t w = 0;
    const auto addr = program_.result_addr + static_cast<std::uint32_t>(4 * i);
    dap(DapTransaction::read(addr), &w);
    out_.result_words.push_back(w);
    if (i + 1 < expected.size()) {
      queue_.push_front([this, i] { return poll_results(i + 1); });
      return timing.dap_txn_ns;
    }
  }
  if (out_.result_words == expected) {
    out_.result_ok = true;
    return expected.empty() ? 0 : timing.dap_txn_ns;
  }
  if (sched_.now() - wait_started_ >= timing.timeout_ns) {
    throw Error(ErrorCode::Timeout, "expected result words never appeared");
  }
  queue_.push_front([this] { return poll_results(0); });
  return timing.dap_txn_ns + timing.poll_period_ns;
}

void Run::fail(ErrorCode code, const std::string& msg) {
  if (finished_) return;
  out_.error = code;
  out_.error_message = msg;
  out_.result_ok = false;
  finished_ = true;
  sched_.stop();
}

void Run::wake() {
  if (!parked_ || finished_) return;
  parked_ = false;
  sched_.after(0, [this] { run_next(); });
}

void Run::run_next() {
  if (finished_) return;
  if (queue_.empty()) {
    finished_ = true;
    sched_.stop();
    return;
  }
  Action action = std::move(queue_.front());
  queue_.pop_front();
  std::optional<TimeNs> d;
  try {
    d = action();
  } catch (const Error& e) {
    fail(e.code(), e.what());
    return;
  }
  if (finished_) return;
  if (d) {
    sched_.after(*d, [this] { run_next(); });
  } else {
    parked_ = true;
  }
}

void Run::build() {
  const auto& s = settings_;
  const auto& timing = s.timing;
  const ChipVariant variant = board_.chip.variant();

  for (MasterStep step : kMasterSteps) {
    const auto n = static_cast<std::uint8_t>(step);
    if (!skipped(step)) {
      then([this, n]() -> std::optional<TimeNs> {
        current_step_ = n;
        return 0;
      });

      switch (step) {
        case MasterStep::DacInit: {
          DacState scratch(board_.dac.vref_mv());
          const auto seq = default_power_sequence(s.vcore_mv, s.vsram_mv, s.dwell_ns);
          const auto frames = power_up(seq, scratch, board_.dac_addr7);
          for (std::size_t i = 0; i < frames.size(); ++i) {
            const TimeNs gap = i + 1 < frames.size() ? frames[i + 1].t_ns - frames[i].t_ns : seq.steps[i].dwell_ns;
            then([this, f = frames[i].frame, gap]() -> std::optional<TimeNs> {
              TraceEvent ev;
              ev.kind = TraceKind::I2cDac;
              ev.addr7 = f.addr7;
              ev.bytes = f.payload;
              log(std::move(ev));
              drive_frame(chip(), board_.dac, f);
              return gap;
            });
          }
          then([this]() -> std::optional<TimeNs> {
            if (chip().latchup()) throw Error(ErrorCode::LatchUp, "chip latched up during power-up");
            return 0;
          });
          break;
        }
        case MasterStep::PllScan: {
          ScanImage image;
          image.pll = s.pll;
          if (variant == ChipVariant::Michigan) image.core_reset = false;
          then([this, bits = encode_scan(image, variant), &timing]() -> std::optional<TimeNs> {
            TraceEvent ev;
            ev.kind = TraceKind::Scan;
            ev.bits = bits;
            log(std::move(ev));
            chip().shift_scan(bits);
            return bits.size() * timing.scan_tck_ns;
          });
          break;
        }
        case MasterStep::BaseReset: {
          if (variant == ChipVariant::UCLA) {
            // no dedicated reset bit on the UCLA chain beyond RESET: pulse it
            for (bool level : {true, false}) {
              ScanImage image;
              image.reset = level;
              image.pll = s.pll;
              then([this, bits = encode_scan(image, variant), &timing]() -> std::optional<TimeNs> {
                TraceEvent ev;
                ev.kind = TraceKind::Scan;
                ev.bits = bits;
                log(std::move(ev));
                chip().shift_scan(bits);
                return bits.size() * timing.scan_tck_ns;
              });
            }
          } else {
            then([this, &timing]() -> std::optional<TimeNs> {
              TraceEvent ev;
              ev.kind = TraceKind::Pin;
              ev.label = "BASE_RESET";
              log(std::move(ev));
              chip().base_reset();
              return timing.reset_pulse_ns;
            });
          }
          then([&timing]() -> std::optional<TimeNs> { return timing.reset_settle_ns; });
          break;
        }
        case MasterStep::DapEnable:
          then([this] { return dap(dap_enable_txn()); });
          break;
        case MasterStep::DebugHalt:
          then([this] { return dap(dhcsr_debug_enable()); });
          break;
        case MasterStep::LoadProgram: {
          then([this]() -> std::optional<TimeNs> {
            require(chip().core_state() != CoreState::Running, "program load requires a stopped core");
            return 0;
          });
          const auto words = program_words(program_);
          for (const auto& [addr, w] : words) {
            then([this, addr = addr, w = w] { return dap(DapTransaction::write(addr, w)); });
          }
          for (const auto& [addr, w] : words) {
            then([this, addr = addr, w = w]() -> std::optional<TimeNs> {
              std::uint32_t got = 0;
              auto d = dap(DapTransaction::read(addr), &got);
              if (got != w) throw Error(ErrorCode::VerifyMismatch, "SRAM read-back mismatch at " + std::to_string(addr));
              return d;
            });
          }
          break;
        }
        case MasterStep::MemMap:
          then([this] { return dap(mem_map_txn()); });
          break;
        case MasterStep::CoreReset:
          then([this] { return dap(core_reset_txn()); });
          break;
        case MasterStep::ReadResults: {
          then([this]() -> std::optional<TimeNs> {
            wait_started_ = sched_.now();
            return 0;
          });
          then([this] { return poll_results(0); });
          // the slave must finish its window before the results are taken
          then([this, &timing]() -> std::optional<TimeNs> {
            if (slave_done_) return 0;
            if (sched_.now() - wait_started_ >= timing.timeout_ns) {
              throw Error(ErrorCode::Timeout, "slave did not finish its measurement plan");
            }
            queue_.push_front([this]() -> std::optional<TimeNs> {
              if (!slave_done_) throw Error(ErrorCode::ProtocolViolation, "woken without slave progress");
              return 0;
            });
            return std::nullopt;
          });
          break;
        }
        case MasterStep::SyncSlave:
          then([this]() -> std::optional<TimeNs> {
            if (results_payload_) return 0;
            queue_.push_front([this]() -> std::optional<TimeNs> {
              if (!results_payload_) return std::nullopt;
              return 0;
            });
            return std::nullopt;
          });
          break;
        case MasterStep::Record:
          then([this, &timing]() -> std::optional<TimeNs> { return timing.record_ns; });
          break;
      }

      then([this, step]() -> std::optional<TimeNs> {
        out_.step_times[step] = sched_.now();
        return 0;
      });
    }

    // heartbeats to the slave go out whether or not the step ran
    if (step == MasterStep::BaseReset) {
      then([this]() -> std::optional<TimeNs> {
        send({SyncKind::Start, TraceSource::Master, 0, 0, {}});
        return 0;
      });
    } else if (n >= 4 && n <= 9) {
      then([this, n]() -> std::optional<TimeNs> {
        send({SyncKind::Progress, TraceSource::Master, 0, n, {}});
        return 0;
      });
    }
  }
}

MeasurementRecord Run::echo_record() const {
  MeasurementRecord r;
  r.variant = board_.chip.variant();
  r.vcore_mv = settings_.vcore_mv;
  r.vsram_mv = settings_.vsram_mv;
  r.pll = settings_.pll;
  r.f_clk_mhz = settings_.pll.internal_mhz(board_.chip.config().hclk_mhz);
  r.seed = board_.chip.params().seed;
  r.sensors_absent = !has_sensors(board_.chip.variant());
  return r;
}

RunRecord Run::execute() {
  out_.vcore_mv = settings_.vcore_mv;
  out_.vsram_mv = settings_.vsram_mv;
  out_.pll = settings_.pll;
  build();
  sched_.after(0, [this] { run_next(); });
  sched_.run(board_.chip);
  if (!finished_) fail(ErrorCode::Timeout, "simulation drained before the run completed");

  for (Rail r : kAllRails) out_.rail_currents_ma[index(r)] = board_.chip.current_draw_ma(r);

  if (!out_.error && results_payload_) {
    MeasurementRecord m = decode_record(*results_payload_);
    const MeasurementRecord echo = echo_record();
    m.variant = echo.variant;
    m.vcore_mv = echo.vcore_mv;
    m.vsram_mv = echo.vsram_mv;
    m.pll = echo.pll;
    m.f_clk_mhz = echo.f_clk_mhz;
    m.seed = echo.seed;
    m.result_ok = out_.result_ok;
    out_.measurement = std::move(m);
    if (const auto& st = out_.measurement.sample_times; !st.empty()) {
      out_.window_start_ns = *std::min_element(st.begin(), st.end());
      out_.window_end_ns = *std::max_element(st.begin(), st.end());
    }
  } else {
    out_.result_ok = false;
    out_.measurement = echo_record();
    out_.measurement.result_ok = false;
  }
  return std::move(out_);
}

// --- slave ---------------------------------------------------------------------

void Slave::sample_at(TimeNs t, std::function<void()> fn) {
  ++expected_;
  run_.sched().at(t, [this, fn = std::move(fn)] {
    fn();
    rec_.sample_times.push_back(run_.sched().now());
    ++taken_;
    maybe_done();
  });
}

void Slave::sample_current(const char* label, Rail rail, const SenseChannelSpec& spec) {
  const std::uint32_t code = current_to_adc(run_.chip().current_draw_ma(rail), spec);
  store_adc(rec_, label, code, run_.settings().plan);
  TraceEvent ev;
  ev.source = TraceSource::Slave;
  ev.kind = TraceKind::SensorAdc;
  ev.label = label;
  ev.code = code;
  run_.log(std::move(ev));
}

void Slave::plan_sensors(TimeNs t0) {
  const auto& plan = run_.settings().plan;
  rec_.variant = run_.chip().variant();
  rec_.sensors_absent = !has_sensors(rec_.variant);

  sample_at(t0, [this, &plan] { sample_current("i_sram", Rail::SRAMVDD, plan.sram); });
  if (rec_.sensors_absent) return;

  // frequency and leakage sensing share pins, so they run back to back
  TimeNs t = t0;
  const auto gate_ns = static_cast<TimeNs>(plan.gate.gate_ms * 1e6);
  for (std::uint8_t idx : plan.ro_indices) {
    t += gate_ns;
    sample_at(t, [this, idx, &plan] {
      try {
        const FrequencyCount c = measure_frequency(run_.chip(), idx, plan.gate);
        // READ the counter a byte at a time through the output select mux
        const auto hi = read_count_byte(c.count, OutputSelect::High);
        const auto lo = read_count_byte(c.count, OutputSelect::Low);
        const auto count = static_cast<std::uint16_t>(hi << 8 | lo);
        store_ro(rec_, idx, count, plan);
        TraceEvent ev;
        ev.source = TraceSource::Slave;
        ev.kind = TraceKind::SensorFreq;
        ev.value = idx;
        ev.code = count;
        run_.log(std::move(ev));
      } catch (const Error&) {
        rec_.sensor_error = true;
      }
    });
  }
  const auto int_ns = static_cast<TimeNs>(plan.leakage.t_int_ms * 1e6);
  for (LeakDevice d : kAllLeakDevices) {
    t += int_ns;
    sample_at(t, [this, d, &plan] {
      try {
        const std::uint32_t code = leakage_to_adc(run_.chip().leakage_na(d), plan.leakage);
        const std::string label = leak_label(d);
        store_adc(rec_, label, code, plan);
        TraceEvent ev;
        ev.source = TraceSource::Slave;
        ev.kind = TraceKind::SensorAdc;
        ev.label = label;
        ev.code = code;
        run_.log(std::move(ev));
      } catch (const Error&) {
        rec_.sensor_error = true;
      }
    });
  }
}

void Slave::on_message(const SyncMessage& m) {
  const auto& plan = run_.settings().plan;
  const auto& timing = run_.settings().timing;
  const TimeNs now = run_.sched().now();
  switch (m.kind) {
    case SyncKind::Start:
      plan_sensors(now);
      break;
    case SyncKind::Progress:
      if (m.step == static_cast<std::uint8_t>(MasterStep::CoreReset)) {
        sample_at(now + timing.active_sample_delay_ns, [this, &plan] {
          sample_current("i_core_active", Rail::COREVDD, plan.core);
        });
        sample_at(now + run_.program().latency_ns + timing.sleep_sample_delay_ns, [this, &plan] {
          sample_current("i_core_sleep", Rail::COREVDD, plan.core);
        });
      } else if (m.step == static_cast<std::uint8_t>(MasterStep::ReadResults)) {
        results_requested_ = true;
        maybe_done();
      }
      break;
    case SyncKind::Results:
      break;
  }
}

void Slave::maybe_done() {
  if (taken_ != expected_ || expected_ == 0) return;
  if (!done_sent_ && taken_ >= 3) {
    // i_sram plus both core samples at minimum
    done_sent_ = true;
    run_.send({SyncKind::Progress, TraceSource::Slave, 0, 0, {}});
  }
  if (done_sent_ && results_requested_ && !results_sent_) {
    results_sent_ = true;
    run_.send({SyncKind::Results, TraceSource::Slave, 0, 0, encode_record(rec_)});
  }
}

}  // namespace

RunRecord master_run(Board& board, const TestProgram& program, const RunSettings& settings, Trace* trace) {
  if (!settings.bounds.contains(settings.vcore_mv) || !settings.bounds.contains(settings.vsram_mv)) {
    throw Error(ErrorCode::OutOfSweepRange, "core/SRAM voltage outside sweep bounds");
  }
  for (auto idx : settings.plan.ro_indices) require(idx < kRingOscillatorCount, "ring oscillator index must be < 60");
  program.validate(board.chip.config());
  Run run(board, program, settings, trace);
  return run.execute();
}

void power_down_board(Board& board, const RunSettings& settings, Trace* trace) {
  DacState scratch(board.dac.vref_mv());
  const auto seq = default_power_sequence(settings.vcore_mv, settings.vsram_mv, settings.dwell_ns);
  const auto frames = power_down(seq, scratch, board.dac_addr7);
  const TimeNs t0 = board.chip.sim_time_ns();
  for (const auto& f : frames) {
    board.chip.step(t0 + f.t_ns - board.chip.sim_time_ns());
    if (trace) {
      TraceEvent ev;
      ev.t_ns = board.chip.sim_time_ns();
      ev.kind = TraceKind::I2cDac;
      ev.step = kPhasePowerDown;
      ev.addr7 = f.frame.addr7;
      ev.bytes = f.frame.payload;
      trace->push_back(std::move(ev));
    }
    drive_frame(board.chip, board.dac, f.frame);
  }
  board.chip.step(settings.dwell_ns);
}

// --- replay ----------------------------------------------------------------------

ReplayReport replay_trace(ChipInstance& chip, const Trace& trace, const MeasurePlan& plan,
                          std::optional<std::uint32_t> result_addr) {
  ReplayReport report;
  report.measurement.variant = chip.variant();
  report.measurement.sensors_absent = !has_sensors(chip.variant());
  report.measurement.seed = chip.params().seed;
  DacState dac;
  auto mismatch = [&](const TraceEvent& ev, const std::string& what) {
    ++report.mismatches;
    report.details.push_back("t=" + std::to_string(ev.t_ns) + " " + std::string(to_string(ev.kind)) + ": " + what);
  };
  for (const auto& ev : trace) {
    ++report.events;
    require(ev.t_ns >= chip.sim_time_ns(), "trace is not time ordered");
    chip.step(ev.t_ns - chip.sim_time_ns());
    switch (ev.kind) {
      case TraceKind::I2cDac:
        drive_frame(chip, dac, I2cFrame{ev.addr7, ev.bytes});
        break;
      case TraceKind::Scan:
        chip.shift_scan(ev.bits);
        break;
      case TraceKind::Pin:
        if (ev.label == "BASE_RESET") chip.base_reset();
        break;
      case TraceKind::Dap: {
        const std::uint32_t got = chip.dap_access(ev.dap);
        if (ev.dap.op != DapOp::Read) break;
        if (got != ev.dap.data) mismatch(ev, "read data differs");
        if (ev.step == static_cast<std::uint8_t>(MasterStep::ReadResults) && result_addr) {
          // each poll round starts again at the first result word
          if (ev.dap.addr == *result_addr) report.result_words.clear();
          report.result_words.push_back(got);
        }
        break;
      }
      case TraceKind::Sync:
        break;
      case TraceKind::SensorFreq: {
        const auto c = measure_frequency(chip, ev.value, plan.gate);
        if (c.count != ev.code) mismatch(ev, "count differs");
        store_ro(report.measurement, static_cast<std::uint8_t>(ev.value), c.count, plan);
        report.measurement.sample_times.push_back(ev.t_ns);
        break;
      }
      case TraceKind::SensorAdc: {
        std::uint32_t code = 0;
        if (ev.label == "i_sram") {
          code = current_to_adc(chip.current_draw_ma(Rail::SRAMVDD), plan.sram);
        } else if (ev.label == "i_core_active" || ev.label == "i_core_sleep") {
          code = current_to_adc(chip.current_draw_ma(Rail::COREVDD), plan.core);
        } else {
          bool found = false;
          for (LeakDevice d : kAllLeakDevices) {
            if (ev.label == leak_label(d)) {
              code = leakage_to_adc(chip.leakage_na(d), plan.leakage);
              found = true;
            }
          }
          if (!found) {
            mismatch(ev, "unknown channel " + ev.label);
            break;
          }
        }
        if (code != ev.code) mismatch(ev, "raw code differs");
        store_adc(report.measurement, ev.label, code, plan);
        report.measurement.sample_times.push_back(ev.t_ns);
        break;
      }
    }
  }
  return report;
}

}  // namespace varichar
