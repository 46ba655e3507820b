// SPDX-License-Identifier: Apache-2.0
#include "varichar/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "varichar/rng.hpp"

namespace varichar {

using nlohmann::json;

namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Best effort: the line where `"key"` first appears.
std::optional<std::size_t> line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string_view::npos) return std::nullopt;
  return line_of_offset(text, pos);
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw Error(ErrorCode::ParseError, "key '" + key + "': " + msg, line_of_key(text_, key));
  }

  void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) const {
    for (const auto& [k, v] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        fail(k, "unknown key" + (where.empty() ? std::string() : " in '" + where + "'"));
      }
    }
  }

  template <typename T>
  T unsigned_value(const json& v, const std::string& key, T max = std::numeric_limits<T>::max()) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(key, "expected a non-negative integer");
    }
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(max)) fail(key, "value too large");
    return static_cast<T>(u);
  }

  double number(const json& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::string string(const json& v, const std::string& key) const {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& key) const {
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }

  std::vector<double> numbers(const json& v, const std::string& key) const {
    std::vector<double> out;
    for (const auto& e : array(v, key)) out.push_back(number(e, key));
    return out;
  }

 private:
  std::string_view text_;
};

void read_model(const ConfigReader& rd, const json& obj, ModelConfig& m) {
  if (!obj.is_object()) rd.fail("model", "expected an object");
  rd.check_keys(obj,
                {"sigma_leak", "sigma_active", "sigma_ro", "sigma_sram", "leak_median_na", "v_nominal_mv", "alpha",
                 "k_t_per_c", "k_l_per_c", "i_core_active_ma", "i_core_sleep_ma", "i_sram_ma", "fixed_rail_ma",
                 "ro_nominal_mhz", "hclk_mhz"},
                "model");
  auto num = [&](const char* key, double& out) {
    if (obj.contains(key)) out = rd.number(obj.at(key), key);
  };
  num("sigma_leak", m.sigma_leak);
  num("sigma_active", m.sigma_active);
  num("sigma_ro", m.sigma_ro);
  num("sigma_sram", m.sigma_sram);
  num("v_nominal_mv", m.v_nominal_mv);
  num("alpha", m.alpha);
  num("k_t_per_c", m.k_t_per_c);
  num("k_l_per_c", m.k_l_per_c);
  num("i_core_active_ma", m.i_core_active_ma);
  num("i_core_sleep_ma", m.i_core_sleep_ma);
  num("i_sram_ma", m.i_sram_ma);
  num("hclk_mhz", m.hclk_mhz);
  if (obj.contains("leak_median_na")) {
    const auto v = rd.numbers(obj.at("leak_median_na"), "leak_median_na");
    if (v.size() != 4) rd.fail("leak_median_na", "expected 4 values (rvtp, rvtn, hvtp, hvtn)");
    std::copy(v.begin(), v.end(), m.leak_median_na.begin());
  }
  if (obj.contains("fixed_rail_ma")) {
    const auto v = rd.numbers(obj.at("fixed_rail_ma"), "fixed_rail_ma");
    if (v.size() != kRailCount) rd.fail("fixed_rail_ma", "expected 8 values in DAC channel order");
    std::copy(v.begin(), v.end(), m.fixed_rail_ma.begin());
  }
  if (obj.contains("ro_nominal_mhz")) {
    m.ro_nominal_mhz = rd.numbers(obj.at("ro_nominal_mhz"), "ro_nominal_mhz");
  }
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); }

}  // namespace

void SweepConfig::validate() const {
  if (n_chips < 1) invalid("n_chips must be at least 1");
  if (vcore_mv.empty()) invalid("vcore_mv must not be empty");
  if (vsram_mv.empty()) invalid("vsram_mv must not be empty");
  if (pll.empty()) invalid("pll must not be empty");
  if (ro_indices.empty()) invalid("ro_indices must not be empty");
  const SweepBounds bounds;
  auto check_v = [&](const std::vector<double>& vs, const char* key) {
    for (double v : vs) {
      if (!std::isfinite(v) || !bounds.contains(v)) {
        invalid(std::string(key) + " value " + format_g6(v) + " mV outside [" + format_g6(bounds.min_mv) + ", " +
                format_g6(bounds.max_mv) + "] mV");
      }
    }
  };
  check_v(vcore_mv, "vcore_mv");
  check_v(vsram_mv, "vsram_mv");
  for (const auto& p : pll) {
    if (!p.runnable()) invalid("pll m and n must be in 1..255");
  }
  for (auto i : ro_indices) {
    if (i >= kRingOscillatorCount) invalid("ro_indices must be < 60");
  }
  if (!(gate_ms > 0.0) || !std::isfinite(gate_ms)) invalid("gate_ms must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) invalid("kappa must be positive");
  for (auto s : fault_skip_steps) {
    if (std::find(kMasterSteps.begin(), kMasterSteps.end(), s) == kMasterSteps.end()) {
      invalid("fault_skip_steps entry is not a master step");
    }
  }
  if (program.empty()) invalid("program must not be empty");
  try {
    model.validate();
  } catch (const Error& e) {
    invalid(std::string("model: ") + e.what());
  }
}

SweepConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  const ConfigReader rd(text);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "configuration must be a JSON object", 1);
  rd.check_keys(doc,
                {"variant", "n_chips", "seed", "vcore_mv", "vsram_mv", "pll", "ro_indices", "gate_ms", "kappa",
                 "program", "expected_words", "model", "fault_skip_steps", "jobs", "temp_c"},
                "");

  SweepConfig cfg;
  if (doc.contains("variant")) {
    const auto v = parse_variant(rd.string(doc.at("variant"), "variant"));
    if (!v) rd.fail("variant", "expected \"UCLA\" or \"Michigan\"");
    cfg.variant = *v;
  }
  if (doc.contains("n_chips")) cfg.n_chips = rd.unsigned_value<std::uint32_t>(doc.at("n_chips"), "n_chips");
  if (doc.contains("seed")) cfg.seed = rd.unsigned_value<std::uint64_t>(doc.at("seed"), "seed");
  if (doc.contains("vcore_mv")) cfg.vcore_mv = rd.numbers(doc.at("vcore_mv"), "vcore_mv");
  if (doc.contains("vsram_mv")) cfg.vsram_mv = rd.numbers(doc.at("vsram_mv"), "vsram_mv");
  if (doc.contains("pll")) {
    cfg.pll.clear();
    for (const auto& p : rd.array(doc.at("pll"), "pll")) {
      if (!p.is_object()) rd.fail("pll", "expected objects {m, n, sel}");
      rd.check_keys(p, {"m", "n", "sel"}, "pll");
      PllConfig c{5, 1, ClockSelect::PLL};
      if (p.contains("m")) c.mult_m = rd.unsigned_value<std::uint8_t>(p.at("m"), "m");
      if (p.contains("n")) c.div_n = rd.unsigned_value<std::uint8_t>(p.at("n"), "n");
      if (p.contains("sel")) {
        const auto s = rd.string(p.at("sel"), "sel");
        if (s == "PLL") {
          c.clk_sel = ClockSelect::PLL;
        } else if (s == "HCLK") {
          c.clk_sel = ClockSelect::HCLK;
        } else {
          rd.fail("sel", "expected \"PLL\" or \"HCLK\"");
        }
      }
      cfg.pll.push_back(c);
    }
  }
  if (doc.contains("ro_indices")) {
    cfg.ro_indices.clear();
    for (const auto& e : rd.array(doc.at("ro_indices"), "ro_indices")) {
      cfg.ro_indices.push_back(rd.unsigned_value<std::uint8_t>(e, "ro_indices"));
    }
  }
  if (doc.contains("gate_ms")) cfg.gate_ms = rd.number(doc.at("gate_ms"), "gate_ms");
  if (doc.contains("kappa")) cfg.kappa = rd.number(doc.at("kappa"), "kappa");
  if (doc.contains("program")) cfg.program = rd.string(doc.at("program"), "program");
  if (doc.contains("expected_words")) {
    std::vector<std::uint32_t> words;
    for (const auto& e : rd.array(doc.at("expected_words"), "expected_words")) {
      words.push_back(rd.unsigned_value<std::uint32_t>(e, "expected_words"));
    }
    cfg.expected_words = std::move(words);
  }
  if (doc.contains("model")) read_model(rd, doc.at("model"), cfg.model);
  if (doc.contains("temp_c")) cfg.model.temp_c = rd.number(doc.at("temp_c"), "temp_c");
  if (doc.contains("fault_skip_steps")) {
    for (const auto& e : rd.array(doc.at("fault_skip_steps"), "fault_skip_steps")) {
      cfg.fault_skip_steps.push_back(
          static_cast<MasterStep>(rd.unsigned_value<std::uint8_t>(e, "fault_skip_steps")));
    }
  }
  if (doc.contains("jobs")) cfg.jobs = rd.unsigned_value<unsigned>(doc.at("jobs"), "jobs");

  cfg.validate();
  return cfg;
}

std::string config_to_json(const SweepConfig& cfg) {
  json j;
  j["variant"] = std::string(to_string(cfg.variant));
  j["n_chips"] = cfg.n_chips;
  j["seed"] = cfg.seed;
  j["vcore_mv"] = cfg.vcore_mv;
  j["vsram_mv"] = cfg.vsram_mv;
  j["pll"] = json::array();
  for (const auto& p : cfg.pll) {
    j["pll"].push_back({{"m", p.mult_m}, {"n", p.div_n}, {"sel", std::string(to_string(p.clk_sel))}});
  }
  j["ro_indices"] = cfg.ro_indices;
  j["gate_ms"] = cfg.gate_ms;
  j["kappa"] = cfg.kappa;
  j["program"] = cfg.program;
  if (cfg.expected_words) j["expected_words"] = *cfg.expected_words;
  const auto& m = cfg.model;
  j["model"] = {{"sigma_leak", m.sigma_leak},
                {"sigma_active", m.sigma_active},
                {"sigma_ro", m.sigma_ro},
                {"sigma_sram", m.sigma_sram},
                {"leak_median_na", m.leak_median_na},
                {"v_nominal_mv", m.v_nominal_mv},
                {"alpha", m.alpha},
                {"k_t_per_c", m.k_t_per_c},
                {"k_l_per_c", m.k_l_per_c},
                {"i_core_active_ma", m.i_core_active_ma},
                {"i_core_sleep_ma", m.i_core_sleep_ma},
                {"i_sram_ma", m.i_sram_ma},
                {"fixed_rail_ma", m.fixed_rail_ma},
                {"ro_nominal_mhz", m.ro_nominal_mhz},
                {"hclk_mhz", m.hclk_mhz}};
  j["temp_c"] = m.temp_c;
  j["fault_skip_steps"] = json::array();
  for (auto s : cfg.fault_skip_steps) j["fault_skip_steps"].push_back(static_cast<int>(s));
  // jobs is omitted on purpose: it must not change any output
  return j.dump(2);
}

TestProgram resolve_program(const SweepConfig& cfg, const std::filesystem::path& base_dir) {
  if (cfg.program == kBuiltinProgram) {
    TestProgram p = builtin_program(cfg.model);
    if (cfg.expected_words) p.expected_words = *cfg.expected_words;
    return p;
  }
  if (cfg.program.starts_with("builtin:")) invalid("unknown builtin program '" + cfg.program + "'");
  std::filesystem::path path(cfg.program);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open program " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return TestProgram::from_image(parse_hex_image(ss.str()), cfg.expected_words);
}

GridPoint grid_point(const SweepConfig& cfg, std::size_t index) {
  require(index < cfg.grid_size(), "grid index out of range");
  const std::size_t n_pll = cfg.pll.size();
  const std::size_t n_sram = cfg.vsram_mv.size();
  return {cfg.vcore_mv[index / (n_pll * n_sram)], cfg.vsram_mv[(index / n_pll) % n_sram], cfg.pll[index % n_pll]};
}

// --- sweep -------------------------------------------------------------------------

namespace {

struct ChipOutput {
  std::vector<MeasurementRecord> records;
  Trace trace;
  std::size_t failed = 0;
};

MeasurementRecord null_record(const SweepConfig& cfg, const GridPoint& gp) {
  MeasurementRecord m;
  m.variant = cfg.variant;
  m.vcore_mv = gp.vcore_mv;
  m.vsram_mv = gp.vsram_mv;
  m.pll = gp.pll;
  m.f_clk_mhz = gp.pll.internal_mhz(cfg.model.hclk_mhz);
  m.sensors_absent = !has_sensors(cfg.variant);
  return m;
}

ChipOutput run_chip(const SweepConfig& cfg, const TestProgram& program, std::uint32_t chip_id, bool keep_trace) {
  ChipOutput out;
  Board board(ChipInstance(cfg.variant, derive_seed(cfg.seed, chip_id), cfg.model));
  for (std::size_t idx = 0; idx < cfg.grid_size(); ++idx) {
    const GridPoint gp = grid_point(cfg, idx);
    RunSettings s;
    s.vcore_mv = gp.vcore_mv;
    s.vsram_mv = gp.vsram_mv;
    s.pll = gp.pll;
    s.plan.ro_indices = cfg.ro_indices;
    s.plan.gate.gate_ms = cfg.gate_ms;
    s.plan.kappa = cfg.kappa;
    s.skip_steps = cfg.fault_skip_steps;

    Trace trace;
    Trace* tp = keep_trace ? &trace : nullptr;
    MeasurementRecord m;
    bool ok = false;
    try {
      RunRecord r = master_run(board, program, s, tp);
      m = std::move(r.measurement);
      ok = r.result_ok;
    } catch (const Error&) {
      m = null_record(cfg, gp);
    }
    try {
      power_down_board(board, s, tp);
    } catch (const Error&) {
      // a rail that cannot be driven down is already recorded as a failed point
    }
    m.chip_id = chip_id;
    m.seed = cfg.seed;
    m.result_ok = ok;
    if (!ok) ++out.failed;
    out.records.push_back(std::move(m));
    for (auto& ev : trace) {
      ev.chip = chip_id;
      ev.point = static_cast<std::uint32_t>(idx);
      out.trace.push_back(std::move(ev));
    }
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, const TestProgram& program, bool keep_trace) {
  cfg.validate();
  program.validate(cfg.model);

  std::vector<ChipOutput> per_chip(cfg.n_chips);
  unsigned jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
  jobs = std::min<unsigned>(jobs, cfg.n_chips);

  if (jobs <= 1) {
    for (std::uint32_t c = 0; c < cfg.n_chips; ++c) per_chip[c] = run_chip(cfg, program, c, keep_trace);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::uint32_t c; (c = next.fetch_add(1)) < cfg.n_chips;) per_chip[c] = run_chip(cfg, program, c, keep_trace);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  SweepResult result;
  result.records.reserve(static_cast<std::size_t>(cfg.n_chips) * cfg.grid_size());
  for (auto& c : per_chip) {
    std::move(c.records.begin(), c.records.end(), std::back_inserter(result.records));
    std::move(c.trace.begin(), c.trace.end(), std::back_inserter(result.trace));
    result.failed += c.failed;
  }
  return result;
}

SweepResult run_sweep(const SweepConfig& cfg) { return run_sweep(cfg, resolve_program(cfg)); }

// --- statistics ------------------------------------------------------------------

namespace {

struct MetricColumn {
  std::string name;
  std::optional<double> (*get)(const MeasurementRecord&);
};

const std::vector<MetricColumn>& metric_table() {
  static const std::vector<MetricColumn> table = {
      {"i_core_active_mA", [](const MeasurementRecord& r) { return r.i_core_active_ma; }},
      {"i_core_sleep_mA", [](const MeasurementRecord& r) { return r.i_core_sleep_ma; }},
      {"i_sram_mA", [](const MeasurementRecord& r) { return r.i_sram_ma; }},
      {"leak_rvtp_nA", [](const MeasurementRecord& r) { return r.leak_na[0]; }},
      {"leak_rvtn_nA", [](const MeasurementRecord& r) { return r.leak_na[1]; }},
      {"leak_hvtp_nA", [](const MeasurementRecord& r) { return r.leak_na[2]; }},
      {"leak_hvtn_nA", [](const MeasurementRecord& r) { return r.leak_na[3]; }},
      {"fmax_est_MHz", [](const MeasurementRecord& r) { return r.fmax_est_mhz; }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : metric_table()) n.push_back(c.name);
    return n;
  }();
  return names;
}

SummaryStats summarize(const std::vector<MeasurementRecord>& records) {
  if (records.size() < 2) throw Error(ErrorCode::TooFewRecords, "statistics need at least two records");
  SummaryStats out;
  for (const auto& col : metric_table()) {
    std::vector<double> xs;
    for (const auto& r : records) {
      if (auto v = col.get(r)) xs.push_back(*v);
    }
    if (xs.size() < 2) continue;
    MetricStats s;
    s.n = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.min = *lo;
    s.max = *hi;
    if (s.mean > 0.0) s.cov = s.stddev / s.mean;
    out.metrics.emplace(col.name, s);
  }
  const auto leak = out.metrics.find("leak_rvtn_nA");
  const auto active = out.metrics.find("i_core_active_mA");
  if (leak != out.metrics.end() && active != out.metrics.end() && leak->second.cov && active->second.cov) {
    out.leak_cov_exceeds_active = *leak->second.cov > *active->second.cov;
  }
  return out;
}

// --- CSV -------------------------------------------------------------------------

std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string opt_g6(const std::optional<double>& v) { return v ? format_g6(*v) : std::string(); }

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string export_csv(const std::vector<MeasurementRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.chip_id);
    out += ',';
    out += to_string(r.variant);
    out += ',' + format_g6(r.vcore_mv);
    out += ',' + format_g6(r.vsram_mv);
    out += ',' + std::to_string(r.pll.mult_m);
    out += ',' + std::to_string(r.pll.div_n);
    out += ',';
    out += to_string(r.pll.clk_sel);
    out += ',' + format_g6(r.f_clk_mhz);
    out += ',' + opt_g6(r.i_core_active_ma);
    out += ',' + opt_g6(r.i_core_sleep_ma);
    out += ',' + opt_g6(r.i_sram_ma);
    for (const auto& l : r.leak_na) out += ',' + opt_g6(l);
    out += ',' + opt_g6(r.fmax_est_mhz);
    out += r.result_ok ? ",1" : ",0";
    out += ',' + std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

std::vector<MeasurementRecord> parse_csv(std::string_view text) {
  std::vector<MeasurementRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fail = [&](const std::string& msg) -> void { throw Error(ErrorCode::ParseError, msg, line_no); };
    if (!header_seen) {
      if (line != kCsvHeader) fail("unexpected CSV header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 18) fail("expected 18 fields, got " + std::to_string(f.size()));

    auto num = [&](std::string_view s, const char* col) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) fail(std::string("bad number in ") + col);
      return v;
    };
    auto opt = [&](std::string_view s, const char* col) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return num(s, col);
    };
    auto uint = [&](std::string_view s, const char* col, std::uint64_t max) {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || v > max) fail(std::string("bad integer in ") + col);
      return v;
    };

    MeasurementRecord r;
    r.chip_id = static_cast<std::uint32_t>(uint(f[0], "chip_id", 0xFFFFFFFFu));
    const auto variant = parse_variant(f[1]);
    if (!variant) fail("bad variant");
    r.variant = *variant;
    r.sensors_absent = !has_sensors(r.variant);
    r.vcore_mv = num(f[2], "vcore_mV");
    r.vsram_mv = num(f[3], "vsram_mV");
    r.pll.mult_m = static_cast<std::uint8_t>(uint(f[4], "pll_m", 255));
    r.pll.div_n = static_cast<std::uint8_t>(uint(f[5], "pll_n", 255));
    if (f[6] == "PLL") {
      r.pll.clk_sel = ClockSelect::PLL;
    } else if (f[6] == "HCLK") {
      r.pll.clk_sel = ClockSelect::HCLK;
    } else {
      fail("bad clk_sel");
    }
    r.f_clk_mhz = num(f[7], "f_clk_MHz");
    r.i_core_active_ma = opt(f[8], "i_core_active_mA");
    r.i_core_sleep_ma = opt(f[9], "i_core_sleep_mA");
    r.i_sram_ma = opt(f[10], "i_sram_mA");
    for (std::size_t i = 0; i < 4; ++i) r.leak_na[i] = opt(f[11 + i], "leak");
    r.fmax_est_mhz = opt(f[15], "fmax_est_MHz");
    if (f[16] != "0" && f[16] != "1") fail("result_ok must be 0 or 1");
    r.result_ok = f[16] == "1";
    r.seed = uint(f[17], "seed", std::numeric_limits<std::uint64_t>::max());
    out.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "empty CSV", 1);
  return out;
}

// --- power budget --------------------------------------------------------------

BudgetReport budget_report(const std::vector<BudgetItem>& items) {
  require(!items.empty(), "budget needs at least one item");
  BudgetReport rep;
  for (const auto& it : items) {
    const double mw = it.milliwatts();
    rep.item_mw.push_back(mw);
    rep.total_mw += mw;
    (it.role == BudgetRole::Chip ? rep.chip_mw : rep.external_mw) += mw;
  }
  if (rep.total_mw > 0.0) rep.chip_to_total = rep.chip_mw / rep.total_mw;
  return rep;
}

std::vector<BudgetItem> parse_budget_items(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  const ConfigReader rd(text);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "budget must be a JSON object", 1);
  rd.check_keys(doc, {"items", "note"}, "");
  if (!doc.contains("items")) rd.fail("items", "missing");
  std::vector<BudgetItem> items;
  for (const auto& e : rd.array(doc.at("items"), "items")) {
    if (!e.is_object()) rd.fail("items", "expected objects");
    rd.check_keys(e, {"name", "volts", "milliamps", "role"}, "items");
    BudgetItem it;
    if (e.contains("name")) it.name = rd.string(e.at("name"), "name");
    if (!e.contains("volts")) rd.fail("volts", "missing");
    if (!e.contains("milliamps")) rd.fail("milliamps", "missing");
    it.volts = rd.number(e.at("volts"), "volts");
    it.milliamps = rd.number(e.at("milliamps"), "milliamps");
    if (it.volts < 0.0 || it.milliamps < 0.0) rd.fail("milliamps", "volts and milliamps must be non-negative");
    if (e.contains("role")) {
      const auto role = rd.string(e.at("role"), "role");
      if (role == "chip") {
        it.role = BudgetRole::Chip;
      } else if (role != "external") {
        rd.fail("role", "expected \"external\" or \"chip\"");
      }
    }
    items.push_back(std::move(it));
  }
  return items;
}

// --- manifest --------------------------------------------------------------------

std::string manifest_json(const SweepConfig& cfg, const SweepResult& result) {
  json j;
  j["tool"] = "varichar";
  j["version"] = std::string(kVersion);
  j["config"] = json::parse(config_to_json(cfg));
  j["records"] = result.records.size();
  j["failed"] = result.failed;
  j["trace_events"] = result.trace.size();
  json rails = json::object();
  for (Rail r : kAllRails) rails[std::string(to_string(r))] = index(r);
  j["rail_channels"] = rails;
  j["outputs"] = {"records.csv", "trace.jsonl"};
  return j.dump(2) + "\n";
}

void write_outputs(const std::filesystem::path& dir, const SweepConfig& cfg, const SweepResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("records.csv");
    f << export_csv(result.records);
  }
  {
    auto f = open("manifest.json");
    f << manifest_json(cfg, result);
  }
  {
    auto f = open("trace.jsonl");
    write_jsonl(f, result.trace);
  }
}

}  // namespace varichar
