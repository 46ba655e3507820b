// SPDX-License-Identifier: Apache-2.0
//
// Sweeps over voltage / PLL grids and chip populations, CSV persistence,
// population statistics and the board power budget.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varichar/chip.hpp"
#include "varichar/controller.hpp"
#include "varichar/record.hpp"
#include "varichar/trace.hpp"

namespace varichar {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::string_view kBuiltinProgram = "builtin:default";

struct SweepConfig {
  ChipVariant variant = ChipVariant::UCLA;
  std::uint32_t n_chips = 1;
  std::uint64_t seed = 0;
  std::vector<double> vcore_mv = {900.0};
  std::vector<double> vsram_mv = {900.0};
  std::vector<PllConfig> pll = {PllConfig{5, 1, ClockSelect::PLL}};
  std::vector<std::uint8_t> ro_indices = {0, 1, 2, 3, 4, 5, 6, 7};
  double gate_ms = 1.0;
  double kappa = 1.0;
  /// "builtin:default" or a path to an Intel-HEX image.
  std::string program = std::string(kBuiltinProgram);
  /// Overrides the program descriptor's words as the pass criterion.
  std::optional<std::vector<std::uint32_t>> expected_words;
  ModelConfig model;
  std::vector<MasterStep> fault_skip_steps;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned jobs = 1;

  std::size_t grid_size() const noexcept { return vcore_mv.size() * vsram_mv.size() * pll.size(); }

  /// Throws ValidationError naming the offending key.
  void validate() const;
};

/// Parses the JSON run configuration. Omitted keys take defaults; unknown
/// keys are rejected. Throws ParseError (with line) or ValidationError.
SweepConfig parse_config(std::string_view text);

/// JSON echo of a configuration (used in the run manifest).
std::string config_to_json(const SweepConfig& cfg);

/// Resolves `cfg.program`. Relative HEX paths are taken from `base_dir`.
TestProgram resolve_program(const SweepConfig& cfg, const std::filesystem::path& base_dir = {});

struct GridPoint {
  double vcore_mv;
  double vsram_mv;
  PllConfig pll;
};

/// Grid point `index` in vcore-major, then vsram, then pll order.
GridPoint grid_point(const SweepConfig& cfg, std::size_t index);

struct SweepResult {
  std::vector<MeasurementRecord> records;  // ordered by (chip_id, grid index)
  Trace trace;
  std::size_t failed = 0;
};

/// Runs every grid point on every chip. Chips run concurrently on `cfg.jobs`
/// threads; results are merged in (chip_id, grid index) order so the output
/// does not depend on the thread count. Per-run failures are recorded, not
/// thrown.
SweepResult run_sweep(const SweepConfig& cfg, const TestProgram& program, bool keep_trace = true);
SweepResult run_sweep(const SweepConfig& cfg);

// --- statistics ------------------------------------------------------------------

struct MetricStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // n - 1 denominator
  double min = 0.0;
  double max = 0.0;
  std::optional<double> cov;  // only for mean > 0
};

struct SummaryStats {
  /// Keyed by CSV column name; metrics with fewer than two values are absent.
  std::map<std::string, MetricStats> metrics;
  /// cov(leak_rvtn_nA) > cov(i_core_active_mA); null if either is undefined.
  std::optional<bool> leak_cov_exceeds_active;
};

/// Throws TooFewRecords for fewer than two records.
SummaryStats summarize(const std::vector<MeasurementRecord>& records);

/// Metric columns summarized, in CSV order.
const std::vector<std::string>& metric_columns();

// --- CSV -------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "chip_id,variant,vcore_mV,vsram_mV,pll_m,pll_n,clk_sel,f_clk_MHz,i_core_active_mA,i_core_sleep_mA,i_sram_mA,"
    "leak_rvtp_nA,leak_rvtn_nA,leak_hvtp_nA,leak_hvtn_nA,fmax_est_MHz,result_ok,seed";

/// Header plus one line per record; numbers with 6 significant digits, null
/// fields empty, LF line endings.
std::string export_csv(const std::vector<MeasurementRecord>& records);

/// Inverse of export_csv for the CSV columns. Throws ParseError with line.
std::vector<MeasurementRecord> parse_csv(std::string_view text);

/// Numeric formatting used by the CSV (printf %.6g).
std::string format_g6(double v);

// --- power budget --------------------------------------------------------------

enum class BudgetRole : std::uint8_t { External, Chip };

struct BudgetItem {
  std::string name;
  double volts = 0.0;
  double milliamps = 0.0;
  BudgetRole role = BudgetRole::External;

  double milliwatts() const noexcept { return volts * milliamps; }
};

struct BudgetReport {
  std::vector<double> item_mw;
  double total_mw = 0.0;     // every item
  double chip_mw = 0.0;      // items with role Chip
  double external_mw = 0.0;  // items with role External
  /// chip_mw / total_mw; null when the total is zero.
  std::optional<double> chip_to_total;
};

/// Throws PreconditionViolation for an empty list.
BudgetReport budget_report(const std::vector<BudgetItem>& items);

/// {"items": [{"name", "volts", "milliamps", "role": "external"|"chip"}]}
std::vector<BudgetItem> parse_budget_items(std::string_view text);

// --- manifest --------------------------------------------------------------------

std::string manifest_json(const SweepConfig& cfg, const SweepResult& result);

/// Writes records.csv, manifest.json and trace.jsonl into `dir`.
void write_outputs(const std::filesystem::path& dir, const SweepConfig& cfg, const SweepResult& result);

}  // namespace varichar
