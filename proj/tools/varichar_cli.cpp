// SPDX-License-Identifier: Apache-2.0
//
// varichar single | sweep | report | budget
//
// Exit codes: 0 success, 1 validation / input error, 2 every run point failed.
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "varichar/orchestrator.hpp"
#include "varichar/rng.hpp"

namespace fs = std::filesystem;
using namespace varichar;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitAllFailed = 2;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SweepConfig load_config(const fs::path& path) {
  SweepConfig cfg = parse_config(read_file(path));
  if (const char* env = std::getenv("VARICHAR_SEED"); env && *env) {
    std::uint64_t seed = 0;
    const std::string_view s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw Error(ErrorCode::ValidationError, "VARICHAR_SEED must be an unsigned integer");
    }
    cfg.seed = seed;
  }
  return cfg;
}

void print_summary(const SummaryStats& s) {
  std::printf("%-18s %6s %12s %12s %12s %12s %10s\n", "metric", "n", "mean", "stddev", "min", "max", "cov");
  for (const auto& name : metric_columns()) {
    const auto it = s.metrics.find(name);
    if (it == s.metrics.end()) continue;
    const auto& m = it->second;
    std::printf("%-18s %6zu %12.6g %12.6g %12.6g %12.6g %10s\n", name.c_str(), m.n, m.mean, m.stddev, m.min, m.max,
                m.cov ? format_g6(*m.cov).c_str() : "-");
  }
  if (s.leak_cov_exceeds_active) {
    std::printf("cov(leak_rvtn_nA) > cov(i_core_active_mA): %s\n", *s.leak_cov_exceeds_active ? "yes" : "no");
  }
}

int cmd_single(const fs::path& config, std::optional<int> skip, const std::optional<fs::path>& out) {
  SweepConfig cfg = load_config(config);
  // one chip, first grid point
  cfg.n_chips = 1;
  cfg.vcore_mv.resize(1);
  cfg.vsram_mv.resize(1);
  cfg.pll.resize(1);
  if (skip) {
    if (*skip < 1 || *skip > 12) throw Error(ErrorCode::ValidationError, "--fault-skip-step must name a master step");
    cfg.fault_skip_steps.push_back(static_cast<MasterStep>(*skip));
    cfg.validate();
  }
  const TestProgram program = resolve_program(cfg, config.parent_path());

  Board board(ChipInstance(cfg.variant, derive_seed(cfg.seed, 0), cfg.model));
  RunSettings s;
  s.vcore_mv = cfg.vcore_mv[0];
  s.vsram_mv = cfg.vsram_mv[0];
  s.pll = cfg.pll[0];
  s.plan.ro_indices = cfg.ro_indices;
  s.plan.gate.gate_ms = cfg.gate_ms;
  s.plan.kappa = cfg.kappa;
  s.skip_steps = cfg.fault_skip_steps;
  Trace trace;
  RunRecord r = master_run(board, program, s, &trace);
  power_down_board(board, s, &trace);

  for (const auto& [step, t] : r.step_times) {
    std::printf("step %2d %-12s t=%llu ns\n", static_cast<int>(step), std::string(to_string(step)).c_str(),
                static_cast<unsigned long long>(t));
  }
  if (r.error) std::printf("error: %s\n", r.error_message.c_str());
  std::printf("result_ok=%d\n", r.result_ok ? 1 : 0);

  SweepResult res;
  r.measurement.chip_id = 0;
  r.measurement.seed = cfg.seed;
  r.measurement.result_ok = r.result_ok;
  res.records.push_back(r.measurement);
  res.trace = std::move(trace);
  res.failed = r.result_ok ? 0 : 1;
  std::fputs(export_csv(res.records).c_str(), stdout);
  if (out) write_outputs(*out, cfg, res);
  return r.result_ok ? kExitOk : kExitAllFailed;
}

int cmd_sweep(const fs::path& config, const fs::path& out, std::optional<unsigned> jobs) {
  SweepConfig cfg = load_config(config);
  if (jobs) cfg.jobs = *jobs;
  const TestProgram program = resolve_program(cfg, config.parent_path());
  const SweepResult res = run_sweep(cfg, program);
  write_outputs(out, cfg, res);
  std::printf("%zu records, %zu failed -> %s\n", res.records.size(), res.failed, out.string().c_str());
  if (res.records.size() >= 2) print_summary(summarize(res.records));
  return !res.records.empty() && res.failed == res.records.size() ? kExitAllFailed : kExitOk;
}

int cmd_report(const fs::path& in) {
  const auto records = parse_csv(read_file(in));
  print_summary(summarize(records));
  return kExitOk;
}

int cmd_budget(const fs::path& items_path) {
  const auto items = parse_budget_items(read_file(items_path));
  const auto rep = budget_report(items);
  std::printf("%-28s %8s %10s %12s %9s\n", "item", "V", "mA", "mW", "role");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    std::printf("%-28s %8.6g %10.6g %12.6g %9s\n", it.name.c_str(), it.volts, it.milliamps, rep.item_mw[i],
                it.role == BudgetRole::Chip ? "chip" : "external");
  }
  std::printf("total        %.6g mW (%.6g W)\n", rep.total_mw, rep.total_mw / 1000.0);
  std::printf("chip         %.6g mW\n", rep.chip_mw);
  std::printf("external     %.6g mW\n", rep.external_mw);
  if (rep.chip_to_total) std::printf("chip / total %.4f\n", *rep.chip_to_total);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characterization bench simulator for variability-aware test chips"};
  app.require_subcommand(1);

  fs::path single_cfg;
  std::optional<int> skip_step;
  std::optional<fs::path> single_out;
  auto* single = app.add_subcommand("single", "Run the closed-loop procedure once (chip 0, first grid point)");
  single->add_option("--config", single_cfg, "JSON run configuration")->required()->check(CLI::ExistingFile);
  single->add_option("--fault-skip-step", skip_step, "Omit one master step (fault injection)");
  single->add_option("--out", single_out, "Also write records.csv, manifest.json, trace.jsonl here");

  fs::path sweep_cfg;
  fs::path sweep_out;
  std::optional<unsigned> jobs;
  auto* sweep = app.add_subcommand("sweep", "Sweep every chip over the configured grid");
  sweep->add_option("--config", sweep_cfg, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Worker threads (0 = all cores); output does not depend on it");

  fs::path report_in;
  auto* report = app.add_subcommand("report", "Summary statistics of a records.csv");
  report->add_option("--in", report_in, "records.csv")->required()->check(CLI::ExistingFile);

  fs::path budget_items;
  auto* budget = app.add_subcommand("budget", "Board power budget");
  budget->add_option("--items", budget_items, "JSON item list")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*single) return cmd_single(single_cfg, skip_step, single_out);
    if (*sweep) return cmd_sweep(sweep_cfg, sweep_out, jobs);
    if (*report) return cmd_report(report_in);
    if (*budget) return cmd_budget(budget_items);
  } catch (const Error& e) {
    if (e.line()) {
      std::fprintf(stderr, "error (line %zu): %s\n", *e.line(), e.what());
    } else {
      std::fprintf(stderr, "error: %s\n", e.what());
    }
    return kExitInvalid;
  }
  return kExitInvalid;
}
