#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gridscc {

/// Exit codes shared by all subcommands: 0 success, 1 configuration error,
/// 2 safety violation, 3 numerical failure.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 1;
inline constexpr int safety = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

struct RunOptions {
  std::filesystem::path scenario_path;
  std::filesystem::path out_dir = ".";
  std::string controller;  // empty keeps the scenario's choice
  std::optional<double> t_final;
  std::optional<double> dt_plant;
  std::optional<double> dt_control;
  bool raw_trace = false;  // record every plant step instead of every control step
  std::optional<std::uint64_t> seed;  // recorded in summary.json for provenance
};

/// Simulates one scenario and writes trace.csv plus summary.json to out_dir.
int cmd_run(const RunOptions& opt);

struct TableOptions {
  std::filesystem::path scenario_path;
  std::filesystem::path out_dir = ".";
  std::optional<double> t_final;
};

/// Runs the scenario under both controllers and writes the side-by-side
/// steady-state table as table2.csv and table2.txt.
int cmd_table2(const TableOptions& opt);

struct SweepOptions {
  std::filesystem::path scenario_path;
  std::filesystem::path out_dir = ".";
  int samples = 32;
  std::uint64_t seed = 1;
  std::optional<double> t_final;
  int workers = 0;  // 0 reads GRIDSCC_WORKERS, then falls back to the host count
};

/// Sweeps random interior initial states under both controllers and writes
/// per-run outcomes to sweep.csv.
int cmd_sweep(const SweepOptions& opt);

}  // namespace gridscc
