#include <string>

#include <CLI11.hpp>

#include "gridscc/cli_commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"DC microgrid batch simulator: safety-filtered QP control vs droop"};
  app.require_subcommand(1);

  gridscc::RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Simulate one scenario");
  run->add_option("scenario", run_opt.scenario_path, "Scenario JSON file")
      ->required();
  run->add_option("--controller", run_opt.controller, "Controller override")
      ->check(CLI::IsMember({"scc", "droop", "fl"}));
  run->add_option("--t-final", run_opt.t_final, "Simulated duration override [s]");
  run->add_option("--dt-plant", run_opt.dt_plant, "Integrator step override [s]");
  run->add_option("--dt-control", run_opt.dt_control, "Control period override [s]");
  run->add_option("--out", run_opt.out_dir, "Output directory");
  run->add_option("--seed", run_opt.seed, "Seed recorded in summary.json");
  run->add_flag("--raw-trace", run_opt.raw_trace, "Record every integrator step");

  gridscc::TableOptions table_opt;
  auto* table = app.add_subcommand(
      "table2", "Steady-state comparison of both controllers");
  table->add_option("scenario", table_opt.scenario_path, "Scenario JSON file")
      ->required();
  table->add_option("--t-final", table_opt.t_final, "Simulated duration override [s]");
  table->add_option("--out", table_opt.out_dir, "Output directory");

  gridscc::SweepOptions sweep_opt;
  auto* sweep = app.add_subcommand(
      "sweep", "Random initial-state sweep under both controllers");
  sweep->add_option("scenario", sweep_opt.scenario_path, "Scenario JSON file")
      ->required();
  sweep->add_option("--samples", sweep_opt.samples, "Number of initial states")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sweep_opt.seed, "Draw seed");
  sweep->add_option("--t-final", sweep_opt.t_final, "Simulated duration override [s]");
  sweep->add_option("--workers", sweep_opt.workers,
                    "Worker threads (default: GRIDSCC_WORKERS or host count)");
  sweep->add_option("--out", sweep_opt.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Collapse the library's parse-error codes onto the config exit code;
    // --help still exits 0.
    const int code = app.exit(e);
    return code == 0 ? 0 : gridscc::exit_code::config;
  }

  if (run->parsed()) return gridscc::cmd_run(run_opt);
  if (table->parsed()) return gridscc::cmd_table2(table_opt);
  return gridscc::cmd_sweep(sweep_opt);
}
