#include "gridscc/cli_commands.hpp"

#include <cstdlib>
#include <iostream>

#include "gridscc/equilibrium.hpp"
#include "gridscc/errors.hpp"
#include "gridscc/scenario_io.hpp"

namespace gridscc {

namespace {

// A run that completes reports success even when the summary records box
// exits (the droop baseline is expected to saturate); the safety code is for
// runs the safety controller refused to continue.
int outcome_code(const TraceSummary& s) {
  if (s.aborted) {
    return s.safety_violated ? exit_code::safety : exit_code::numerical;
  }
  return exit_code::ok;
}

void apply_overrides(Scenario& sc, const RunOptions& opt) {
  if (!opt.controller.empty()) sc.controller = parse_controller(opt.controller);
  if (opt.t_final) sc.t_final = *opt.t_final;
  if (opt.dt_plant) sc.dt_plant = *opt.dt_plant;
  if (opt.dt_control) sc.dt_control = *opt.dt_control;
  if (opt.raw_trace) sc.record_every = 1;
  if (!(sc.t_final > 0.0)) throw ScenarioError("scenario: t_final_s: must be positive");
  sc.validate();
}

int report_config_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return exit_code::config;
}

int report_numerical_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return exit_code::numerical;
}

}  // namespace

int cmd_run(const RunOptions& opt) {
  Scenario sc;
  try {
    sc = load_scenario(opt.scenario_path);
    apply_overrides(sc, opt);
  } catch (const ScenarioError& e) {
    return report_config_error(e);
  } catch (const std::invalid_argument& e) {
    return report_config_error(e);
  }

  Trace trace;
  try {
    trace = run(sc);
  } catch (const std::invalid_argument& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    return report_numerical_error(e);
  }

  try {
    std::filesystem::create_directories(opt.out_dir);
    write_text_atomic(opt.out_dir / "trace.csv", trace_csv(trace, sc.params.n()));
    write_text_atomic(opt.out_dir / "summary.json", summary_json(sc, trace, opt.seed));
  } catch (const std::exception& e) {
    return report_config_error(e);
  }

  const TraceSummary& s = trace.summary;
  std::cout << "controller=" << to_string(sc.controller)
            << " converged=" << (s.converged ? "yes" : "no")
            << " v_bus_avg=" << s.v_bus_avg << " min_b=" << s.min_b;
  if (s.aborted) std::cout << " aborted=\"" << s.abort_reason << "\"";
  std::cout << "\n";
  return outcome_code(s);
}

int cmd_table2(const TableOptions& opt) {
  Scenario base;
  try {
    base = load_scenario(opt.scenario_path);
    if (opt.t_final) base.t_final = *opt.t_final;
    if (!(base.t_final > 0.0)) {
      throw ScenarioError("scenario: t_final_s: must be positive");
    }
    base.validate();
  } catch (const ScenarioError& e) {
    return report_config_error(e);
  } catch (const std::invalid_argument& e) {
    return report_config_error(e);
  }

  try {
    Scenario scc_sc = base;
    scc_sc.controller = ControllerKind::scc;
    Scenario droop_sc = base;
    droop_sc.controller = ControllerKind::droop;

    const Trace scc_trace = run(scc_sc);
    const Trace droop_trace = run(droop_sc);
    const Equilibrium eq =
        closed_form_equilibrium(base.v_bus_target, base.params);
    const SummaryTable table = make_summary_table(base, eq, scc_trace, droop_trace);

    std::filesystem::create_directories(opt.out_dir);
    write_text_atomic(opt.out_dir / "table2.csv", table_csv(table));
    const std::string text = table_text(table);
    write_text_atomic(opt.out_dir / "table2.txt", text);
    std::cout << text;

    return std::max(outcome_code(scc_trace.summary),
                    outcome_code(droop_trace.summary));
  } catch (const std::invalid_argument& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    return report_numerical_error(e);
  }
}

int cmd_sweep(const SweepOptions& opt) {
  Scenario base;
  try {
    base = load_scenario(opt.scenario_path);
    if (opt.t_final) base.t_final = *opt.t_final;
    if (!(base.t_final > 0.0)) {
      throw ScenarioError("scenario: t_final_s: must be positive");
    }
    base.validate();
  } catch (const ScenarioError& e) {
    return report_config_error(e);
  } catch (const std::invalid_argument& e) {
    return report_config_error(e);
  }

  int workers = opt.workers;
  if (workers <= 0) {
    if (const char* env = std::getenv("GRIDSCC_WORKERS")) {
      workers = std::atoi(env);
    }
  }

  try {
    const std::vector<SweepOutcome> outcomes =
        run_sweep(base, opt.samples, opt.seed, workers);
    std::filesystem::create_directories(opt.out_dir);
    write_text_atomic(opt.out_dir / "sweep.csv", sweep_csv(outcomes));

    int ok_scc = 0, ok_droop = 0;
    for (const auto& o : outcomes) {
      if (o.summary.converged && !o.summary.safety_violated) {
        (o.controller == ControllerKind::scc ? ok_scc : ok_droop)++;
      }
    }
    std::cout << "samples=" << opt.samples << " seed=" << opt.seed
              << " scc_ok=" << ok_scc << " droop_ok=" << ok_droop << "\n";
    return exit_code::ok;
  } catch (const ScenarioError& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    return report_numerical_error(e);
  }
}

}  // namespace gridscc
