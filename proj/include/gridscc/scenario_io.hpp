#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridscc/simulation.hpp"

namespace gridscc {

/// Configuration-level failure (unreadable file, schema violation, bad
/// value); maps to the config-error exit code at the command layer.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* to_string(ControllerKind kind);
ControllerKind parse_controller(const std::string& name);

/// Parses a scenario from JSON text. Keys carry their units
/// (cap_mF, res_mOhm, ind_mH, p_load_W, ...); unknown keys are rejected
/// with a key-path diagnostic. Requires t_final_s > 0.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Writes content to path via a temporary file plus rename, so failures
/// never leave a partial file behind.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Header: t,v1..vn,it1..itn,vL,u1..un,V_eta,min_b,flags. Floats carry nine
/// significant digits with '.' as the decimal separator.
std::string trace_csv(const Trace& trace, int n);

std::string summary_json(const Scenario& sc, const Trace& trace,
                         std::optional<std::uint64_t> seed);

/// Side-by-side steady-state table: three rows per converter (terminal
/// voltage, injected current, line current) plus the bus voltage, with
/// equilibrium, initial, and per-controller window-averaged columns.
struct SummaryTable {
  struct Row {
    std::string state;
    std::string unit;
    double equilibrium;
    bool has_initial;
    double initial;
    double scc;
    double droop;
  };
  std::vector<Row> rows;
};

SummaryTable make_summary_table(const Scenario& sc, const Equilibrium& eq,
                                const Trace& scc_trace, const Trace& droop_trace);
std::string table_csv(const SummaryTable& table);
std::string table_text(const SummaryTable& table);

struct SweepOutcome {
  int run = 0;
  ControllerKind controller = ControllerKind::scc;
  TraceSummary summary;
};

/// Runs `samples` random interior initial states under both the
/// safety-critical and droop controllers. Initial states are drawn up front
/// from the seed, so the outcome set does not depend on the worker count.
std::vector<SweepOutcome> run_sweep(const Scenario& base, int samples,
                                    std::uint64_t seed, int workers);

std::string sweep_csv(const std::vector<SweepOutcome>& outcomes);

}  // namespace gridscc
