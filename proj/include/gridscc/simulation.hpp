#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gridscc/controllers.hpp"

namespace gridscc {

enum class ControllerKind { scc, droop, fl };

/// Complete description of one closed-loop experiment.
struct Scenario {
  GridParams params;
  double v_bus_target = 24.0;  // [V]
  GridState x0;
  ControllerKind controller = ControllerKind::scc;
  double dt_plant = 1e-6;    // plant integration step [s]
  double dt_control = 1e-5;  // controller period, integer multiple of dt_plant
  double t_final = 0.5;      // [s]
  int record_every = 0;      // plant steps per trace record; 0 = control period
  SccConfig scc;
  DroopConfig droop;
  double converge_tol = 0.05;  // bus convergence band [V]
  std::string name;

  /// Throws std::invalid_argument on rate mismatch, bad horizon, wrong x0
  /// size, or (for the safety-critical controller) an initial converter
  /// voltage outside the open safety box.
  void validate() const;
};

namespace trace_flags {
constexpr unsigned cpl_saturated = 1u;  // bus at or below the load branch point
constexpr unsigned fallback = 2u;       // controller used its fallback this hold
constexpr unsigned safety = 4u;         // some v_j has left its box
constexpr unsigned aborted = 8u;        // run terminated early
}  // namespace trace_flags

struct TraceRecord {
  double t = 0.0;
  Vector x;
  ControlInput u;
  double v_eta = std::numeric_limits<double>::quiet_NaN();
  double min_b = 0.0;
  Vector zee;
  unsigned flags = 0;
};

/// Steady-state metrics are averaged over a trailing 10 microsecond window.
struct TraceSummary {
  bool converged = false;
  double settle_time = std::numeric_limits<double>::quiet_NaN();  // [s]
  double v_bus_avg = std::numeric_limits<double>::quiet_NaN();    // [V]
  double max_bus_dev_last_window = std::numeric_limits<double>::quiet_NaN();
  bool safety_violated = false;
  double min_b = std::numeric_limits<double>::infinity();
  bool aborted = false;
  std::string abort_reason;
  Vector x_avg;  // window-averaged state
  Vector u_avg;  // window-averaged input
  double wall_time = 0.0;  // [s]
};

struct Trace {
  std::vector<TraceRecord> records;
  TraceSummary summary;
};

/// One explicit fourth-order step of the closed vector field with the input
/// held constant.
GridState integrate_step(const GridState& s, const ControlInput& u, double dt,
                         const GridParams& p);

std::unique_ptr<Controller> make_controller(const Scenario& sc);

/// Runs the closed loop: the controller is sampled every dt_control with a
/// zero-order hold while the plant advances every dt_plant. A controller
/// error or non-finite state terminates the trace early with flags set.
Trace run(const Scenario& sc);

}  // namespace gridscc
