#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "gridscc/certificates.hpp"
#include "gridscc/equilibrium.hpp"
#include "gridscc/linearization.hpp"
#include "gridscc/qpsolve.hpp"

namespace gridscc {

/// Droop baseline: each converter tracks a voltage reference that sags
/// linearly with its line current and is clamped to the safety box.
struct DroopConfig {
  double v_nominal = 52.0;  // no-load reference [V]
  Vector droop_gain;        // reference sag per ampere [V/A]; empty = 0.1 each
  double k_p = 2000.0;      // proportional voltage-loop gain [1/s]
  std::optional<std::pair<double, double>> u_bounds;  // injected current box [A]
};

/// Safety-critical controller configuration. gamma follows the piecewise
/// rule gamma(p) = ((m+1)/m) p for p >= 0 and p otherwise, so the slack
/// penalty m fixes the relaxation scaling.
struct SccConfig {
  double m = 100.0;    // slack penalty; the stability argument pairs the
                       // gamma slope (m+1)/m with this same m
  double alpha = 0.5;  // decay coefficient, must not exceed lambda_min(q)
  double beta = 1.0;   // barrier growth bound
  Matrix q;            // Lyapunov right-hand side; empty selects identity
  PoleSpec poles;      // empty chain selects defaults for the grid size
  std::optional<std::pair<double, double>> u_bounds;  // admissible input box [A]
  // Used while the bus sits in the saturated load branch. The default aims
  // near the bus target rather than at the box ceiling: parking the caps high
  // while the bus is collapsed stores energy that then slams the tank.
  DroopConfig fallback{26.0, Vector(), 2000.0, {}};
};

struct ControlStepLog {
  ControlInput u;
  Vector delta;  // stability-row slack; zero when the relaxation is unused
  std::vector<int> active_constraints;  // row indices of the step program
  double v_eta = std::numeric_limits<double>::quiet_NaN();
  double min_b = 0.0;  // smallest barrier box polynomial over converters
  QpStatus qp_status = QpStatus::ok;
  double wall_time = 0.0;  // [s]
  bool fallback = false;   // saturated-branch droop filter used this step
};

/// Common controller interface consumed by the simulator. Steps are pure
/// functions of the state over immutable configuration, so one instance may
/// serve concurrent simulations.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::pair<ControlInput, ControlStepLog> step(const GridState& s) const = 0;
};

class DroopController final : public Controller {
 public:
  DroopController(GridParams params, DroopConfig config);

  std::pair<ControlInput, ControlStepLog> step(const GridState& s) const override;
  const DroopConfig& config() const { return config_; }

 private:
  GridParams params_;
  DroopConfig config_;
};

/// Safety-critical controller: feedback linearization shaped by a quadratic
/// program that relaxes the stability row through a penalized slack and
/// keeps the barrier rows hard.
class SccController final : public Controller {
 public:
  /// control_period is the zero-order-hold interval of the loop that will
  /// apply the returned inputs; the barrier filter uses it to bound the
  /// per-hold voltage travel so that safety survives sampling.
  SccController(GridParams params, Equilibrium eq, SccConfig config,
                double control_period);

  /// Throws SafetyViolation when some v_j is outside the open safety box and
  /// NumericalError when the step program cannot be solved (which the
  /// feasibility argument rules out; treated as a bug, reported with state).
  std::pair<ControlInput, ControlStepLog> step(const GridState& s) const override;

  const ClfCertificate& clf() const { return clf_; }
  const CbfCertificate& cbf() const { return cbf_; }
  const BrunovskyPair& brunovsky() const { return brunovsky_; }
  const Equilibrium& equilibrium() const { return eq_; }
  const SccConfig& config() const { return config_; }

 private:
  void append_barrier_rows(std::vector<ConstraintRow>& rows, const GridState& s,
                           int delta_width) const;

  GridParams params_;
  Equilibrium eq_;
  SccConfig config_;
  double dt_;
  BrunovskyPair brunovsky_;
  ClfCertificate clf_;
  CbfCertificate cbf_;
  DroopController fallback_;
};

/// Feedback linearization alone (no step program): diagnostic controller for
/// separating the linearizing core from the safety filter.
class FlController final : public Controller {
 public:
  FlController(GridParams params, Equilibrium eq, SccConfig config);

  std::pair<ControlInput, ControlStepLog> step(const GridState& s) const override;

 private:
  GridParams params_;
  Equilibrium eq_;
  BrunovskyPair brunovsky_;
  ClfCertificate clf_;  // diagnostics only
  CbfCertificate cbf_;
  DroopController fallback_;
};

}  // namespace gridscc
