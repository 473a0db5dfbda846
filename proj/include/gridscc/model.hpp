#pragma once

#include <Eigen/Dense>

namespace gridscc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-converter injected current command, one entry per converter [A].
using ControlInput = Eigen::VectorXd;

/// Physical parameters of an n-converter single-bus DC microgrid with a
/// constant-power load. Converter j feeds the bus through an RL line
/// (res[j], ind[j]) and holds an output capacitor cap[j].
struct GridParams {
  Vector cap;  // converter output capacitances C_j [F]
  Vector res;  // line resistances R_j [ohm]
  Vector ind;  // line inductances L_j [H]

  double cap_load = 0.0;  // bus capacitance C_L [F]
  double res_load = 0.0;  // resistive load R_L [ohm]
  double p_load = 0.0;    // constant-power load demand P_L [W]

  // Below v_cpl_min the power load leaves its constant-power branch and its
  // current ramps linearly to zero at zero volts, like a converter front end
  // browning out. This keeps the load current bounded, continuous, and
  // consuming (never sourcing) at low or negative bus voltage.
  double v_cpl_min = 5.0;  // [V]

  Vector v_safe_lo;  // per-converter voltage safety floor [V]
  Vector v_safe_hi;  // per-converter voltage safety ceiling [V]

  int n() const { return static_cast<int>(cap.size()); }

  /// Peak current of the power load, drawn exactly at the branch point;
  /// equals p_load / v_cpl_min so the current is continuous there.
  double i_cpl_max() const { return p_load / v_cpl_min; }

  /// Throws std::invalid_argument when sizes disagree or values are
  /// non-physical (non-positive C/L/R, empty box, p_load < 0, ...).
  void validate() const;
};

/// Plant state x = (v_1, i_t1, ..., v_n, i_tn, v_L): converter voltages
/// interleaved with line currents, bus voltage last. Size 2n + 1.
struct GridState {
  Vector x;

  GridState() = default;
  explicit GridState(Vector state) : x(std::move(state)) {}

  int n() const { return static_cast<int>((x.size() - 1) / 2); }

  double v(int j) const { return x[2 * j]; }             // converter voltage [V]
  double& v(int j) { return x[2 * j]; }
  double line_current(int j) const { return x[2 * j + 1]; }  // [A]
  double& line_current(int j) { return x[2 * j + 1]; }
  double bus_voltage() const { return x[x.size() - 1]; }     // [V]
  double& bus_voltage() { return x[x.size() - 1]; }
};

/// Load current drawn from the bus at voltage v_load: constant power
/// p_load / v_load above the branch point, ramping from i_cpl_max down to
/// zero at zero volts below it, and zero for non-positive voltage.
double cpl_current(double v_load, const GridParams& p);

/// Drift field f(x): plant dynamics with zero injected converter current.
Vector drift(const GridState& s, const GridParams& p);

/// Input matrix g: column j injects u_j into converter j's capacitor node.
/// Constant in the state, so it is a function of the parameters alone.
Matrix ctrl_matrix(const GridParams& p);

/// Full vector field f(x) + g u.
Vector vector_field(const GridState& s, const ControlInput& u, const GridParams& p);

/// Jacobian of the drift field. Valid away from the load branch points; at
/// v_load == v_cpl_min (or 0) exactly, the lower branch is used.
Matrix drift_jacobian(const GridState& s, const GridParams& p);

/// Total energy stored in capacitors and line inductors [J].
double stored_energy(const GridState& s, const GridParams& p);

}  // namespace gridscc
