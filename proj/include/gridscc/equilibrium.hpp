#pragma once

#include "gridscc/model.hpp"

namespace gridscc {

/// Steady state of the grid at a prescribed bus voltage. The load current is
/// shared across converters in inverse proportion to the line resistances,
/// which is the split that minimizes total line loss among all splits that
/// carry the load.
struct Equilibrium {
  GridState x_star;     // steady plant state
  ControlInput u_star;  // steady injected currents (equal to the line currents)
  double v_bus_target;  // prescribed bus voltage [V]
};

/// Closed-form equilibrium: total load current I = v*/R_L + p_load/v*,
/// line currents i_j = (R_par / R_j) I with R_par the parallel line
/// resistance, converter voltages all equal to R_par I + v*.
/// Throws std::invalid_argument when v_bus_target <= v_cpl_min (the load
/// would sit in its saturated branch) or is non-positive.
Equilibrium closed_form_equilibrium(double v_bus_target, const GridParams& p);

/// Independent construction of the same point: solves the KKT system of
///   minimize sum_j R_j i_j^2  subject to  sum_j i_j = I
/// as one dense linear system, then assembles voltages from the per-line
/// steady-state relation v_j = v* + R_j i_j.
Equilibrium oracle_equilibrium(double v_bus_target, const GridParams& p);

}  // namespace gridscc
