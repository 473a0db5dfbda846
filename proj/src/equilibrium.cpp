#include "gridscc/equilibrium.hpp"

#include <stdexcept>

namespace gridscc {

namespace {

double load_current(double v_star, const GridParams& p) {
  if (!(v_star > p.v_cpl_min)) {
    throw std::invalid_argument(
        "equilibrium: bus target must exceed the load branch point");
  }
  return v_star / p.res_load + p.p_load / v_star;
}

Equilibrium assemble(double v_star, const Vector& currents, const GridParams& p) {
  const int n = p.n();
  GridState s(Vector(2 * n + 1));
  for (int j = 0; j < n; ++j) {
    s.v(j) = v_star + p.res[j] * currents[j];
    s.line_current(j) = currents[j];
  }
  s.bus_voltage() = v_star;
  return Equilibrium{std::move(s), currents, v_star};
}

}  // namespace

Equilibrium closed_form_equilibrium(double v_bus_target, const GridParams& p) {
  p.validate();
  const int n = p.n();
  const double i_load = load_current(v_bus_target, p);
  const double r_par = 1.0 / p.res.cwiseInverse().sum();
  const double v_common = r_par * i_load + v_bus_target;

  Vector currents(n);
  GridState s(Vector(2 * n + 1));
  for (int j = 0; j < n; ++j) {
    currents[j] = r_par * i_load / p.res[j];
    s.v(j) = v_common;
    s.line_current(j) = currents[j];
  }
  s.bus_voltage() = v_bus_target;

  Equilibrium eq{std::move(s), currents, v_bus_target};
  const Vector residual = vector_field(eq.x_star, eq.u_star, p);
  if (residual.lpNorm<Eigen::Infinity>() > 1e-9) {
    throw std::logic_error("equilibrium: steady-state residual out of bounds");
  }
  return eq;
}

Equilibrium oracle_equilibrium(double v_bus_target, const GridParams& p) {
  p.validate();
  const int n = p.n();
  const double i_load = load_current(v_bus_target, p);

  // Stationarity: 2 R_j i_j + lambda = 0 for every line, plus the current
  // balance. Unknowns (i_1 .. i_n, lambda).
  Matrix kkt = Matrix::Zero(n + 1, n + 1);
  Vector rhs = Vector::Zero(n + 1);
  for (int j = 0; j < n; ++j) {
    kkt(j, j) = 2.0 * p.res[j];
    kkt(j, n) = 1.0;
    kkt(n, j) = 1.0;
  }
  rhs[n] = i_load;

  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) {
    throw std::logic_error("equilibrium oracle: singular KKT system");
  }
  const Vector sol = lu.solve(rhs);
  return assemble(v_bus_target, sol.head(n), p);
}

}  // namespace gridscc
