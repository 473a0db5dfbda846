#include "gridscc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gridscc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("GridParams: " + what);
}

}  // namespace

void GridParams::validate() const {
  const int nn = n();
  require(nn >= 1, "need at least one converter");
  require(res.size() == nn && ind.size() == nn, "cap/res/ind length mismatch");
  require(v_safe_lo.size() == nn && v_safe_hi.size() == nn,
          "safety box length mismatch");
  require((cap.array() > 0.0).all() && cap.allFinite(), "cap must be positive");
  require((res.array() > 0.0).all() && res.allFinite(), "res must be positive");
  require((ind.array() > 0.0).all() && ind.allFinite(), "ind must be positive");
  require(cap_load > 0.0 && std::isfinite(cap_load), "cap_load must be positive");
  require(res_load > 0.0 && std::isfinite(res_load), "res_load must be positive");
  require(p_load >= 0.0 && std::isfinite(p_load), "p_load must be non-negative");
  require(v_cpl_min > 0.0 && std::isfinite(v_cpl_min), "v_cpl_min must be positive");
  require(v_safe_lo.allFinite() && v_safe_hi.allFinite(),
          "safety box must be finite");
  require((v_safe_lo.array() < v_safe_hi.array()).all(),
          "safety box must have positive width");
}

double cpl_current(double v_load, const GridParams& p) {
  if (v_load <= 0.0) return 0.0;
  if (v_load <= p.v_cpl_min) return p.i_cpl_max() * (v_load / p.v_cpl_min);
  return p.p_load / v_load;
}

Vector drift(const GridState& s, const GridParams& p) {
  const int n = p.n();
  Vector f(2 * n + 1);
  const double v_l = s.bus_voltage();
  double current_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double v = s.v(j);
    const double i = s.line_current(j);
    f[2 * j] = -i / p.cap[j];
    f[2 * j + 1] = (v - p.res[j] * i - v_l) / p.ind[j];
    current_sum += i;
  }
  f[2 * n] = (current_sum - v_l / p.res_load - cpl_current(v_l, p)) / p.cap_load;
  return f;
}

Matrix ctrl_matrix(const GridParams& p) {
  const int n = p.n();
  Matrix g = Matrix::Zero(2 * n + 1, n);
  for (int j = 0; j < n; ++j) g(2 * j, j) = 1.0 / p.cap[j];
  return g;
}

Vector vector_field(const GridState& s, const ControlInput& u, const GridParams& p) {
  Vector f = drift(s, p);
  for (int j = 0; j < p.n(); ++j) f[2 * j] += u[j] / p.cap[j];
  return f;
}

Matrix drift_jacobian(const GridState& s, const GridParams& p) {
  const int n = p.n();
  Matrix jac = Matrix::Zero(2 * n + 1, 2 * n + 1);
  const double v_l = s.bus_voltage();
  for (int j = 0; j < n; ++j) {
    jac(2 * j, 2 * j + 1) = -1.0 / p.cap[j];
    jac(2 * j + 1, 2 * j) = 1.0 / p.ind[j];
    jac(2 * j + 1, 2 * j + 1) = -p.res[j] / p.ind[j];
    jac(2 * j + 1, 2 * n) = -1.0 / p.ind[j];
    jac(2 * n, 2 * j + 1) = 1.0 / p.cap_load;
  }
  double load_slope = -p.p_load / (v_l * v_l);
  if (v_l <= p.v_cpl_min) {
    load_slope = v_l <= 0.0 ? 0.0 : p.i_cpl_max() / p.v_cpl_min;
  }
  jac(2 * n, 2 * n) = (-1.0 / p.res_load - load_slope) / p.cap_load;
  return jac;
}

double stored_energy(const GridState& s, const GridParams& p) {
  double e = 0.0;
  for (int j = 0; j < p.n(); ++j) {
    e += 0.5 * p.cap[j] * s.v(j) * s.v(j);
    e += 0.5 * p.ind[j] * s.line_current(j) * s.line_current(j);
  }
  const double v_l = s.bus_voltage();
  e += 0.5 * p.cap_load * v_l * v_l;
  return e;
}

}  // namespace gridscc
