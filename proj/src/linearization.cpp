#include "gridscc/linearization.hpp"

#include <cmath>
#include <stdexcept>

#include "gridscc/errors.hpp"

namespace gridscc {

namespace {

// Shared Lie-derivative data of the bus error h0 = v_L - v* along the drift.
// Only valid in the constant-power branch of the load.
struct LieData {
  double w = 0.0;    // h0' : bus capacitor current balance over C_L
  double s = 0.0;    // slope of the net load current in v_L, sign flipped
  double sp = 0.0;   // derivative of s in v_L
  Vector e;          // line current slopes (v_j - R_j i_j - v_L)/L_j
  double lf2 = 0.0;  // h0''
  double lf3 = 0.0;  // h0''' along the drift
};

LieData lie_data(const GridState& st, const GridParams& p) {
  const int n = p.n();
  const double v_l = st.bus_voltage();
  if (!(v_l > p.v_cpl_min)) {
    throw std::domain_error(
        "outputs: bus voltage at or below the load branch point");
  }

  LieData d;
  d.e.resize(n);
  double current_sum = 0.0;
  double inv_ind_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    current_sum += st.line_current(j);
    d.e[j] = (st.v(j) - p.res[j] * st.line_current(j) - v_l) / p.ind[j];
    inv_ind_sum += 1.0 / p.ind[j];
  }
  const double c_l = p.cap_load;
  d.w = (current_sum - v_l / p.res_load - p.p_load / v_l) / c_l;
  d.s = -1.0 / p.res_load + p.p_load / (v_l * v_l);
  d.sp = -2.0 * p.p_load / (v_l * v_l * v_l);

  d.lf2 = (d.e.sum() + d.s * d.w) / c_l;

  double lf3 = (-inv_ind_sum / c_l + d.sp * d.w / c_l + d.s * d.s / (c_l * c_l)) * d.w;
  for (int j = 0; j < n; ++j) {
    lf3 += (-st.line_current(j) / p.cap[j]) / (c_l * p.ind[j]);
    lf3 += (d.s / (c_l * c_l) - p.res[j] / (c_l * p.ind[j])) * d.e[j];
  }
  d.lf3 = lf3;
  return d;
}

}  // namespace

OutputCoords outputs(const GridState& st, const Equilibrium& eq, const GridParams& p) {
  const int n = p.n();
  const LieData d = lie_data(st, p);

  OutputCoords oc;
  oc.eta.resize(n + 2);
  oc.eta[0] = st.bus_voltage() - eq.v_bus_target;
  oc.eta[1] = d.w;
  oc.eta[2] = d.lf2;
  for (int k = 0; k + 1 < n; ++k) oc.eta[3 + k] = st.v(k) - st.v(k + 1);

  oc.zee.resize(n - 1);
  for (int k = 0; k + 1 < n; ++k) {
    oc.zee[k] = p.res[k] * st.line_current(k) - p.res[k + 1] * st.line_current(k + 1);
  }

  const double c_l = p.cap_load;
  double inv_ind_sum = 0.0;
  for (int j = 0; j < n; ++j) inv_ind_sum += 1.0 / p.ind[j];

  Matrix jac = Matrix::Zero(2 * n + 1, 2 * n + 1);
  jac(0, 2 * n) = 1.0;
  for (int j = 0; j < n; ++j) {
    jac(1, 2 * j + 1) = 1.0 / c_l;
    jac(2, 2 * j) = 1.0 / (c_l * p.ind[j]);
    jac(2, 2 * j + 1) = -p.res[j] / (c_l * p.ind[j]) + d.s / (c_l * c_l);
  }
  jac(1, 2 * n) = d.s / c_l;
  jac(2, 2 * n) = -inv_ind_sum / c_l + d.sp * d.w / c_l + d.s * d.s / (c_l * c_l);
  for (int k = 0; k + 1 < n; ++k) {
    jac(3 + k, 2 * k) = 1.0;
    jac(3 + k, 2 * k + 2) = -1.0;
    jac(n + 2 + k, 2 * k + 1) = p.res[k];
    jac(n + 2 + k, 2 * k + 3) = -p.res[k + 1];
  }
  oc.jac = std::move(jac);
  return oc;
}

OutputDynamics output_dynamics(const GridState& st, const Equilibrium& eq,
                               const GridParams& p) {
  (void)eq;  // the transverse drift does not depend on the setpoint
  const int n = p.n();
  const LieData d = lie_data(st, p);
  const double c_l = p.cap_load;

  OutputDynamics od;
  od.f_eta.resize(n + 2);
  od.f_eta[0] = d.w;
  od.f_eta[1] = d.lf2;
  od.f_eta[2] = d.lf3;
  od.g_eta = Matrix::Zero(n + 2, n);
  for (int j = 0; j < n; ++j) {
    od.g_eta(2, j) = 1.0 / (p.cap[j] * p.ind[j] * c_l);
  }
  for (int k = 0; k + 1 < n; ++k) {
    od.f_eta[3 + k] =
        -st.line_current(k) / p.cap[k] + st.line_current(k + 1) / p.cap[k + 1];
    od.g_eta(3 + k, k) = 1.0 / p.cap[k];
    od.g_eta(3 + k, k + 1) = -1.0 / p.cap[k + 1];
  }

  od.f_eta_reduced = od.f_eta.tail(n);
  od.g_eta_reduced = od.g_eta.bottomRows(n);

  Eigen::PartialPivLU<Matrix> lu(od.g_eta_reduced);
  if (!(lu.rcond() > 1e-12)) {
    throw NumericalError("output dynamics: reduced input block ill conditioned");
  }
  return od;
}

PoleSpec PoleSpec::defaults(int n) {
  PoleSpec ps;
  ps.chain = {{-2000.0, 0.0}, {-4000.0, 0.0}, {-6000.0, 0.0}};
  ps.channels.assign(static_cast<size_t>(n > 0 ? n - 1 : 0), -2000.0);
  return ps;
}

BrunovskyPair make_brunovsky(int n, const PoleSpec& poles) {
  if (n < 1) throw std::invalid_argument("brunovsky: need n >= 1");
  if (poles.chain.size() != 3) {
    throw std::invalid_argument("brunovsky: chain needs exactly three poles");
  }
  if (static_cast<int>(poles.channels.size()) != n - 1) {
    throw std::invalid_argument("brunovsky: need one channel pole per difference");
  }
  for (const auto& pole : poles.chain) {
    if (!(pole.real() < 0.0) || !std::isfinite(pole.real()) ||
        !std::isfinite(pole.imag())) {
      throw std::invalid_argument("brunovsky: chain poles must be stable");
    }
  }
  for (double pole : poles.channels) {
    if (!(pole < 0.0) || !std::isfinite(pole)) {
      throw std::invalid_argument("brunovsky: channel poles must be negative reals");
    }
  }

  // Chain characteristic polynomial s^3 + a2 s^2 + a1 s + a0 from the
  // elementary symmetric functions of the poles.
  const std::complex<double> p0 = poles.chain[0];
  const std::complex<double> p1 = poles.chain[1];
  const std::complex<double> p2 = poles.chain[2];
  const std::complex<double> e1 = p0 + p1 + p2;
  const std::complex<double> e2 = p0 * p1 + p0 * p2 + p1 * p2;
  const std::complex<double> e3 = p0 * p1 * p2;
  const double scale = 1.0 + std::abs(e1) + std::abs(e2) + std::abs(e3);
  if (std::abs(e1.imag()) + std::abs(e2.imag()) + std::abs(e3.imag()) >
      1e-9 * scale) {
    throw std::invalid_argument("brunovsky: chain not closed under conjugation");
  }
  const double a2 = -e1.real();
  const double a1 = e2.real();
  const double a0 = -e3.real();

  BrunovskyPair bp;
  bp.F = Matrix::Zero(n + 2, n + 2);
  bp.F(0, 1) = 1.0;
  bp.F(1, 2) = 1.0;
  bp.G = Matrix::Zero(n + 2, n);
  for (int k = 0; k < n; ++k) bp.G(2 + k, k) = 1.0;
  bp.K = Matrix::Zero(n, n + 2);
  bp.K(0, 0) = -a0;
  bp.K(0, 1) = -a1;
  bp.K(0, 2) = -a2;
  for (int k = 1; k < n; ++k) bp.K(k, 2 + k) = poles.channels[k - 1];
  bp.A_cl = bp.F + bp.G * bp.K;
  return bp;
}

ControlInput feedback_linearizing_control(const GridState& st, const Equilibrium& eq,
                                          const BrunovskyPair& bp,
                                          const GridParams& p) {
  const OutputCoords oc = outputs(st, eq, p);
  const OutputDynamics od = output_dynamics(st, eq, p);
  const Vector target = bp.K * oc.eta;
  return od.g_eta_reduced.partialPivLu().solve(target - od.f_eta_reduced);
}

double pair_decay_rate(const GridParams& p, int j) {
  if (j < 0 || j + 1 >= p.n()) {
    throw std::invalid_argument("pair_decay_rate: adjacent pair out of range");
  }
  return -(p.res[j] + p.res[j + 1]) / (p.ind[j] + p.ind[j + 1]);
}

}  // namespace gridscc
