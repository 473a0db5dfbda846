#include "gridscc/controllers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gridscc/errors.hpp"

namespace gridscc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double min_barrier(const GridState& s, const CbfCertificate& cbf, int n) {
  double min_b = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) min_b = std::min(min_b, cbf_value(s, j, cbf).b);
  return min_b;
}

void check_interior(const GridState& s, const CbfCertificate& cbf, int n) {
  for (int j = 0; j < n; ++j) {
    if (!cbf_value(s, j, cbf).inside) {
      std::ostringstream msg;
      msg << "safety box violated: v_" << j + 1 << " = " << s.v(j)
          << " outside (" << cbf.lo[j] << ", " << cbf.hi[j] << ")";
      throw SafetyViolation(msg.str());
    }
  }
}

std::string describe_state(const GridState& s) {
  std::ostringstream msg;
  msg << "x = [";
  for (int i = 0; i < s.x.size(); ++i) {
    if (i) msg << ", ";
    msg << s.x[i];
  }
  msg << "]";
  return msg.str();
}

Vector default_gains(const Vector& gains, int n) {
  if (gains.size() == 0) return Vector::Constant(n, 0.1);
  return gains;
}

// The barrier rows assume feedback at every instant; under a zero-order hold
// the voltage keeps travelling inside the period. Each hold row caps the
// one-period travel so the voltage lands inside a band pulled in from the
// wall; the band absorbs the drift of the line current across the period.
constexpr double kHoldBand = 1.0;  // [V], capped at 20% of the box half-width

}  // namespace

DroopController::DroopController(GridParams params, DroopConfig config)
    : params_(std::move(params)), config_(std::move(config)) {
  params_.validate();
  config_.droop_gain = default_gains(config_.droop_gain, params_.n());
  if (config_.droop_gain.size() != params_.n() ||
      !(config_.droop_gain.array() >= 0.0).all()) {
    throw std::invalid_argument("droop: need one non-negative gain per converter");
  }
  if (!(config_.k_p > 0.0) || !std::isfinite(config_.k_p) ||
      !std::isfinite(config_.v_nominal)) {
    throw std::invalid_argument("droop: bad proportional gain or nominal voltage");
  }
  if (config_.u_bounds && !(config_.u_bounds->first < config_.u_bounds->second)) {
    throw std::invalid_argument("droop: input box must have positive width");
  }
}

std::pair<ControlInput, ControlStepLog> DroopController::step(const GridState& s) const {
  const auto t0 = Clock::now();
  const int n = params_.n();
  ControlInput u(n);
  for (int j = 0; j < n; ++j) {
    const double sagged = config_.v_nominal - config_.droop_gain[j] * s.line_current(j);
    const double ref = std::clamp(sagged, params_.v_safe_lo[j], params_.v_safe_hi[j]);
    u[j] = s.line_current(j) + config_.k_p * params_.cap[j] * (ref - s.v(j));
    if (config_.u_bounds) {
      u[j] = std::clamp(u[j], config_.u_bounds->first, config_.u_bounds->second);
    }
  }

  ControlStepLog log;
  log.u = u;
  log.delta = Vector::Zero(n);
  log.min_b = min_barrier(s, CbfCertificate{1.0, params_.v_safe_lo, params_.v_safe_hi}, n);
  log.wall_time = seconds_since(t0);
  return {std::move(u), std::move(log)};
}

SccController::SccController(GridParams params, Equilibrium eq, SccConfig config,
                             double control_period)
    : params_(std::move(params)),
      eq_(std::move(eq)),
      config_(std::move(config)),
      dt_(control_period),
      brunovsky_(make_brunovsky(
          params_.n(), config_.poles.chain.empty() ? PoleSpec::defaults(params_.n())
                                                   : config_.poles)),
      clf_(make_clf_certificate(brunovsky_, config_.q, config_.alpha)),
      cbf_(make_cbf_certificate(params_, config_.beta)),
      fallback_(params_, config_.fallback) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
    throw std::invalid_argument("scc: control period must be positive");
  }
  if (!(config_.m > 0.0) || !std::isfinite(config_.m)) {
    throw std::invalid_argument("scc: slack penalty m must be positive");
  }
  if (config_.u_bounds && !(config_.u_bounds->first < config_.u_bounds->second)) {
    throw std::invalid_argument("scc: input box must have positive width");
  }
  if (eq_.x_star.x.size() != 2 * params_.n() + 1) {
    throw std::invalid_argument("scc: equilibrium size mismatch");
  }
}

void SccController::append_barrier_rows(std::vector<ConstraintRow>& rows,
                                        const GridState& s,
                                        int delta_width) const {
  const int n = params_.n();
  for (int j = 0; j < n; ++j) {
    // Barrier-rate row. Single-variable in u_j, so it prescribes either a
    // ceiling or a floor on u_j depending on which wall is nearer.
    ConstraintRow rate = cbf_row(s, j, cbf_, params_);
    if (delta_width != n) rate.coeff_delta = Vector::Zero(delta_width);
    const double rate_coeff = rate.coeff_u[j];
    const double rate_edge =
        rate_coeff != 0.0 ? rate.rhs / rate_coeff : 0.0;
    rows.push_back(std::move(rate));

    // Hold rows: the voltage moves by (u_j - i_j) dt / C_j across one hold,
    // so bounding u_j lands the voltage inside the banded box regardless of
    // how large the commanded input is. The band covers the drift of the
    // line current within the period.
    const double band =
        std::min(kHoldBand, 0.1 * (cbf_.hi[j] - cbf_.lo[j]));
    const double gain = params_.cap[j] / dt_;
    const double ceil_hold =
        s.line_current(j) + gain * (cbf_.hi[j] - band - s.v(j));
    const double floor_hold =
        s.line_current(j) + gain * (cbf_.lo[j] + band - s.v(j));

    // The input box yields to the barrier rows: when the required inward
    // travel exceeds the box, safety outranks the box for that step.
    double hi = ceil_hold;
    double lo = floor_hold;
    if (config_.u_bounds) {
      hi = std::max(std::min(config_.u_bounds->second, ceil_hold), floor_hold);
      lo = std::min(std::max(config_.u_bounds->first, floor_hold), ceil_hold);
      if (rate_coeff > 0.0) lo = std::min(lo, rate_edge);
      if (rate_coeff < 0.0) hi = std::max(hi, rate_edge);
    }

    ConstraintRow up;
    up.coeff_u = Vector::Zero(n);
    up.coeff_u[j] = 1.0;
    up.coeff_delta = Vector::Zero(delta_width);
    up.rhs = hi;
    up.kind = RowKind::cbf;
    up.cbf_index = j;
    rows.push_back(up);

    ConstraintRow down = up;
    down.coeff_u[j] = -1.0;
    down.rhs = -lo;
    rows.push_back(down);
  }
}

std::pair<ControlInput, ControlStepLog> SccController::step(const GridState& s) const {
  const auto t0 = Clock::now();
  const int n = params_.n();
  check_interior(s, cbf_, n);

  ControlStepLog log;
  log.min_b = min_barrier(s, cbf_, n);

  if (s.bus_voltage() <= params_.v_cpl_min) {
    // Saturated load branch: the Lie-derivative expressions behind the
    // stability row do not hold here, so filter the droop fallback through
    // the barrier rows alone.
    auto [u_droop, droop_log] = fallback_.step(s);
    QpProblem qp;
    qp.hessian_diag = Vector::Ones(n);
    qp.linear_center = u_droop;
    append_barrier_rows(qp.rows, s, 0);

    QpSolution sol = solve_qp(qp);
    if (sol.status != QpStatus::ok) {
      throw NumericalError("scc fallback: barrier filter unsolvable; " +
                           describe_state(s));
    }
    log.u = sol.w_star;
    log.delta = Vector::Zero(n);
    log.active_constraints = sol.active_set;
    log.qp_status = sol.status;
    log.fallback = true;
    log.wall_time = seconds_since(t0);
    return {log.u, log};
  }

  const OutputCoords oc = outputs(s, eq_, params_);
  const OutputDynamics od = output_dynamics(s, eq_, params_);
  const ControlInput u_fl = od.g_eta_reduced.partialPivLu().solve(
      brunovsky_.K * oc.eta - od.f_eta_reduced);

  QpProblem qp;
  qp.hessian_diag.resize(2 * n);
  qp.hessian_diag.head(n).setOnes();
  qp.hessian_diag.tail(n).setConstant(config_.m);
  qp.linear_center.resize(2 * n);
  qp.linear_center.head(n) = u_fl;
  qp.linear_center.tail(n).setZero();

  ConstraintRow stability = clf_row(oc, od, clf_);
  if (stability.rhs <= 0.0) {
    stability.rhs *= (config_.m + 1.0) / config_.m;
  }
  qp.rows.push_back(std::move(stability));
  append_barrier_rows(qp.rows, s, n);

  QpSolution sol = solve_qp(qp);
  if (sol.status != QpStatus::ok) {
    const char* what = sol.status == QpStatus::infeasible
                           ? "step program infeasible (feasibility argument "
                             "violated; likely a bug); "
                           : "step program ill conditioned; ";
    throw NumericalError(std::string("scc: ") + what + describe_state(s));
  }

  log.u = sol.w_star.head(n);
  log.delta = sol.w_star.tail(n);
  log.active_constraints = sol.active_set;
  log.v_eta = clf_value(oc.eta, clf_);
  log.qp_status = sol.status;
  log.wall_time = seconds_since(t0);
  return {log.u, log};
}

FlController::FlController(GridParams params, Equilibrium eq, SccConfig config)
    : params_(std::move(params)),
      eq_(std::move(eq)),
      brunovsky_(make_brunovsky(
          params_.n(), config.poles.chain.empty() ? PoleSpec::defaults(params_.n())
                                                  : config.poles)),
      clf_(make_clf_certificate(brunovsky_, config.q, config.alpha)),
      cbf_(make_cbf_certificate(params_, config.beta)),
      fallback_(params_, config.fallback) {}

std::pair<ControlInput, ControlStepLog> FlController::step(const GridState& s) const {
  const auto t0 = Clock::now();
  const int n = params_.n();
  ControlStepLog log;
  log.min_b = min_barrier(s, cbf_, n);
  log.delta = Vector::Zero(n);

  if (s.bus_voltage() <= params_.v_cpl_min) {
    auto [u_droop, droop_log] = fallback_.step(s);
    log.u = u_droop;
    log.fallback = true;
  } else {
    const OutputCoords oc = outputs(s, eq_, params_);
    const OutputDynamics od = output_dynamics(s, eq_, params_);
    log.u = od.g_eta_reduced.partialPivLu().solve(brunovsky_.K * oc.eta -
                                                  od.f_eta_reduced);
    log.v_eta = clf_value(oc.eta, clf_);
  }
  log.wall_time = seconds_since(t0);
  return {log.u, log};
}

}  // namespace gridscc
