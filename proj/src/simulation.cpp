#include "gridscc/simulation.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "gridscc/errors.hpp"

namespace gridscc {

namespace {

long long checked_ratio(double coarse, double fine, const char* what) {
  const double ratio = coarse / fine;
  const long long rounded = std::llround(ratio);
  if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > 1e-6 * ratio) {
    throw std::invalid_argument(std::string("scenario: ") + what +
                                " must be an integer multiple of dt_plant");
  }
  return rounded;
}

double min_barrier(const GridState& s, const GridParams& p) {
  double min_b = std::numeric_limits<double>::infinity();
  for (int j = 0; j < p.n(); ++j) {
    const double b = -(s.v(j) - p.v_safe_lo[j]) * (s.v(j) - p.v_safe_hi[j]);
    min_b = std::min(min_b, b);
  }
  return min_b;
}

// Trajectories that settle exactly on a box face (droop pinned at the upper
// voltage limit) cross zero by rounding noise only; treat that as safe.
constexpr double kSafetyDeadband = 1e-6;

Vector internal_coords(const GridState& s, const GridParams& p) {
  const int n = p.n();
  Vector zee(n - 1);
  for (int k = 0; k + 1 < n; ++k) {
    zee[k] = p.res[k] * s.line_current(k) - p.res[k + 1] * s.line_current(k + 1);
  }
  return zee;
}

}  // namespace

void Scenario::validate() const {
  params.validate();
  const int n = params.n();
  if (x0.x.size() != 2 * n + 1 || !x0.x.allFinite()) {
    throw std::invalid_argument("scenario: x0 must be a finite state of size 2n+1");
  }
  if (!(dt_plant > 0.0) || !(dt_control > 0.0) || !std::isfinite(dt_plant) ||
      !std::isfinite(dt_control)) {
    throw std::invalid_argument("scenario: step sizes must be positive");
  }
  checked_ratio(dt_control, dt_plant, "dt_control");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
    throw std::invalid_argument("scenario: t_final must be non-negative");
  }
  if (record_every < 0) {
    throw std::invalid_argument("scenario: record_every must be non-negative");
  }
  if (!(converge_tol > 0.0)) {
    throw std::invalid_argument("scenario: converge_tol must be positive");
  }
  if (!(v_bus_target > params.v_cpl_min)) {
    throw std::invalid_argument(
        "scenario: bus target must exceed the load branch point");
  }
  if (controller == ControllerKind::scc) {
    for (int j = 0; j < n; ++j) {
      if (!(x0.v(j) > params.v_safe_lo[j] && x0.v(j) < params.v_safe_hi[j])) {
        throw std::invalid_argument(
            "scenario: initial converter voltages must lie strictly inside "
            "the safety box for the safety-critical controller");
      }
    }
  }
}

GridState integrate_step(const GridState& s, const ControlInput& u, double dt,
                         const GridParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be positive");
  const Vector k1 = vector_field(s, u, p);
  const Vector k2 = vector_field(GridState(s.x + (0.5 * dt) * k1), u, p);
  const Vector k3 = vector_field(GridState(s.x + (0.5 * dt) * k2), u, p);
  const Vector k4 = vector_field(GridState(s.x + dt * k3), u, p);
  return GridState(s.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

std::unique_ptr<Controller> make_controller(const Scenario& sc) {
  switch (sc.controller) {
    case ControllerKind::droop:
      return std::make_unique<DroopController>(sc.params, sc.droop);
    case ControllerKind::fl:
      return std::make_unique<FlController>(
          sc.params, closed_form_equilibrium(sc.v_bus_target, sc.params), sc.scc);
    case ControllerKind::scc:
    default:
      return std::make_unique<SccController>(
          sc.params, closed_form_equilibrium(sc.v_bus_target, sc.params), sc.scc,
          sc.dt_control);
  }
}

Trace run(const Scenario& sc) {
  sc.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  const int n = sc.params.n();

  const Equilibrium eq = closed_form_equilibrium(sc.v_bus_target, sc.params);
  const BrunovskyPair bp = make_brunovsky(
      n, sc.scc.poles.chain.empty() ? PoleSpec::defaults(n) : sc.scc.poles);
  const ClfCertificate metric_clf =
      make_clf_certificate(bp, sc.scc.q, sc.scc.alpha);
  const std::unique_ptr<Controller> controller = make_controller(sc);

  const long long steps = std::llround(sc.t_final / sc.dt_plant);
  const long long ratio = checked_ratio(sc.dt_control, sc.dt_plant, "dt_control");
  const long long rec_every = sc.record_every > 0 ? sc.record_every : ratio;
  const long long window =
      std::max<long long>(1, std::llround(1e-5 / sc.dt_plant));

  Trace trace;
  trace.records.reserve(static_cast<size_t>(steps / rec_every + 2));
  TraceSummary& summary = trace.summary;

  GridState x = sc.x0;
  ControlInput u = Vector::Zero(n);
  unsigned run_flags = 0;
  bool fallback_hold = false;
  long long last_out_of_band = -1;

  // Trailing window of post-step states and held inputs.
  std::vector<Vector> ring_x(static_cast<size_t>(window));
  std::vector<Vector> ring_u(static_cast<size_t>(window));
  long long pushed = 0;

  auto make_record = [&](double t) {
    TraceRecord r;
    r.t = t;
    r.x = x.x;
    r.u = u;
    r.min_b = min_barrier(x, sc.params);
    r.zee = internal_coords(x, sc.params);
    if (x.x.allFinite() && x.bus_voltage() > sc.params.v_cpl_min) {
      r.v_eta = clf_value(outputs(x, eq, sc.params).eta, metric_clf);
    }
    r.flags = run_flags;
    if (!(x.bus_voltage() > sc.params.v_cpl_min)) r.flags |= trace_flags::cpl_saturated;
    if (fallback_hold) r.flags |= trace_flags::fallback;
    return r;
  };

  auto abort_run = [&](const std::string& reason) {
    summary.aborted = true;
    summary.abort_reason = reason;
    run_flags |= trace_flags::aborted;
  };

  summary.min_b = min_barrier(x, sc.params);
  if (summary.min_b < -kSafetyDeadband && sc.controller != ControllerKind::scc) {
    summary.safety_violated = true;
    run_flags |= trace_flags::safety;
  }

  long long k = 0;
  for (; k < steps; ++k) {
    if (k % ratio == 0) {
      try {
        auto [u_next, log] = controller->step(x);
        u = std::move(u_next);
        fallback_hold = log.fallback;
      } catch (const SafetyViolation& e) {
        summary.safety_violated = true;
        run_flags |= trace_flags::safety;
        abort_run(std::string("safety: ") + e.what());
        break;
      } catch (const std::exception& e) {
        abort_run(std::string("controller: ") + e.what());
        break;
      }
    }
    if (k % rec_every == 0) {
      trace.records.push_back(make_record(static_cast<double>(k) * sc.dt_plant));
    }

    GridState next = integrate_step(x, u, sc.dt_plant, sc.params);
    if (!next.x.allFinite()) {
      x = std::move(next);
      ++k;  // the bad state belongs to the end of this step
      abort_run("non-finite state during integration");
      break;
    }
    x = std::move(next);

    const double mb = min_barrier(x, sc.params);
    summary.min_b = std::min(summary.min_b, mb);
    if (mb < -kSafetyDeadband) {
      summary.safety_violated = true;
      run_flags |= trace_flags::safety;
    }
    if (std::abs(x.bus_voltage() - sc.v_bus_target) > sc.converge_tol) {
      last_out_of_band = k;
    }
    ring_x[static_cast<size_t>(pushed % window)] = x.x;
    ring_u[static_cast<size_t>(pushed % window)] = u;
    ++pushed;
  }

  // Closing record: the final state on a clean run, the abort state otherwise.
  trace.records.push_back(
      make_record(static_cast<double>(summary.aborted ? k : steps) * sc.dt_plant));

  const long long have = std::min(pushed, window);
  if (have > 0) {
    Vector x_sum = Vector::Zero(2 * n + 1);
    Vector u_sum = Vector::Zero(n);
    double dev = 0.0;
    for (long long i = 0; i < have; ++i) {
      x_sum += ring_x[static_cast<size_t>(i)];
      u_sum += ring_u[static_cast<size_t>(i)];
      dev = std::max(dev, std::abs(ring_x[static_cast<size_t>(i)][2 * n] -
                                   sc.v_bus_target));
    }
    summary.x_avg = x_sum / static_cast<double>(have);
    summary.u_avg = u_sum / static_cast<double>(have);
    summary.max_bus_dev_last_window = dev;
  } else {
    summary.x_avg = x.x;
    summary.u_avg = u;
    summary.max_bus_dev_last_window = std::abs(x.bus_voltage() - sc.v_bus_target);
  }
  summary.v_bus_avg = summary.x_avg[2 * n];
  summary.converged = !summary.aborted &&
                      std::abs(summary.v_bus_avg - sc.v_bus_target) <= sc.converge_tol;
  if (!summary.aborted && last_out_of_band + 1 < steps) {
    summary.settle_time = static_cast<double>(last_out_of_band + 1) * sc.dt_plant;
  }
  summary.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return trace;
}

}  // namespace gridscc
