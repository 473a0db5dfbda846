#include "gridscc/scenario_io.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace gridscc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError("scenario: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) fail(path + "." + item.key(), "unknown key");
  }
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double get_number(const json& j, const std::string& path, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(path + "." + key, "missing required key");
  return as_number(*v, path + "." + key);
}

double get_number_or(const json& j, const std::string& path, const char* key,
                     double fallback) {
  const json* v = find(j, key);
  return v ? as_number(*v, path + "." + key) : fallback;
}

// Accepts an array of numbers (exact length when expected >= 0) or, when
// broadcasting is allowed, a single number repeated across all entries.
Vector get_vector(const json& j, const std::string& path, const char* key,
                  int expected, bool broadcast) {
  const json* v = find(j, key);
  if (!v) fail(path + "." + key, "missing required key");
  const std::string where = path + "." + key;
  if (broadcast && v->is_number()) {
    return Vector::Constant(expected, v->get<double>());
  }
  if (!v->is_array()) fail(where, "expected an array of numbers");
  if (expected >= 0 && static_cast<int>(v->size()) != expected) {
    fail(where, "expected " + std::to_string(expected) + " entries");
  }
  Vector out(v->size());
  for (size_t i = 0; i < v->size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        as_number((*v)[i], where + "[" + std::to_string(i) + "]");
  }
  return out;
}

GridParams parse_params(const json& j) {
  if (!j.is_object()) fail("params", "expected an object");
  check_keys(j, "params",
             {"cap_mF", "res_mOhm", "ind_mH", "cap_load_mF", "res_load_mOhm",
              "p_load_W", "v_cpl_min_V", "v_safe_lo_V", "v_safe_hi_V"});
  GridParams p;
  p.cap = get_vector(j, "params", "cap_mF", -1, false) * 1e-3;
  const int n = p.n();
  p.res = get_vector(j, "params", "res_mOhm", n, false) * 1e-3;
  p.ind = get_vector(j, "params", "ind_mH", n, false) * 1e-3;
  p.cap_load = get_number(j, "params", "cap_load_mF") * 1e-3;
  p.res_load = get_number(j, "params", "res_load_mOhm") * 1e-3;
  p.p_load = get_number(j, "params", "p_load_W");
  p.v_cpl_min = get_number_or(j, "params", "v_cpl_min_V", 5.0);
  p.v_safe_lo = find(j, "v_safe_lo_V")
                    ? get_vector(j, "params", "v_safe_lo_V", n, true)
                    : Vector::Constant(n, 5.0);
  p.v_safe_hi = find(j, "v_safe_hi_V")
                    ? get_vector(j, "params", "v_safe_hi_V", n, true)
                    : Vector::Constant(n, 50.0);
  return p;
}

GridState parse_x0(const json& j, int n) {
  if (!j.is_object()) fail("x0", "expected an object");
  check_keys(j, "x0", {"v_V", "i_t_A", "v_load_V"});
  const Vector v = get_vector(j, "x0", "v_V", n, false);
  const Vector i = get_vector(j, "x0", "i_t_A", n, false);
  GridState s(Vector(2 * n + 1));
  for (int k = 0; k < n; ++k) {
    s.v(k) = v[k];
    s.line_current(k) = i[k];
  }
  s.bus_voltage() = get_number(j, "x0", "v_load_V");
  return s;
}

std::optional<std::pair<double, double>> parse_u_bounds(const json& j,
                                                        const std::string& path) {
  const json* lo = find(j, "u_min_A");
  const json* hi = find(j, "u_max_A");
  if (!lo && !hi) return std::nullopt;
  if (!lo || !hi) fail(path, "u_min_A and u_max_A must come together");
  return std::make_pair(as_number(*lo, path + ".u_min_A"),
                        as_number(*hi, path + ".u_max_A"));
}

DroopConfig parse_droop(const json& j, const std::string& path, int n) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path,
             {"v_nominal_V", "droop_gain_V_per_A", "k_p_per_s", "u_min_A", "u_max_A"});
  DroopConfig cfg;
  cfg.v_nominal = get_number_or(j, path, "v_nominal_V", cfg.v_nominal);
  if (find(j, "droop_gain_V_per_A")) {
    cfg.droop_gain = get_vector(j, path, "droop_gain_V_per_A", n, true);
  }
  cfg.k_p = get_number_or(j, path, "k_p_per_s", cfg.k_p);
  cfg.u_bounds = parse_u_bounds(j, path);
  return cfg;
}

SccConfig parse_scc(const json& j, int n) {
  if (!j.is_object()) fail("scc", "expected an object");
  check_keys(j, "scc",
             {"m", "alpha", "beta", "q_diag", "chain_poles_re", "chain_poles_im",
              "channel_poles", "u_min_A", "u_max_A", "fallback"});
  SccConfig cfg;
  cfg.m = get_number_or(j, "scc", "m", cfg.m);
  cfg.alpha = get_number_or(j, "scc", "alpha", cfg.alpha);
  cfg.beta = get_number_or(j, "scc", "beta", cfg.beta);
  if (find(j, "q_diag")) {
    cfg.q = get_vector(j, "scc", "q_diag", n + 2, true).asDiagonal();
  }
  if (find(j, "chain_poles_re")) {
    const Vector re = get_vector(j, "scc", "chain_poles_re", 3, false);
    Vector im = Vector::Zero(3);
    if (find(j, "chain_poles_im")) {
      im = get_vector(j, "scc", "chain_poles_im", 3, false);
    }
    cfg.poles.chain = {{re[0], im[0]}, {re[1], im[1]}, {re[2], im[2]}};
    cfg.poles.channels.assign(static_cast<size_t>(n - 1), -2000.0);
  } else if (find(j, "chain_poles_im")) {
    fail("scc.chain_poles_im", "requires chain_poles_re");
  }
  if (find(j, "channel_poles")) {
    const Vector ch = get_vector(j, "scc", "channel_poles", n - 1, true);
    if (cfg.poles.chain.empty()) cfg.poles = PoleSpec::defaults(n);
    cfg.poles.channels.assign(ch.data(), ch.data() + ch.size());
  }
  cfg.u_bounds = parse_u_bounds(j, "scc");
  if (const json* fb = find(j, "fallback")) {
    cfg.fallback = parse_droop(*fb, "scc.fallback", n);
  }
  return cfg;
}

std::string fmt9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::scc: return "scc";
    case ControllerKind::droop: return "droop";
    case ControllerKind::fl: return "fl";
  }
  return "scc";
}

ControllerKind parse_controller(const std::string& name) {
  if (name == "scc") return ControllerKind::scc;
  if (name == "droop") return ControllerKind::droop;
  if (name == "fl") return ControllerKind::fl;
  throw ScenarioError("scenario: controller: expected scc, droop, or fl, got '" +
                      name + "'");
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("$", "expected a top-level object");
  check_keys(j, "$",
             {"name", "params", "v_bus_target_V", "x0", "controller", "dt_plant_s",
              "dt_control_s", "t_final_s", "record_every_steps", "converge_tol_V",
              "scc", "droop"});

  Scenario sc;
  if (const json* name = find(j, "name")) {
    if (!name->is_string()) fail("name", "expected a string");
    sc.name = name->get<std::string>();
  }
  const json* params = find(j, "params");
  if (!params) fail("params", "missing required key");
  sc.params = parse_params(*params);
  const int n = sc.params.n();

  sc.v_bus_target = get_number(j, "$", "v_bus_target_V");
  const json* x0 = find(j, "x0");
  if (!x0) fail("x0", "missing required key");
  sc.x0 = parse_x0(*x0, n);

  if (const json* ctrl = find(j, "controller")) {
    if (!ctrl->is_string()) fail("controller", "expected a string");
    sc.controller = parse_controller(ctrl->get<std::string>());
  }
  sc.dt_plant = get_number_or(j, "$", "dt_plant_s", sc.dt_plant);
  sc.dt_control = get_number_or(j, "$", "dt_control_s", sc.dt_control);
  sc.t_final = get_number_or(j, "$", "t_final_s", sc.t_final);
  sc.record_every =
      static_cast<int>(get_number_or(j, "$", "record_every_steps", 0.0));
  sc.converge_tol = get_number_or(j, "$", "converge_tol_V", sc.converge_tol);
  if (const json* scc = find(j, "scc")) sc.scc = parse_scc(*scc, n);
  if (const json* droop = find(j, "droop")) {
    sc.droop = parse_droop(*droop, "droop", n);
  }

  if (!(sc.t_final > 0.0)) fail("t_final_s", "must be positive");
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ScenarioError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ScenarioError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string trace_csv(const Trace& trace, int n) {
  std::string out = "t";
  for (int j = 1; j <= n; ++j) out += ",v" + std::to_string(j);
  for (int j = 1; j <= n; ++j) out += ",it" + std::to_string(j);
  out += ",vL";
  for (int j = 1; j <= n; ++j) out += ",u" + std::to_string(j);
  out += ",V_eta,min_b,flags\n";

  for (const TraceRecord& r : trace.records) {
    out += fmt9(r.t);
    for (int j = 0; j < n; ++j) out += "," + fmt9(r.x[2 * j]);
    for (int j = 0; j < n; ++j) out += "," + fmt9(r.x[2 * j + 1]);
    out += "," + fmt9(r.x[2 * n]);
    for (int j = 0; j < n; ++j) out += "," + fmt9(r.u[j]);
    out += "," + fmt9(r.v_eta);
    out += "," + fmt9(r.min_b);
    out += "," + std::to_string(r.flags);
    out += "\n";
  }
  return out;
}

std::string summary_json(const Scenario& sc, const Trace& trace,
                         std::optional<std::uint64_t> seed) {
  const int n = sc.params.n();
  const TraceSummary& s = trace.summary;
  json j;
  j["scenario"] = sc.name;
  j["controller"] = to_string(sc.controller);
  j["t_final_s"] = sc.t_final;
  j["dt_plant_s"] = sc.dt_plant;
  j["dt_control_s"] = sc.dt_control;
  j["converged"] = s.converged;
  j["settle_time_s"] = s.settle_time;
  j["v_bus_avg_V"] = s.v_bus_avg;
  j["max_bus_dev_last_window_V"] = s.max_bus_dev_last_window;
  j["safety_violated"] = s.safety_violated;
  j["min_b"] = s.min_b;
  j["aborted"] = s.aborted;
  j["abort_reason"] = s.abort_reason;
  Vector v_avg(n), i_avg(n);
  for (int k = 0; k < n; ++k) {
    v_avg[k] = s.x_avg[2 * k];
    i_avg[k] = s.x_avg[2 * k + 1];
  }
  j["v_avg_V"] = vector_to_json(v_avg);
  j["i_t_avg_A"] = vector_to_json(i_avg);
  j["u_avg_A"] = vector_to_json(s.u_avg);
  j["records"] = trace.records.size();
  j["wall_time_s"] = s.wall_time;
  if (seed) j["seed"] = *seed;
  return j.dump(2) + "\n";
}

SummaryTable make_summary_table(const Scenario& sc, const Equilibrium& eq,
                                const Trace& scc_trace, const Trace& droop_trace) {
  const int n = sc.params.n();
  SummaryTable table;
  const TraceSummary& a = scc_trace.summary;
  const TraceSummary& d = droop_trace.summary;
  for (int j = 0; j < n; ++j) {
    const std::string idx = std::to_string(j + 1);
    table.rows.push_back({"v_" + idx, "V", eq.x_star.v(j), true, sc.x0.v(j),
                          a.x_avg[2 * j], d.x_avg[2 * j]});
    table.rows.push_back({"i_s" + idx, "A", eq.u_star[j], false, 0.0, a.u_avg[j],
                          d.u_avg[j]});
    table.rows.push_back({"i_t" + idx, "A", eq.x_star.line_current(j), true,
                          sc.x0.line_current(j), a.x_avg[2 * j + 1],
                          d.x_avg[2 * j + 1]});
  }
  table.rows.push_back({"v_bus", "V", eq.v_bus_target, true, sc.x0.bus_voltage(),
                        a.x_avg[2 * n], d.x_avg[2 * n]});
  return table;
}

std::string table_csv(const SummaryTable& table) {
  std::string out = "state,equilibrium,initial,scc,droop,unit\n";
  for (const auto& r : table.rows) {
    out += r.state + "," + fmt9(r.equilibrium) + ",";
    if (r.has_initial) out += fmt9(r.initial);
    out += "," + fmt9(r.scc) + "," + fmt9(r.droop) + "," + r.unit + "\n";
  }
  return out;
}

std::string table_text(const SummaryTable& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %12s %12s %12s %12s  %s\n", "State",
                "Equilibrium", "Initial", "SCC", "Droop", "Units");
  out << line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%-8s %12s %12s %12s %12s  [%s]\n",
                  r.state.c_str(), fmt2(r.equilibrium).c_str(),
                  r.has_initial ? fmt2(r.initial).c_str() : "-",
                  fmt2(r.scc).c_str(), fmt2(r.droop).c_str(), r.unit.c_str());
    out << line;
  }
  return out.str();
}

std::vector<SweepOutcome> run_sweep(const Scenario& base, int samples,
                                    std::uint64_t seed, int workers) {
  if (samples < 1) throw ScenarioError("sweep: need at least one sample");
  base.validate();
  const int n = base.params.n();

  // All draws happen up front from one generator, so results are a pure
  // function of the seed regardless of scheduling.
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng](double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  std::vector<GridState> starts;
  starts.reserve(static_cast<size_t>(samples));
  const double bus_lo = base.params.v_cpl_min + 2.0;
  const double bus_hi = base.params.v_safe_hi.maxCoeff() - 2.0;
  if (!(bus_hi > bus_lo)) throw ScenarioError("sweep: safety box too narrow");
  for (int s = 0; s < samples; ++s) {
    GridState x(Vector(2 * n + 1));
    for (int j = 0; j < n; ++j) {
      const double width = base.params.v_safe_hi[j] - base.params.v_safe_lo[j];
      x.v(j) = base.params.v_safe_lo[j] + width * (0.05 + 0.90 * uniform(0.0, 1.0));
      x.line_current(j) = uniform(0.0, 40.0);
    }
    x.bus_voltage() = uniform(bus_lo, bus_hi);
    starts.push_back(std::move(x));
  }

  std::vector<SweepOutcome> results(static_cast<size_t>(2 * samples));
  std::atomic<int> cursor{0};
  auto work = [&]() {
    for (;;) {
      const int idx = cursor.fetch_add(1);
      if (idx >= 2 * samples) return;
      const int sample = idx / 2;
      const ControllerKind kind =
          idx % 2 == 0 ? ControllerKind::scc : ControllerKind::droop;
      Scenario sc = base;
      sc.x0 = starts[static_cast<size_t>(sample)];
      sc.controller = kind;
      SweepOutcome out;
      out.run = sample;
      out.controller = kind;
      try {
        out.summary = run(sc).summary;
      } catch (const std::exception& e) {
        out.summary.aborted = true;
        out.summary.abort_reason = e.what();
      }
      results[static_cast<size_t>(idx)] = std::move(out);
    }
  };

  int pool = workers;
  if (pool <= 0) {
    pool = static_cast<int>(std::thread::hardware_concurrency());
    if (pool < 1) pool = 1;
    if (pool > 8) pool = 8;
  }
  pool = std::min(pool, 2 * samples);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(pool));
  for (int t = 0; t < pool; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  return results;
}

std::string sweep_csv(const std::vector<SweepOutcome>& outcomes) {
  std::string out =
      "run,controller,converged,safety_violated,aborted,settle_time,v_bus_avg,"
      "min_b\n";
  for (const auto& o : outcomes) {
    const TraceSummary& s = o.summary;
    out += std::to_string(o.run);
    out += std::string(",") + to_string(o.controller);
    out += std::string(",") + (s.converged ? "1" : "0");
    out += std::string(",") + (s.safety_violated ? "1" : "0");
    out += std::string(",") + (s.aborted ? "1" : "0");
    out += "," + fmt9(s.settle_time);
    out += "," + fmt9(s.v_bus_avg);
    out += "," + fmt9(s.min_b);
    out += "\n";
  }
  return out;
}

}  // namespace gridscc
