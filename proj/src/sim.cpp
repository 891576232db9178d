// Copyright 2026 The droopsched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "droopsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "csv.hpp"
#include "droopsched/linmodel.hpp"
#include "droopsched/stability.hpp"

namespace droopsched {

TimeSeries::TimeSeries(std::vector<double> t, std::vector<double> y) : t_(std::move(t)), y_(std::move(y)) {
  if (t_.empty() || t_.size() != y_.size()) fail(ErrorCode::InvalidArgument, "time series needs equal, non-empty columns");
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!std::isfinite(t_[i]) || !std::isfinite(y_[i])) fail(ErrorCode::InvalidArgument, "time series has NaN values");
    if (i > 0 && !(t_[i] > t_[i - 1])) fail(ErrorCode::InvalidArgument, "non-monotone timestamps");
  }
}

double TimeSeries::at(double time) const {
  if (t_.empty()) fail(ErrorCode::InvalidArgument, "empty time series");
  if (time <= t_.front()) return y_.front();
  if (time >= t_.back()) return y_.back();
  const auto it = std::upper_bound(t_.begin(), t_.end(), time);
  const std::size_t i = static_cast<std::size_t>(it - t_.begin());
  const double w = (time - t_[i - 1]) / (t_[i] - t_[i - 1]);
  return y_[i - 1] + w * (y_[i] - y_[i - 1]);
}

std::vector<double> resample(const TimeSeries& s, double t0, double t_end, double dt) {
  if (!(dt > 0.0) || t_end < t0) fail(ErrorCode::InvalidArgument, "resample: need dt > 0 and t_end >= t0");
  const long count = static_cast<long>(std::floor((t_end - t0) / dt + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) out.push_back(s.at(t0 + static_cast<double>(k) * dt));
  return out;
}

namespace {

struct Column {
  std::vector<double> t, y;
  int last_line = 0;
};

void push_sample(Column& c, const csv::Table& tab, const csv::Row& row, double t, double y) {
  if (!std::isfinite(t) || !std::isfinite(y))
    fail(ErrorCode::Parse, fmt::format("{}:{}: NaN value", tab.path, row.line));
  if (!c.t.empty() && !(t > c.t.back()))
    fail(ErrorCode::Parse, fmt::format("{}:{}: non-monotone timestamp {}", tab.path, row.line, t));
  c.t.push_back(t);
  c.y.push_back(y);
  c.last_line = row.line;
}

// All series read from one file must share the time axis.
void check_aligned(const std::string& path, const std::vector<const Column*>& cols) {
  const Column* ref = nullptr;
  for (const Column* c : cols) {
    if (c->t.empty()) continue;
    if (!ref) {
      ref = c;
      continue;
    }
    if (c->t != ref->t) fail(ErrorCode::Parse, fmt::format("{}: series are not on a common time axis", path));
  }
}

}  // namespace

ScenarioData ingest_profiles(const ProfilePaths& paths, const NetworkModel& model, const std::vector<DerUnit>& ders,
                             double omega_star) {
  const int n = static_cast<int>(model.size());
  ScenarioData sc;
  sc.p_load.assign(static_cast<std::size_t>(n), TimeSeries::constant(0.0));
  sc.q_load.assign(static_cast<std::size_t>(n), TimeSeries::constant(0.0));
  std::set<int> der_nodes, pv_nodes;
  for (const auto& d : ders) {
    der_nodes.insert(d.node);
    if (d.cap.kind == DerKind::PvInverter) pv_nodes.insert(d.node);
  }
  for (const auto& d : ders)
    if (d.cap.kind == DerKind::PvInverter) sc.pv_avail[d.node] = TimeSeries::constant(d.cap.s_max);
  sc.omega = TimeSeries::constant(omega_star);

  if (!paths.loads.empty()) {
    const csv::Table t = csv::read(paths.loads);
    const auto ct = t.column("time_s"), cn = t.column("node"), cp = t.column("p_load_pu"), cq = t.column("q_load_pu");
    std::vector<Column> p(static_cast<std::size_t>(n)), q(static_cast<std::size_t>(n));
    for (const auto& row : t.rows) {
      const int node = csv::to_int(t, row, cn);
      if (node < 1 || node > n) fail(ErrorCode::Parse, fmt::format("{}:{}: unknown node {}", t.path, row.line, node));
      const double time = csv::to_double(t, row, ct);
      push_sample(p[static_cast<std::size_t>(node - 1)], t, row, time, csv::to_double(t, row, cp));
      push_sample(q[static_cast<std::size_t>(node - 1)], t, row, time, csv::to_double(t, row, cq));
    }
    std::vector<const Column*> all;
    for (const auto& c : p) all.push_back(&c);
    check_aligned(t.path, all);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (p[k].t.empty()) continue;
      sc.p_load[k] = TimeSeries(p[k].t, p[k].y);
      sc.q_load[k] = TimeSeries(q[k].t, q[k].y);
    }
  }

  if (!paths.pv.empty()) {
    const csv::Table t = csv::read(paths.pv);
    const auto ct = t.column("time_s"), cn = t.column("node"), ca = t.column("p_avail_pu");
    std::map<int, Column> cols;
    for (const auto& row : t.rows) {
      const int node = csv::to_int(t, row, cn);
      if (!pv_nodes.count(node))
        fail(ErrorCode::Parse, fmt::format("{}:{}: node {} has no PV unit", t.path, row.line, node));
      const double a = csv::to_double(t, row, ca);
      if (a < 0.0) fail(ErrorCode::Parse, fmt::format("{}:{}: negative availability", t.path, row.line));
      push_sample(cols[node], t, row, csv::to_double(t, row, ct), a);
    }
    std::vector<const Column*> all;
    for (const auto& [node, c] : cols) all.push_back(&c);
    check_aligned(t.path, all);
    for (const auto& [node, c] : cols) sc.pv_avail[node] = TimeSeries(c.t, c.y);
  }

  if (!paths.frequency.empty()) {
    const csv::Table t = csv::read(paths.frequency);
    const auto ct = t.column("time_s"), cw = t.column("omega_pu");
    Column c;
    for (const auto& row : t.rows) {
      const double w = csv::to_double(t, row, cw);
      if (!(w > 0.0)) fail(ErrorCode::Parse, fmt::format("{}:{}: frequency must be positive", t.path, row.line));
      push_sample(c, t, row, csv::to_double(t, row, ct), w);
    }
    if (c.t.empty()) fail(ErrorCode::Parse, fmt::format("{}: no samples", t.path));
    sc.omega = TimeSeries(c.t, c.y);
  }

  if (!paths.events.empty()) {
    const csv::Table t = csv::read(paths.events);
    const auto ct = t.column("time_s"), cn = t.column("node"), ca = t.column("action");
    for (const auto& row : t.rows) {
      Event e;
      e.time = csv::to_double(t, row, ct);
      e.node = csv::to_int(t, row, cn);
      const std::string& a = row.fields[ca];
      if (a == "connect")
        e.connect = true;
      else if (a == "disconnect")
        e.connect = false;
      else
        fail(ErrorCode::Parse, fmt::format("{}:{}: action must be connect or disconnect, got '{}'", t.path, row.line, a));
      if (!der_nodes.count(e.node))
        fail(ErrorCode::Parse, fmt::format("{}:{}: node {} has no DER", t.path, row.line, e.node));
      if (!std::isfinite(e.time) || e.time < 0.0 || (!sc.events.empty() && e.time < sc.events.back().time))
        fail(ErrorCode::Parse, fmt::format("{}:{}: event times must be non-negative and sorted", t.path, row.line));
      sc.events.push_back(e);
    }
  }
  return sc;
}

Controller parse_controller(const std::string& s) {
  if (s == "scheduled") return Controller::Scheduled;
  if (s == "static") return Controller::Static;
  if (s == "none") return Controller::None;
  if (s == "setpoint-hold") return Controller::SetpointHold;
  fail(ErrorCode::InvalidArgument, fmt::format("unknown controller '{}'", s));
}

const char* controller_name(Controller c) {
  switch (c) {
    case Controller::Scheduled:
      return "scheduled";
    case Controller::Static:
      return "static";
    case Controller::None:
      return "none";
    case Controller::SetpointHold:
      return "setpoint-hold";
  }
  return "?";
}

namespace {

long steps_of(double span, double dt) { return std::lround(span / dt); }

bool is_multiple(double span, double dt) {
  const double r = span / dt;
  return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(tau_s > 0.0) || !is_multiple(tau_s, dt)) fail(ErrorCode::InvalidArgument, "tau_s must be a positive multiple of dt");
  if (!(duration >= tau_s) || !is_multiple(duration, dt))
    fail(ErrorCode::InvalidArgument, "duration must be a multiple of dt and at least tau_s");
  if (!(record_every > 0.0) || !is_multiple(record_every, dt))
    fail(ErrorCode::InvalidArgument, "record_every must be a positive multiple of dt");
  if (!(v_star > 0.0) || !(omega_star > 0.0)) fail(ErrorCode::InvalidArgument, "v_star and omega_star must be positive");
  if (!std::isfinite(k_agg)) fail(ErrorCode::InvalidArgument, "k_agg must be finite");
  if (!(gain_margin > 0.0) || !(freq_gain_box > 0.0)) fail(ErrorCode::InvalidArgument, "gain margin and box must be positive");
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

PowerPair setpoint_of(const DerUnit& d) { return {d.p_star, d.q_star}; }

struct Engine {
  const RunInputs& in;
  const SimConfig& sc;
  const SchedulerConfig& cfg;
  int n;
  std::vector<DerUnit> ders, shadow;
  std::vector<PowerPair> held;  // setpoint-hold offsets
  SchedulerState state;
  RX rx;
  StabilityParams stab;
  PowerFlowSolution pf, pf_shadow;
  bool have_shadow_pf = false;
  std::vector<double> p_inj, q_inj, p_sh, q_sh;
  double t = 0.0;
  double omega = 1.0;
  SimTrace trace;

  explicit Engine(const RunInputs& r) : in(r), sc(r.sim), cfg(r.sched), n(static_cast<int>(r.network.size())) {}

  std::size_t der_index(int node) const {
    for (std::size_t i = 0; i < ders.size(); ++i)
      if (ders[i].node == node) return i;
    fail(ErrorCode::InvalidArgument, fmt::format("no DER at node {}", node));
  }

  void exogenous(double time) {
    omega = in.scenario.omega.at(time);
    for (std::size_t i = 0; i < ders.size(); ++i) {
      DerUnit& d = ders[i];
      if (d.cap.kind == DerKind::PvInverter) {
        const auto it = in.scenario.pv_avail.find(d.node);
        const double a = it == in.scenario.pv_avail.end() ? d.cap.s_max : it->second.at(time);
        d.cap.p_avail = std::min(a, d.cap.s_max);
        d.p_star = d.cap.p_avail;
        d.q_star = 0.0;
      }
      shadow[i].cap = d.cap;
      shadow[i].p_star = d.p_star;
      shadow[i].q_star = d.q_star;
    }
  }

  void injections(const std::vector<DerUnit>& units, std::vector<double>& p, std::vector<double>& q) const {
    for (int b = 0; b < n; ++b) {
      p[static_cast<std::size_t>(b)] = -in.scenario.p_load[static_cast<std::size_t>(b)].at(t);
      q[static_cast<std::size_t>(b)] = -in.scenario.q_load[static_cast<std::size_t>(b)].at(t);
    }
    for (const auto& d : units) {
      p[static_cast<std::size_t>(d.node - 1)] += d.p_c;
      q[static_cast<std::size_t>(d.node - 1)] += d.q_c;
    }
  }

  void solve(bool with_shadow) {
    injections(ders, p_inj, q_inj);
    pf = solve_power_flow(in.network, p_inj, q_inj, {}, pf.v.empty() ? nullptr : &pf);
    if (with_shadow) {
      injections(shadow, p_sh, q_sh);
      pf_shadow = solve_power_flow(in.network, p_sh, q_sh, {}, have_shadow_pf ? &pf_shadow : nullptr);
      have_shadow_pf = true;
    }
  }

  double delivered() const { return pf.p_pcc - pf_shadow.p_pcc; }

  void set_member(int node, bool on) {
    const bool present = state.slot_of(node) >= 0;
    const DerUnit& d = ders[der_index(node)];
    if (on && !present) add_unit(state, node, d.tau_p, d.tau_q, draw_freq_weight(sc.seed, node, cfg));
    if (!on && present) remove_unit(state, node);
  }

  void apply_physical(const Event& e) {
    DerUnit& d = ders[der_index(e.node)];
    d.online = e.connect;
    shadow[der_index(e.node)].online = e.connect;
    if (!e.connect) {
      d.gains = {};
      held[der_index(e.node)] = {};
    } else if (sc.controller == Controller::Static) {
      d.gains = sc.static_gains;
    }
  }

  void boundary(const std::vector<Event>& membership) {
    solve_shadow_only();
    for (const auto& e : membership) set_member(e.node, e.connect);

    Eigen::VectorXd v_meas(n);
    for (int b = 0; b < n; ++b) v_meas(b) = pf.v[static_cast<std::size_t>(b + 1)];
    const double dw = omega - sc.omega_star;
    SchedRecord rec;
    rec.t = t;
    rec.e_meas = delivered() - sc.k_agg * dw;

    if (sc.controller == Controller::Scheduled) {
      SchedulingPoint rho{v_meas, sc.k_agg, omega, sc.omega_star, t};
      Eigen::VectorXd p_droop = Eigen::VectorXd::Zero(n), q_droop = Eigen::VectorXd::Zero(n);
      for (const auto& d : ders) {
        if (!d.online) continue;
        const double dv = v_meas(d.node - 1) - sc.v_star;
        p_droop(d.node - 1) += d.gains.k_pv * dv + d.gains.k_pf * dw;
        q_droop(d.node - 1) += d.gains.k_qv * dv + d.gains.k_qf * dw;
      }
      SensitivityModel sm;
      sm.R = rx.R;
      sm.X = rx.X;
      sm.H = build_pcc_sensitivity(in.network, p_inj, q_inj, 1e-5, &pf).H;
      recenter(sm, rho, p_droop, q_droop, delivered());
      const SampleSet samples = draw_samples(v_meas, cfg, mix_seed(sc.seed, static_cast<std::uint64_t>(trace.sched.size())));
      auto [next, gains] = schedule_step(state, sm, rho, samples, cfg, stab);
      state = std::move(next);
      for (std::size_t j = 0; j < state.slots(); ++j) ders[der_index(state.nodes[j])].gains = gains[j];
      const Eigen::VectorXd dv = (v_meas.array() - cfg.v_star).matrix();
      rec.e_model = freq_error(sm, state, rho, dv);
      rec.l = cvar_constraints(voltage_model(sm, state, rho, dv), samples, state.cvar_hi, state.cvar_lo, cfg);
      rec.mu = state.mu;
      rec.lambda = state.lambda;
      rec.cvar_hi = state.cvar_hi;
      rec.cvar_lo = state.cvar_lo;
    } else {
      // cost accounting with the baseline's own gains
      for (std::size_t j = 0; j < state.slots(); ++j) {
        const DerUnit& d = ders[der_index(state.nodes[j])];
        state.set_gains(j, sc.controller == Controller::Static && d.online ? sc.static_gains : DroopGains{});
      }
      if (sc.controller == Controller::SetpointHold) {
        for (std::size_t i = 0; i < ders.size(); ++i) {
          const DerUnit& d = ders[i];
          if (!d.online) continue;
          const double dv = v_meas(d.node - 1) - sc.v_star;
          const DroopGains& g = sc.static_gains;
          held[i] = {g.k_pv * dv + g.k_pf * dw, g.k_qv * dv + g.k_qf * dw};
        }
      }
      rec.e_model = rec.e_meas;
      rec.mu = Eigen::VectorXd::Zero(2 * n);
      rec.cvar_hi = Eigen::VectorXd::Zero(n);
      rec.cvar_lo = Eigen::VectorXd::Zero(n);
      rec.l = Eigen::VectorXd::Zero(2 * n);
    }
    rec.cost = cost(state, cfg);
    for (const auto& d : ders) {
      rec.gains.push_back(d.gains);
      rec.scheduled.push_back(state.slot_of(d.node) >= 0);
    }
    trace.sched.push_back(std::move(rec));
  }

  void solve_shadow_only() {
    injections(shadow, p_sh, q_sh);
    pf_shadow = solve_power_flow(in.network, p_sh, q_sh, {}, have_shadow_pf ? &pf_shadow : nullptr);
    have_shadow_pf = true;
  }

  void step_units() {
    for (std::size_t i = 0; i < ders.size(); ++i) {
      DerUnit& d = ders[i];
      DerUnit& s = shadow[i];
      if (!d.online) {
        d = step_der(d, 0.0, 0.0, sc.dt);
        s = step_der(s, 0.0, 0.0, sc.dt);
        continue;
      }
      const double v_local = pf.v[static_cast<std::size_t>(d.node)];
      PowerPair u = droop_input(d, v_local, sc.v_star, omega, sc.omega_star);
      u.p += held[i].p;
      u.q += held[i].q;
      d = step_der(d, u.p, u.q, sc.dt);
      const PowerPair u0 = setpoint_of(s);
      s = step_der(s, u0.p, u0.q, sc.dt);
    }
  }

  void record() {
    StateRecord r;
    r.t = t;
    r.v = pf.v;
    for (const auto& d : ders) {
      r.p_c.push_back(d.p_c);
      r.q_c.push_back(d.q_c);
    }
    r.omega = omega;
    r.dp_required = tso_requirement(sc.k_agg, omega, sc.omega_star);
    r.dp_delivered = delivered();
    trace.states.push_back(std::move(r));
  }

  void extremes() {
    const auto [lo, hi] = std::minmax_element(pf.v.begin() + 1, pf.v.end());
    trace.vmax_step.push_back(*hi);
    trace.vmin_step.push_back(*lo);
  }

  SimTrace run() {
    sc.validate();
    cfg.validate();
    if (std::abs(cfg.tau_s - sc.tau_s) > 1e-12 || std::abs(cfg.v_star - sc.v_star) > 1e-12)
      fail(ErrorCode::InvalidArgument, "scheduler and simulation disagree on tau_s or v_star");
    const auto un = static_cast<std::size_t>(n);
    if (in.scenario.p_load.size() != un || in.scenario.q_load.size() != un)
      fail(ErrorCode::InvalidArgument, "scenario load profiles do not match the network");
    std::set<int> seen;
    for (const auto& d : in.ders) {
      if (d.node < 1 || d.node > n) fail(ErrorCode::InvalidArgument, fmt::format("DER node {} outside the feeder", d.node));
      if (!seen.insert(d.node).second) fail(ErrorCode::InvalidArgument, fmt::format("two DERs at node {}", d.node));
      if (!(sc.dt < std::min(d.tau_p, d.tau_q)))
        fail(ErrorCode::InvalidArgument, fmt::format("dt must be below the DER time constants (node {})", d.node));
    }

    ders = in.ders;
    std::sort(ders.begin(), ders.end(), [](const DerUnit& a, const DerUnit& b) { return a.node < b.node; });
    held.assign(ders.size(), {});
    // units whose first event is a connect start offline
    for (auto& d : ders) {
      d.online = true;
      for (const auto& e : in.scenario.events)
        if (e.node == d.node) {
          d.online = !e.connect;
          break;
        }
      if (d.cap.kind == DerKind::FlexibleLoad) {
        d.p_star = 0.5 * (d.cap.p_min + d.cap.p_max);
        d.q_star = d.p_star * std::tan(std::acos(d.cap.pf_fixed));
      }
      d.gains = (sc.controller == Controller::Static && d.online) ? sc.static_gains : DroopGains{};
    }
    shadow = ders;
    for (auto& s : shadow) s.gains = {};

    rx = build_rx(in.network);
    stab = make_stability_params(fleet_gamma(in.network, ders), sc.gain_margin, sc.freq_gain_box);
    state = make_scheduler_state(un);
    for (const auto& d : ders)
      if (d.online) set_member(d.node, true);

    trace.der_nodes.clear();
    for (const auto& d : ders) trace.der_nodes.push_back(d.node);
    trace.dt = sc.dt;
    trace.tau_s = sc.tau_s;
    trace.v_min = cfg.v_min;
    trace.v_max = cfg.v_max;
    trace.gamma = stab.gamma;

    p_inj.assign(un, 0.0);
    q_inj = p_sh = q_sh = p_inj;

    const long total = steps_of(sc.duration, sc.dt);
    const long per_period = steps_of(sc.tau_s, sc.dt);
    const long per_record = steps_of(sc.record_every, sc.dt);
    trace.vmax_step.reserve(static_cast<std::size_t>(total));
    trace.vmin_step.reserve(static_cast<std::size_t>(total));

    t = 0.0;
    try {
      exogenous(t);
      // start from the projected setpoints in steady state
      for (std::size_t i = 0; i < ders.size(); ++i) {
        for (DerUnit* d : {&ders[i], &shadow[i]}) {
          if (d->online) {
            const PowerPair p = project_capability(d->cap, d->p_star, d->q_star);
            d->p_c = p.p;
            d->q_c = p.q;
          } else {
            d->p_c = d->q_c = 0.0;
          }
        }
      }
      solve(true);
    } catch (const Error& e) {
      throw SimulationError(e.code(), fmt::format("initial power flow failed: {}", e.what()), 0.0, trace);
    }
    record();

    std::size_t next_event = 0;
    std::vector<Event> pending;
    const auto& events = in.scenario.events;
    for (long k = 0; k < total; ++k) {
      t = static_cast<double>(k) * sc.dt;
      try {
        exogenous(t);
        std::vector<Event> due;
        while (next_event < events.size() && events[next_event].time <= t + 1e-9 * sc.dt) due.push_back(events[next_event++]);
        if (k % per_period == 0) {
          // measure first, then let the physics change
          pending.insert(pending.end(), due.begin(), due.end());
          boundary(pending);
          pending.clear();
          for (const auto& e : due) apply_physical(e);
        } else {
          for (const auto& e : due) apply_physical(e);
          pending.insert(pending.end(), due.begin(), due.end());
        }
        step_units();
        t = static_cast<double>(k + 1) * sc.dt;
        const bool rec = (k + 1) % per_record == 0;
        exogenous(t);
        solve(rec);
      } catch (const SimulationError&) {
        throw;
      } catch (const Error& e) {
        throw SimulationError(e.code(), fmt::format("simulation failed at t = {} s: {}", t, e.what()), t, trace);
      }
      extremes();
      if ((k + 1) % per_record == 0) record();
    }
    return std::move(trace);
  }
};

}  // namespace

SimTrace run_closed_loop(const RunInputs& in) {
  Engine eng(in);
  return eng.run();
}

std::vector<std::pair<std::string, double>> Metrics::rows(const std::vector<int>& der_nodes) const {
  std::vector<std::pair<std::string, double>> out = {
      {"total_cost", total_cost},
      {"cost_sum", cost_sum},
      {"violation_duration_s", violation_duration_s},
      {"max_voltage", max_voltage},
      {"min_voltage", min_voltage},
      {"max_excursion", max_excursion},
      {"rms_freq_error", rms_freq_error},
  };
  for (std::size_t i = 0; i < effort.size() && i < der_nodes.size(); ++i)
    out.emplace_back(fmt::format("effort_node_{}", der_nodes[i]), effort[i]);
  return out;
}

Metrics compute_metrics(const SimTrace& trace) {
  Metrics m;
  double e2 = 0.0;
  m.effort.assign(trace.der_nodes.size(), 0.0);
  for (const auto& r : trace.sched) {
    m.cost_sum += r.cost;
    e2 += r.e_meas * r.e_meas;
    for (std::size_t i = 0; i < r.gains.size() && i < m.effort.size(); ++i) {
      const DroopGains& g = r.gains[i];
      m.effort[i] += (std::abs(g.k_pv) + std::abs(g.k_pf) + std::abs(g.k_qv) + std::abs(g.k_qf)) * trace.tau_s;
    }
  }
  m.total_cost = m.cost_sum * trace.tau_s;
  m.rms_freq_error = trace.sched.empty() ? 0.0 : std::sqrt(e2 / static_cast<double>(trace.sched.size()));
  if (!trace.states.empty()) {
    const auto& v = trace.states.front().v;
    m.max_voltage = *std::max_element(v.begin() + 1, v.end());
    m.min_voltage = *std::min_element(v.begin() + 1, v.end());
  } else if (!trace.vmax_step.empty()) {
    m.max_voltage = trace.vmax_step.front();
    m.min_voltage = trace.vmin_step.front();
  }
  long bad = 0;
  for (std::size_t k = 0; k < trace.vmax_step.size(); ++k) {
    m.max_voltage = std::max(m.max_voltage, trace.vmax_step[k]);
    m.min_voltage = std::min(m.min_voltage, trace.vmin_step[k]);
    if (trace.vmax_step[k] > trace.v_max || trace.vmin_step[k] < trace.v_min) ++bad;
  }
  m.violation_duration_s = static_cast<double>(bad) * trace.dt;
  m.max_excursion = std::max({0.0, m.max_voltage - trace.v_max, trace.v_min - m.min_voltage});
  return m;
}

std::string iso_duration(double seconds) {
  std::string s = fmt::format("{:.6f}", seconds);
  // trim to at least two decimals
  while (s.size() > 3 && s.back() == '0' && s[s.size() - 3] != '.') s.pop_back();
  return "PT" + s + "S";
}

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::Io, fmt::format("cannot write '{}'", p.string()));
  return f;
}

}  // namespace

void write_trace(const SimTrace& trace, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, fmt::format("cannot create '{}': {}", dir, ec.message()));
  const fs::path d(dir);
  const std::size_t nb = trace.states.empty() ? 0 : trace.states.front().v.size();

  {
    auto f = open_out(d / "voltages.csv");
    f << "time,t_s";
    for (std::size_t b = 0; b < nb; ++b) f << ",v_" << b;
    f << "\n";
    for (const auto& r : trace.states) {
      f << iso_duration(r.t) << ',' << num(r.t);
      for (double v : r.v) f << ',' << num(v);
      f << "\n";
    }
  }
  {
    auto f = open_out(d / "outputs.csv");
    f << "time,t_s,node,p_c,q_c\n";
    for (const auto& r : trace.states)
      for (std::size_t i = 0; i < trace.der_nodes.size(); ++i)
        f << iso_duration(r.t) << ',' << num(r.t) << ',' << trace.der_nodes[i] << ',' << num(r.p_c[i]) << ','
          << num(r.q_c[i]) << "\n";
  }
  {
    auto f = open_out(d / "frequency.csv");
    f << "time,t_s,omega,dp_required,dp_delivered,error\n";
    for (const auto& r : trace.states)
      f << iso_duration(r.t) << ',' << num(r.t) << ',' << num(r.omega) << ',' << num(r.dp_required) << ','
        << num(r.dp_delivered) << ',' << num(r.dp_delivered - r.dp_required) << "\n";
  }
  {
    auto f = open_out(d / "gains.csv");
    f << "time,t_s,node,scheduled,k_pv,k_pf,k_qv,k_qf\n";
    for (const auto& r : trace.sched)
      for (std::size_t i = 0; i < r.gains.size(); ++i) {
        const DroopGains& g = r.gains[i];
        f << iso_duration(r.t) << ',' << num(r.t) << ',' << trace.der_nodes[i] << ',' << (r.scheduled[i] ? 1 : 0) << ','
          << num(g.k_pv) << ',' << num(g.k_pf) << ',' << num(g.k_qv) << ',' << num(g.k_qf) << "\n";
      }
  }
  {
    auto f = open_out(d / "duals.csv");
    const std::size_t n = nb == 0 ? 0 : nb - 1;
    f << "time,t_s,cost,e_meas,e_model,lambda_lo,lambda_hi";
    for (std::size_t i = 1; i <= n; ++i) f << ",mu_hi_" << i;
    for (std::size_t i = 1; i <= n; ++i) f << ",mu_lo_" << i;
    for (std::size_t i = 1; i <= n; ++i) f << ",cvar_hi_" << i;
    for (std::size_t i = 1; i <= n; ++i) f << ",cvar_lo_" << i;
    f << "\n";
    for (const auto& r : trace.sched) {
      f << iso_duration(r.t) << ',' << num(r.t) << ',' << num(r.cost) << ',' << num(r.e_meas) << ',' << num(r.e_model)
        << ',' << num(r.lambda(0)) << ',' << num(r.lambda(1));
      for (Eigen::Index i = 0; i < r.mu.size(); ++i) f << ',' << num(r.mu(i));
      for (Eigen::Index i = 0; i < r.cvar_hi.size(); ++i) f << ',' << num(r.cvar_hi(i));
      for (Eigen::Index i = 0; i < r.cvar_lo.size(); ++i) f << ',' << num(r.cvar_lo(i));
      f << "\n";
    }
  }
  {
    auto f = open_out(d / "metrics.csv");
    f << "metric,value\n";
    for (const auto& [k, v] : compute_metrics(trace).rows(trace.der_nodes)) f << k << ',' << num(v) << "\n";
  }
}

}  // namespace droopsched
