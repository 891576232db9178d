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

#include "droopsched/droopsched.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <span>
#include <map>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "csv.hpp"
#include "droopsched/config.hpp"
#include "droopsched/droop.hpp"
#include "droopsched/error.hpp"
#include "droopsched/network.hpp"
#include "droopsched/report.hpp"
#include "droopsched/sim.hpp"
#include "droopsched/stability.hpp"
#include "droopsched/synth.hpp"

struct ds_config {
  droopsched::RunConfig cfg;
};

struct ds_trace {
  droopsched::SimTrace trace;
  bool has_trace = false;
  double failure_time = -1.0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct ds_network {
  droopsched::NetworkModel model;
};

namespace {

using droopsched::Error;
using droopsched::ErrorCode;

thread_local std::string last_error;

ds_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
      return DS_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse:
      return DS_ERR_PARSE;
    case ErrorCode::Io:
      return DS_ERR_IO;
    case ErrorCode::Topology:
      return DS_ERR_TOPOLOGY;
    case ErrorCode::NoConvergence:
      return DS_ERR_NO_CONVERGENCE;
    case ErrorCode::Infeasible:
      return DS_ERR_INFEASIBLE;
    case ErrorCode::StaleModel:
      return DS_ERR_STALE_MODEL;
    case ErrorCode::Internal:
      return DS_ERR_INTERNAL;
  }
  return DS_ERR_INTERNAL;
}

template <class F>
ds_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return DS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DS_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return DS_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) droopsched::fail(ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* ds_version(void) { return "0.1.0"; }

const char* ds_status_name(ds_status status) {
  switch (status) {
    case DS_OK:
      return "ok";
    case DS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case DS_ERR_PARSE:
      return "parse error";
    case DS_ERR_IO:
      return "i/o error";
    case DS_ERR_TOPOLOGY:
      return "topology error";
    case DS_ERR_NO_CONVERGENCE:
      return "no convergence";
    case DS_ERR_INFEASIBLE:
      return "infeasible";
    case DS_ERR_STALE_MODEL:
      return "stale model";
    case DS_ERR_INTERNAL:
      return "internal error";
    case DS_ERR_SIMULATION:
      return "simulation failure";
  }
  return "unknown status";
}

const char* ds_last_error(void) { return last_error.c_str(); }

ds_status ds_config_load(const char* path, ds_config** out) {
  return guarded([&] {
    require(path && out, "ds_config_load: null argument");
    *out = nullptr;
    auto c = std::make_unique<ds_config>();
    c->cfg = droopsched::load_config(path);
    *out = c.release();
  });
}

ds_status ds_config_set(ds_config* cfg, const char* section, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && section && key && value, "ds_config_set: null argument");
    droopsched::set_config_value(cfg->cfg, section, key, value);
  });
}

ds_status ds_config_get(const ds_config* cfg, const char* section, const char* key, char* buf, size_t len,
                        size_t* needed) {
  return guarded([&] {
    require(cfg && section && key, "ds_config_get: null argument");
    const std::string v = droopsched::get_config_value(cfg->cfg, section, key);
    if (needed) *needed = v.size() + 1;
    require(buf && len > v.size(), "ds_config_get: buffer too small");
    std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

ds_status ds_config_validate(const ds_config* cfg) {
  return guarded([&] {
    require(cfg, "ds_config_validate: null argument");
    droopsched::validate_config(cfg->cfg);
  });
}

ds_status ds_config_write(const ds_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg && path, "ds_config_write: null argument");
    droopsched::write_config(cfg->cfg, path);
  });
}

void ds_config_free(ds_config* cfg) { delete cfg; }

ds_status ds_run(const ds_config* cfg, ds_trace** out) {
  if (out) *out = nullptr;
  auto t = std::make_unique<ds_trace>();
  bool sim_failed = false;
  const ds_status s = guarded([&] {
    require(cfg && out, "ds_run: null argument");
    const droopsched::RunInputs in = droopsched::build_inputs(cfg->cfg);
    try {
      t->trace = droopsched::run_closed_loop(in);
    } catch (const droopsched::SimulationError& e) {
      t->trace = e.partial();
      t->failure_time = e.time();
      sim_failed = true;
      throw;
    }
  });
  if (s != DS_OK && !sim_failed) return s;
  t->has_trace = true;
  t->metrics = droopsched::compute_metrics(t->trace).rows(t->trace.der_nodes);
  *out = t.release();
  return sim_failed ? DS_ERR_SIMULATION : DS_OK;
}

ds_status ds_trace_write(const ds_trace* trace, const char* dir) {
  return guarded([&] {
    require(trace && dir, "ds_trace_write: null argument");
    require(trace->has_trace, "ds_trace_write: handle holds no trace");
    droopsched::write_trace(trace->trace, dir);
  });
}

double ds_trace_failure_time(const ds_trace* trace) { return trace ? trace->failure_time : -1.0; }

size_t ds_trace_metric_count(const ds_trace* trace) { return trace ? trace->metrics.size() : 0; }

ds_status ds_trace_metric_at(const ds_trace* trace, size_t index, const char** name, double* value) {
  return guarded([&] {
    require(trace && name && value, "ds_trace_metric_at: null argument");
    require(index < trace->metrics.size(), "ds_trace_metric_at: index out of range");
    *name = trace->metrics[index].first.c_str();
    *value = trace->metrics[index].second;
  });
}

ds_status ds_trace_metric(const ds_trace* trace, const char* name, double* value) {
  return guarded([&] {
    require(trace && name && value, "ds_trace_metric: null argument");
    for (const auto& [k, v] : trace->metrics)
      if (k == name) {
        *value = v;
        return;
      }
    droopsched::fail(ErrorCode::InvalidArgument, fmt::format("no metric named '{}'", name));
  });
}

void ds_trace_free(ds_trace* trace) { delete trace; }

ds_status ds_report(const char* trace_dir, double v_min, double v_max, const char* plot_dir, ds_trace** out) {
  return guarded([&] {
    require(trace_dir && out, "ds_report: null argument");
    require(v_min < v_max, "ds_report: v_min must be below v_max");
    *out = nullptr;
    auto t = std::make_unique<ds_trace>();
    const droopsched::FileMetrics fm = droopsched::metrics_from_files(trace_dir, v_min, v_max);
    t->metrics = fm.metrics.rows(fm.der_nodes);
    if (plot_dir) droopsched::write_plot_data(trace_dir, plot_dir);
    *out = t.release();
  });
}

ds_status ds_synth(const char* scenario, const char* dir) {
  return guarded([&] {
    require(scenario && dir, "ds_synth: null argument");
    droopsched::synth::write_scenario(droopsched::synth::parse_scenario(scenario), dir);
  });
}

ds_status ds_network_load(const char* path, double v_sub, ds_network** out) {
  return guarded([&] {
    require(path && out, "ds_network_load: null argument");
    *out = nullptr;
    require(v_sub > 0.0, "ds_network_load: v_sub must be positive");
    auto n = std::make_unique<ds_network>();
    n->model = droopsched::load_network(path, v_sub);
    *out = n.release();
  });
}

size_t ds_network_buses(const ds_network* net) { return net ? net->model.size() : 0; }

ds_status ds_injections_load(const ds_network* net, const char* path, double* p, double* q) {
  return guarded([&] {
    require(net && path && p && q, "ds_injections_load: null argument");
    const auto n = static_cast<int>(net->model.size());
    const droopsched::csv::Table t = droopsched::csv::read(path);
    const auto cn = t.column("node"), cp = t.column("p_pu"), cq = t.column("q_pu");
    std::vector<double> pv(static_cast<std::size_t>(n), 0.0), qv = pv;
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& row : t.rows) {
      const int node = droopsched::csv::to_int(t, row, cn);
      if (node < 1 || node > n)
        droopsched::fail(ErrorCode::Parse, fmt::format("{}:{}: unknown node {}", path, row.line, node));
      const auto k = static_cast<std::size_t>(node - 1);
      if (seen[k]) droopsched::fail(ErrorCode::Parse, fmt::format("{}:{}: node {} listed twice", path, row.line, node));
      seen[k] = true;
      pv[k] = droopsched::csv::to_double(t, row, cp);
      qv[k] = droopsched::csv::to_double(t, row, cq);
    }
    std::copy(pv.begin(), pv.end(), p);
    std::copy(qv.begin(), qv.end(), q);
  });
}

ds_status ds_powerflow(const ds_network* net, const double* p, const double* q, double* v, double* p_pcc,
                       double* q_pcc, int* iterations) {
  return guarded([&] {
    require(net && p && q && v, "ds_powerflow: null argument");
    const std::size_t n = net->model.size();
    const auto sol = droopsched::solve_power_flow(net->model, std::span<const double>(p, n),
                                                  std::span<const double>(q, n));
    std::copy(sol.v.begin(), sol.v.end(), v);
    if (p_pcc) *p_pcc = sol.p_pcc;
    if (q_pcc) *q_pcc = sol.q_pcc;
    if (iterations) *iterations = sol.iterations;
  });
}

void ds_network_free(ds_network* net) { delete net; }

ds_status ds_stability_check(const ds_network* net, const char* der_path, const char* gains_path, double* gamma,
                             ds_stability_row* rows, size_t cap, size_t* count) {
  return guarded([&] {
    require(net && der_path && gains_path && gamma && count, "ds_stability_check: null argument");
    require(rows || cap == 0, "ds_stability_check: null rows with nonzero capacity");
    const auto ders = droopsched::load_ders(der_path);
    const auto gains = droopsched::load_gains(gains_path);
    std::map<int, const droopsched::DerUnit*> by_node;
    for (const auto& d : ders) by_node[d.node] = &d;
    const double g = droopsched::fleet_gamma(net->model, ders);
    const auto params = droopsched::make_stability_params(g);
    std::vector<ds_stability_row> out;
    for (const auto& ng : gains) {
      const auto it = by_node.find(ng.node);
      if (it == by_node.end())
        droopsched::fail(ErrorCode::Parse, fmt::format("{}: node {} has no DER in {}", gains_path, ng.node, der_path));
      const droopsched::DerUnit& d = *it->second;
      ds_stability_row r{};
      r.node = ng.node;
      r.a = ng.gains.k_pv / d.tau_p;
      r.b = ng.gains.k_qv / d.tau_q;
      r.form = droopsched::stability_form(r.a, r.b, g);
      r.pass = droopsched::check_gains(ng.gains, d.tau_p, d.tau_q, params) ? 1 : 0;
      out.push_back(r);
    }
    *gamma = g;
    *count = out.size();
    for (std::size_t i = 0; i < out.size() && i < cap; ++i) rows[i] = out[i];
  });
}

}  // extern "C"
