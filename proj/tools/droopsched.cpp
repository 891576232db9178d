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

// Command line front end. Talks to the library only through droopsched.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "droopsched/droopsched.h"

namespace {

namespace fs = std::filesystem;

// exit codes
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSimFailure = 2;
constexpr int kCheckFailed = 3;

struct ConfigDeleter {
  void operator()(ds_config* c) const { ds_config_free(c); }
};
struct TraceDeleter {
  void operator()(ds_trace* t) const { ds_trace_free(t); }
};
struct NetworkDeleter {
  void operator()(ds_network* n) const { ds_network_free(n); }
};
using ConfigPtr = std::unique_ptr<ds_config, ConfigDeleter>;
using TracePtr = std::unique_ptr<ds_trace, TraceDeleter>;
using NetworkPtr = std::unique_ptr<ds_network, NetworkDeleter>;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("droopsched");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("DROOPSCHED_LOG")) {
    const auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to off
    if (lvl == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("DROOPSCHED_LOG='{}' not recognised, keeping info", env);
    else
      spdlog::set_level(lvl);
  }
}

void report_error(ds_status s, const std::string& context) {
  spdlog::error("{}: {} ({})", context, ds_last_error(), ds_status_name(s));
}

std::optional<std::string> config_get(const ds_config* cfg, const char* section, const char* key) {
  size_t need = 0;
  ds_config_get(cfg, section, key, nullptr, 0, &need);
  if (need == 0) return std::nullopt;
  std::string buf(need, '\0');
  if (ds_config_get(cfg, section, key, buf.data(), buf.size(), &need) != DS_OK) return std::nullopt;
  buf.resize(need - 1);
  return buf;
}

void print_metrics(const ds_trace* t) {
  std::printf("metric,value\n");
  for (size_t i = 0; i < ds_trace_metric_count(t); ++i) {
    const char* name = nullptr;
    double v = 0.0;
    if (ds_trace_metric_at(t, i, &name, &v) == DS_OK) std::printf("%s\n", fmt::format("{},{:.17g}", name, v).c_str());
  }
}

// ---- run ----

struct RunOptions {
  std::string config;
  std::optional<unsigned long long> seed;
  std::optional<std::string> controller;
  std::optional<int> inner_iters;
  std::optional<std::string> output_dir;
};

int cmd_run(const RunOptions& o) {
  ds_config* raw = nullptr;
  ds_status s = ds_config_load(o.config.c_str(), &raw);
  if (s != DS_OK) {
    report_error(s, fmt::format("cannot load config '{}'", o.config));
    return kConfigError;
  }
  ConfigPtr cfg(raw);
  const auto set = [&](const char* section, const char* key, const std::string& value) {
    const ds_status st = ds_config_set(cfg.get(), section, key, value.c_str());
    if (st != DS_OK) report_error(st, fmt::format("--{}", key));
    return st == DS_OK;
  };
  if (o.seed && !set("sim", "seed", std::to_string(*o.seed))) return kConfigError;
  if (o.controller && !set("sim", "controller", *o.controller)) return kConfigError;
  if (o.inner_iters && !set("scheduler", "inner_iters", std::to_string(*o.inner_iters))) return kConfigError;
  if (o.output_dir && !set("files", "output_dir", fs::absolute(*o.output_dir).lexically_normal().string()))
    return kConfigError;
  const auto out_dir = config_get(cfg.get(), "files", "output_dir");
  if (!out_dir || out_dir->empty()) {
    spdlog::error("no output directory: set [files] output_dir or pass --output-dir");
    return kConfigError;
  }
  s = ds_config_validate(cfg.get());
  if (s != DS_OK) {
    report_error(s, "invalid configuration");
    return kConfigError;
  }

  spdlog::info("running {} controller, seed {}", config_get(cfg.get(), "sim", "controller").value_or("?"),
               config_get(cfg.get(), "sim", "seed").value_or("?"));
  ds_trace* traw = nullptr;
  s = ds_run(cfg.get(), &traw);
  TracePtr trace(traw);
  if (s == DS_ERR_SIMULATION) {
    const std::string snap = (fs::path(*out_dir) / "failure_snapshot").string();
    spdlog::error("simulation failed: {}", ds_last_error());
    if (ds_trace_write(trace.get(), snap.c_str()) == DS_OK &&
        ds_config_write(cfg.get(), (fs::path(snap) / "manifest.ini").string().c_str()) == DS_OK)
      spdlog::error("diagnostic snapshot written to {}", snap);
    else
      spdlog::error("could not write diagnostic snapshot to {}: {}", snap, ds_last_error());
    return kSimFailure;
  }
  if (s != DS_OK) {
    report_error(s, "cannot set up the run");
    return kConfigError;
  }
  s = ds_trace_write(trace.get(), out_dir->c_str());
  if (s == DS_OK) s = ds_config_write(cfg.get(), (fs::path(*out_dir) / "manifest.ini").string().c_str());
  if (s != DS_OK) {
    report_error(s, "cannot write outputs");
    return kConfigError;
  }
  spdlog::info("trace and manifest written to {}", *out_dir);
  print_metrics(trace.get());
  return kOk;
}

// ---- powerflow ----

struct NetworkSource {
  std::string config;
  std::string network;
  std::string ders;
  double v_sub = 1.0;
  bool v_sub_set = false;
};

// Fills network / ders / v_sub from --config where not given explicitly.
bool resolve_sources(NetworkSource& src) {
  if (src.config.empty()) return true;
  ds_config* raw = nullptr;
  const ds_status s = ds_config_load(src.config.c_str(), &raw);
  if (s != DS_OK) {
    report_error(s, fmt::format("cannot load config '{}'", src.config));
    return false;
  }
  ConfigPtr cfg(raw);
  if (src.network.empty()) src.network = config_get(cfg.get(), "files", "network").value_or("");
  if (src.ders.empty()) src.ders = config_get(cfg.get(), "files", "ders").value_or("");
  if (!src.v_sub_set) src.v_sub = std::stod(config_get(cfg.get(), "network", "v_sub").value_or("1"));
  return true;
}

NetworkPtr open_network(const NetworkSource& src) {
  if (src.network.empty()) {
    spdlog::error("no network file: pass --network or --config");
    return nullptr;
  }
  ds_network* raw = nullptr;
  const ds_status s = ds_network_load(src.network.c_str(), src.v_sub, &raw);
  if (s != DS_OK) report_error(s, fmt::format("cannot load network '{}'", src.network));
  return NetworkPtr(raw);
}

int cmd_powerflow(NetworkSource src, const std::string& injections) {
  if (!resolve_sources(src)) return kConfigError;
  NetworkPtr net = open_network(src);
  if (!net) return kConfigError;
  const size_t n = ds_network_buses(net.get());
  std::vector<double> p(n, 0.0), q(n, 0.0), v(n + 1, 0.0);
  if (!injections.empty()) {
    const ds_status s = ds_injections_load(net.get(), injections.c_str(), p.data(), q.data());
    if (s != DS_OK) {
      report_error(s, fmt::format("cannot read injections '{}'", injections));
      return kConfigError;
    }
  }
  double p_pcc = 0.0, q_pcc = 0.0;
  int iters = 0;
  const ds_status s = ds_powerflow(net.get(), p.data(), q.data(), v.data(), &p_pcc, &q_pcc, &iters);
  if (s != DS_OK) {
    report_error(s, "power flow failed");
    return kSimFailure;
  }
  spdlog::info("converged in {} sweeps", iters);
  std::printf("bus,v_pu\n");
  for (size_t b = 0; b <= n; ++b) std::printf("%s\n", fmt::format("{},{:.17g}", b, v[b]).c_str());
  std::printf("%s\n", fmt::format("p_pcc,{:.17g}", p_pcc).c_str());
  std::printf("%s\n", fmt::format("q_pcc,{:.17g}", q_pcc).c_str());
  return kOk;
}

// ---- stability-check ----

int cmd_stability(NetworkSource src, const std::string& gains) {
  if (!resolve_sources(src)) return kConfigError;
  if (src.ders.empty()) {
    spdlog::error("no DER file: pass --ders or --config");
    return kConfigError;
  }
  NetworkPtr net = open_network(src);
  if (!net) return kConfigError;
  double gamma = 0.0;
  size_t count = 0;
  ds_status s = ds_stability_check(net.get(), src.ders.c_str(), gains.c_str(), &gamma, nullptr, 0, &count);
  std::vector<ds_stability_row> rows(count);
  if (s == DS_OK) s = ds_stability_check(net.get(), src.ders.c_str(), gains.c_str(), &gamma, rows.data(), rows.size(), &count);
  if (s != DS_OK) {
    report_error(s, "stability check failed");
    return kConfigError;
  }
  std::printf("%s\n", fmt::format("gamma,{:.17g}", gamma).c_str());
  std::printf("node,a,b,form,result\n");
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.pass;
    std::printf("%s\n", fmt::format("{},{:.17g},{:.17g},{:.17g},{}", r.node, r.a, r.b, r.form,
                                    r.pass ? "pass" : "fail").c_str());
  }
  if (!all) spdlog::warn("at least one gain set is outside the certified region");
  return all ? kOk : kCheckFailed;
}

// ---- report ----

int cmd_report(const std::string& trace_dir, double v_min, double v_max, const std::string& plot_dir) {
  ds_trace* raw = nullptr;
  const std::string plots = plot_dir.empty() ? (fs::path(trace_dir) / "plots").string() : plot_dir;
  const ds_status s = ds_report(trace_dir.c_str(), v_min, v_max, plots.c_str(), &raw);
  TracePtr t(raw);
  if (s != DS_OK) {
    report_error(s, fmt::format("cannot build report from '{}'", trace_dir));
    return kConfigError;
  }
  spdlog::info("plot data written to {}", plots);
  print_metrics(t.get());
  return kOk;
}

int cmd_synth(const std::string& scenario, const std::string& dir) {
  const ds_status s = ds_synth(scenario.c_str(), dir.c_str());
  if (s != DS_OK) {
    report_error(s, "cannot write scenario");
    return kConfigError;
  }
  spdlog::info("{} scenario written to {}", scenario, dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Droop gain scheduling for distribution feeders"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ds_version()));

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "closed-loop simulation; writes trace files, metrics and a manifest");
  run_cmd->add_option("--config", run.config, "INI run configuration")->required();
  run_cmd->add_option("--seed", run.seed, "override [sim] seed");
  run_cmd->add_option("--controller", run.controller, "scheduled, static, none or setpoint-hold");
  run_cmd->add_option("--inner-iters", run.inner_iters, "primal-dual iterations per scheduling period");
  run_cmd->add_option("--output-dir", run.output_dir, "override [files] output_dir");

  NetworkSource pf_src;
  std::string injections;
  auto* pf_cmd = app.add_subcommand("powerflow", "solve one power flow and print bus voltages");
  pf_cmd->add_option("--config", pf_src.config, "take network and v_sub from this config");
  pf_cmd->add_option("--network", pf_src.network, "branch file from,to,r_pu,x_pu");
  pf_cmd->add_option("--injections", injections, "node,p_pu,q_pu (net injections); zero if omitted");
  pf_cmd->add_option("--v-sub", pf_src.v_sub, "substation voltage, p.u.")->each([&](const std::string&) {
    pf_src.v_sub_set = true;
  });

  NetworkSource st_src;
  std::string gains;
  auto* st_cmd = app.add_subcommand("stability-check", "test droop gains against the stability certificate");
  st_cmd->add_option("--config", st_src.config, "take network, DER file and v_sub from this config");
  st_cmd->add_option("--network", st_src.network, "branch file");
  st_cmd->add_option("--ders", st_src.ders, "DER placement file");
  st_cmd->add_option("--gains", gains, "node,k_pv,k_pf,k_qv,k_qf")->required();

  std::string trace_dir, plot_dir;
  double v_min = 0.95, v_max = 1.05;
  auto* rep_cmd = app.add_subcommand("report", "recompute metrics from trace files and emit plot tables");
  rep_cmd->add_option("--trace-dir", trace_dir, "directory written by run")->required();
  rep_cmd->add_option("--v-min", v_min, "lower voltage bound, p.u.");
  rep_cmd->add_option("--v-max", v_max, "upper voltage bound, p.u.");
  rep_cmd->add_option("--plot-dir", plot_dir, "where to write fig_*.csv (default <trace-dir>/plots)");

  std::string scenario, synth_dir;
  auto* syn_cmd = app.add_subcommand("synth", "write a bundled synthetic scenario");
  syn_cmd->add_option("--scenario", scenario, "overvoltage, frequency, plug-and-play or feeder37")->required();
  syn_cmd->add_option("--output-dir", synth_dir, "target directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run_cmd) return cmd_run(run);
  if (*pf_cmd) return cmd_powerflow(pf_src, injections);
  if (*st_cmd) return cmd_stability(st_src, gains);
  if (*rep_cmd) return cmd_report(trace_dir, v_min, v_max, plot_dir);
  if (*syn_cmd) return cmd_synth(scenario, synth_dir);
  return kConfigError;
}
