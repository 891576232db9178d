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

#include "droopsched/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <variant>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "droopsched/droop.hpp"
#include "droopsched/error.hpp"
#include "droopsched/network.hpp"

namespace droopsched {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

using Slot = std::variant<double*, int*, bool*, std::uint64_t*, std::string*, Controller*>;

struct Binding {
  const char* section;
  const char* key;
  Slot slot;
};

std::vector<Binding> bindings(RunConfig& c) {
  SimConfig& s = c.sim;
  SchedulerConfig& q = c.sched;
  return {
      {"files", "network", &c.network_path},
      {"files", "ders", &c.der_path},
      {"files", "loads", &c.profiles.loads},
      {"files", "pv", &c.profiles.pv},
      {"files", "frequency", &c.profiles.frequency},
      {"files", "events", &c.profiles.events},
      {"files", "output_dir", &c.output_dir},
      {"network", "v_sub", &c.v_sub},
      {"sim", "dt", &s.dt},
      {"sim", "tau_s", &s.tau_s},
      {"sim", "duration", &s.duration},
      {"sim", "v_star", &s.v_star},
      {"sim", "omega_star", &s.omega_star},
      {"sim", "k_agg", &s.k_agg},
      {"sim", "controller", &s.controller},
      {"sim", "static_k_pv", &s.static_gains.k_pv},
      {"sim", "static_k_pf", &s.static_gains.k_pf},
      {"sim", "static_k_qv", &s.static_gains.k_qv},
      {"sim", "static_k_qf", &s.static_gains.k_qf},
      {"sim", "seed", &s.seed},
      {"sim", "record_every", &s.record_every},
      {"sim", "gain_margin", &s.gain_margin},
      {"sim", "freq_gain_box", &s.freq_gain_box},
      {"scheduler", "alpha_primal", &q.alpha_primal},
      {"scheduler", "alpha_dual", &q.alpha_dual},
      {"scheduler", "phi", &q.phi},
      {"scheduler", "psi", &q.psi},
      {"scheduler", "reg_tau", &q.reg_tau},
      {"scheduler", "beta", &q.beta},
      {"scheduler", "n_samples", &q.n_samples},
      {"scheduler", "noise_std", &q.noise_std},
      {"scheduler", "v_min", &q.v_min},
      {"scheduler", "v_max", &q.v_max},
      {"scheduler", "e_min", &q.e_min},
      {"scheduler", "e_max", &q.e_max},
      {"scheduler", "band_backoff", &q.band_backoff},
      {"scheduler", "cost_w_pv", &q.cost_w_pv},
      {"scheduler", "cost_w_qv", &q.cost_w_qv},
      {"scheduler", "cost_w_f_lo", &q.cost_w_f_lo},
      {"scheduler", "cost_w_f_hi", &q.cost_w_f_hi},
      {"scheduler", "v_scale", &q.v_scale},
      {"scheduler", "e_scale", &q.e_scale},
      {"scheduler", "inner_iters", &q.inner_iters},
      {"scheduler", "exact_cvar", &q.exact_cvar},
  };
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* b = text.data();
  const char* e = b + text.size();
  const auto [p, ec] = std::from_chars(b, e, value);
  if (ec != std::errc() || p != e) fail(ErrorCode::Parse, fmt::format("{}: cannot parse '{}'", where, text));
  return value;
}

void assign(const Slot& slot, const std::string& text, const std::string& where) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          *p = text;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1")
            *p = true;
          else if (text == "false" || text == "0")
            *p = false;
          else
            fail(ErrorCode::Parse, fmt::format("{}: expected true or false, got '{}'", where, text));
        } else if constexpr (std::is_same_v<T, Controller>) {
          try {
            *p = parse_controller(text);
          } catch (const Error& e) {
            throw Error(ErrorCode::Parse, fmt::format("{}: {}", where, e.what()));
          }
        } else {
          *p = parse_number<T>(text, where);
        }
      },
      slot);
}

std::string render(const Slot& slot) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>)
          return *p;
        else if constexpr (std::is_same_v<T, bool>)
          return *p ? "true" : "false";
        else if constexpr (std::is_same_v<T, Controller>)
          return controller_name(*p);
        else if constexpr (std::is_same_v<T, double>)
          return fmt::format("{}", *p);
        else
          return fmt::format("{}", *p);
      },
      slot);
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, fmt::format("cannot open config '{}'", path));
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::Parse, fmt::format("{}:{}: {}", path, e.line(), e.message()));
  }
  RunConfig cfg;
  auto binds = bindings(cfg);
  std::set<std::string> known;
  for (const auto& b : binds) known.insert(std::string(b.section) + "." + b.key);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      fail(ErrorCode::Parse, fmt::format("{}: key '{}' outside a section", path, section));
    for (const auto& [key, value] : body)
      if (!known.count(section + "." + key))
        fail(ErrorCode::Parse, fmt::format("{}: unknown key [{}] {}", path, section, key));
  }
  for (const auto& b : binds) {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(std::string(b.section) + "." + b.key, '.'));
    if (v) assign(b.slot, *v, fmt::format("{}: [{}] {}", path, b.section, b.key));
  }
  cfg.sched.tau_s = cfg.sim.tau_s;
  cfg.sched.v_star = cfg.sim.v_star;

  const fs::path base = fs::absolute(fs::path(path)).parent_path();
  for (std::string* p : {&cfg.network_path, &cfg.der_path, &cfg.profiles.loads, &cfg.profiles.pv,
                         &cfg.profiles.frequency, &cfg.profiles.events, &cfg.output_dir})
    *p = resolve(base, *p);
  return cfg;
}

void write_config(const RunConfig& cfg, const std::string& path) {
  RunConfig copy = cfg;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, fmt::format("cannot write '{}'", path));
  std::string section;
  for (const auto& b : bindings(copy)) {
    if (section != b.section) {
      if (!section.empty()) out << "\n";
      section = b.section;
      out << "[" << section << "]\n";
    }
    const std::string v = render(b.slot);
    if (std::holds_alternative<std::string*>(b.slot) && v.empty()) continue;
    out << b.key << " = " << v << "\n";
  }
  if (!out) fail(ErrorCode::Io, fmt::format("write to '{}' failed", path));
}

namespace {

const Binding& find_binding(const std::vector<Binding>& binds, const std::string& section, const std::string& key) {
  for (const auto& b : binds)
    if (section == b.section && key == b.key) return b;
  fail(ErrorCode::InvalidArgument, fmt::format("unknown config key [{}] {}", section, key));
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  const auto binds = bindings(cfg);
  assign(find_binding(binds, section, key).slot, value, fmt::format("[{}] {}", section, key));
  cfg.sched.tau_s = cfg.sim.tau_s;
  cfg.sched.v_star = cfg.sim.v_star;
}

std::string get_config_value(const RunConfig& cfg, const std::string& section, const std::string& key) {
  RunConfig copy = cfg;
  const auto binds = bindings(copy);
  return render(find_binding(binds, section, key).slot);
}

void validate_config(const RunConfig& cfg) {
  const auto need = [](const std::string& p, const char* what, bool required) {
    if (p.empty()) {
      if (required) fail(ErrorCode::InvalidArgument, fmt::format("config: {} file not set", what));
      return;
    }
    if (!fs::is_regular_file(p)) fail(ErrorCode::Io, fmt::format("{} file '{}' does not exist", what, p));
  };
  need(cfg.network_path, "network", true);
  need(cfg.der_path, "ders", true);
  need(cfg.profiles.loads, "loads", false);
  need(cfg.profiles.pv, "pv", false);
  need(cfg.profiles.frequency, "frequency", false);
  need(cfg.profiles.events, "events", false);
  if (!(cfg.v_sub > 0.0)) fail(ErrorCode::InvalidArgument, "v_sub must be positive");
  cfg.sim.validate();
  cfg.sched.validate();
}

RunInputs build_inputs(const RunConfig& cfg) {
  validate_config(cfg);
  RunInputs in;
  in.network = load_network(cfg.network_path, cfg.v_sub);
  in.ders = load_ders(cfg.der_path);
  in.scenario = ingest_profiles(cfg.profiles, in.network, in.ders, cfg.sim.omega_star);
  in.sim = cfg.sim;
  in.sched = cfg.sched;
  in.sched.tau_s = cfg.sim.tau_s;
  in.sched.v_star = cfg.sim.v_star;
  return in;
}

}  // namespace droopsched
