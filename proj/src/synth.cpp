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

#include "droopsched/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "droopsched/config.hpp"
#include "droopsched/error.hpp"

namespace droopsched::synth {

double clear_sky(double t, double peak, double t_noon, double half_width) {
  if (!(half_width > 0.0)) fail(ErrorCode::InvalidArgument, "clear_sky: half_width must be positive");
  const double x = (t - t_noon) / half_width;
  return peak * std::max(0.0, 1.0 - x * x);
}

double square_wave(double t, double amp, double t_first_flip, double half_period) {
  if (!(half_period > 0.0)) fail(ErrorCode::InvalidArgument, "square_wave: half_period must be positive");
  if (t < t_first_flip) return amp;
  const auto k = static_cast<long>(std::floor((t - t_first_flip) / half_period));
  return k % 2 == 0 ? -amp : amp;
}

std::vector<Branch> feeder6(double z_scale) {
  return {{0, 1, 0.6 * z_scale, 0.4 * z_scale},
          {1, 2, 0.8 * z_scale, 0.5 * z_scale},
          {2, 3, 1.0 * z_scale, 0.6 * z_scale},
          {1, 4, 0.9 * z_scale, 0.6 * z_scale},
          {4, 5, 1.1 * z_scale, 0.7 * z_scale}};
}

std::vector<Branch> feeder37(std::uint64_t seed, double z_scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> r_dist(0.05, 0.15), ratio(0.5, 0.8), coin(0.0, 1.0);
  std::vector<Branch> out;
  std::vector<int> depth(37, 0);
  for (int bus = 1; bus < 37; ++bus) {
    int parent = bus - 1;
    // branch off to an earlier bus now and then, keeping depth bounded
    if (bus > 1 && (coin(rng) < 0.35 || depth[static_cast<std::size_t>(bus - 1)] >= 12)) {
      std::uniform_int_distribution<int> pick(0, bus - 1);
      do parent = pick(rng);
      while (depth[static_cast<std::size_t>(parent)] >= 12);
    }
    depth[static_cast<std::size_t>(bus)] = depth[static_cast<std::size_t>(parent)] + 1;
    const double r = r_dist(rng) * z_scale;
    out.push_back({parent, bus, r, r * ratio(rng)});
  }
  return out;
}

Scenario parse_scenario(const std::string& s) {
  if (s == "overvoltage") return Scenario::Overvoltage;
  if (s == "frequency") return Scenario::Frequency;
  if (s == "plug-and-play") return Scenario::PlugAndPlay;
  if (s == "feeder37") return Scenario::Feeder37;
  fail(ErrorCode::InvalidArgument,
       fmt::format("unknown scenario '{}' (overvoltage, frequency, plug-and-play, feeder37)", s));
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Overvoltage:
      return "overvoltage";
    case Scenario::Frequency:
      return "frequency";
    case Scenario::PlugAndPlay:
      return "plug-and-play";
    case Scenario::Feeder37:
      return "feeder37";
  }
  return "?";
}

namespace {

namespace fs = std::filesystem;

std::string num(double x) { return fmt::format("{:.17g}", x); }

struct Out {
  std::ofstream f;
  explicit Out(const fs::path& p) : f(p, std::ios::binary) {
    if (!f) fail(ErrorCode::Io, fmt::format("cannot write '{}'", p.string()));
  }
};

struct Unit {
  int node;
  const char* kind;
  double s;
  double pf;
};

struct Bundle {
  std::vector<Branch> branches;
  std::vector<Unit> units;
  double p_load = 0.0, q_load = 0.0;  // per bus, constant
  double duration = 0.0;
  std::function<double(double)> pv;     // availability, same for every PV unit
  std::function<double(double)> omega;  // p.u.
  std::vector<std::string> events;      // preformatted rows
  RunConfig cfg;
};

Bundle make(Scenario s) {
  Bundle b;
  b.cfg.network_path = "network.csv";
  b.cfg.der_path = "ders.csv";
  b.cfg.profiles = {"loads.csv", "pv.csv", "frequency.csv", "events.csv"};
  b.cfg.output_dir = "out";
  b.omega = [](double) { return 1.0; };
  switch (s) {
    case Scenario::Overvoltage:
    case Scenario::Feeder37: {
      const bool big = s == Scenario::Feeder37;
      const double S = big ? 3.0e-4 : 2.5e-4;
      b.branches = big ? feeder37() : feeder6();
      if (big) {
        for (int node : {6, 11, 15, 19, 23, 27, 31, 35}) b.units.push_back({node, "pv", S, 0.9});
      } else {
        for (int node : {2, 3, 5}) b.units.push_back({node, "pv", S, 0.9});
      }
      b.p_load = (big ? 0.05 : 0.15) * S;
      b.q_load = b.p_load / 3.0;
      b.duration = 7200.0;
      b.pv = [S](double t) { return clear_sky(t, S, 4800.0, 6000.0); };
      b.cfg.sched.e_scale = 1e-3;
      break;
    }
    case Scenario::Frequency:
    case Scenario::PlugAndPlay: {
      const double S = 2e-5;
      b.branches = feeder6();
      for (int node : {2, 3, 5}) b.units.push_back({node, "load", S, 1.0});
      b.p_load = 2e-6;
      b.q_load = 5e-7;
      b.duration = 3600.0;
      if (s == Scenario::Frequency) {
        b.omega = [](double t) { return 1.0 + square_wave(t, 1e-3, 615.0, 600.0); };
      } else {
        b.omega = [](double) { return 1.001; };
        b.events.push_back("1800,5,connect");
      }
      b.cfg.v_sub = 1.005;
      b.cfg.sched.e_scale = 3e-3;
      b.cfg.sched.inner_iters = 100;
      b.cfg.sched.band_backoff = 0.5;
      break;
    }
  }
  b.cfg.sim.duration = b.duration;
  return b;
}

}  // namespace

void write_scenario(Scenario s, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, fmt::format("cannot create '{}': {}", dir, ec.message()));
  const fs::path d(dir);
  const Bundle b = make(s);
  const int n = static_cast<int>(b.branches.size());
  const auto steps = static_cast<long>(b.duration);

  {
    Out o(d / "network.csv");
    o.f << "from,to,r_pu,x_pu\n";
    for (const auto& br : b.branches) o.f << br.from << ',' << br.to << ',' << num(br.r) << ',' << num(br.x) << "\n";
  }
  {
    Out o(d / "ders.csv");
    o.f << "node,kind,s_rating_pu,tau_p_s,tau_q_s,pf_min\n";
    for (const auto& u : b.units) o.f << u.node << ',' << u.kind << ',' << num(u.s) << ",0.2,0.2," << num(u.pf) << "\n";
  }
  {
    Out o(d / "loads.csv");
    o.f << "time_s,node,p_load_pu,q_load_pu\n";
    for (long k = 0; k <= steps; ++k)
      for (int bus = 1; bus <= n; ++bus) o.f << k << ',' << bus << ',' << num(b.p_load) << ',' << num(b.q_load) << "\n";
  }
  {
    Out o(d / "pv.csv");
    o.f << "time_s,node,p_avail_pu\n";
    for (long k = 0; k <= steps; ++k)
      for (const auto& u : b.units)
        if (std::string(u.kind) == "pv") o.f << k << ',' << u.node << ',' << num(b.pv(static_cast<double>(k))) << "\n";
  }
  {
    Out o(d / "frequency.csv");
    o.f << "time_s,omega_pu\n";
    for (long k = 0; k <= steps; ++k) o.f << k << ',' << num(b.omega(static_cast<double>(k))) << "\n";
  }
  {
    Out o(d / "events.csv");
    o.f << "time_s,node,action\n";
    for (const auto& e : b.events) o.f << e << "\n";
  }
  write_config(b.cfg, (d / "config.ini").string());
}

}  // namespace droopsched::synth
