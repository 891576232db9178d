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

#include "droopsched/droop.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "csv.hpp"
#include "droopsched/error.hpp"

namespace droopsched {

PowerPair droop_input(const DerUnit& unit, double v_local, double v_star, double omega, double omega_star) {
  const double dv = v_local - v_star;
  const double dw = omega - omega_star;
  const DroopGains& k = unit.gains;
  return {unit.p_star + k.k_pv * dv + k.k_pf * dw, unit.q_star + k.k_qv * dv + k.k_qf * dw};
}

namespace {

PowerPair project_pv(const CapabilitySet& cap, double p, double q) {
  const double s = cap.s_max;
  const double pmax = cap.p_avail;
  const double pf = cap.pf_min;
  const double t = pf >= 1.0 ? 0.0 : std::sqrt(1.0 - pf * pf) / pf;
  const double tol = 1e-12 * std::max(1.0, s);

  const auto feasible = [&](double a, double b) {
    return a >= -tol && a <= pmax + tol && std::abs(b) <= a * t + tol && a * a + b * b <= s * s + tol;
  };

  std::vector<PowerPair> cand;
  cand.push_back({p, q});
  // faces
  cand.push_back({0.0, q});
  cand.push_back({pmax, q});
  for (const double sg : {1.0, -1.0}) {
    const double a = (p + sg * t * q) / (1.0 + t * t);
    cand.push_back({a, sg * t * a});
  }
  const double r = std::hypot(p, q);
  if (r > 0.0) cand.push_back({p * s / r, q * s / r});
  // vertices
  cand.push_back({0.0, 0.0});
  for (const double sg : {1.0, -1.0}) {
    cand.push_back({pmax, sg * t * pmax});
    if (pmax <= s) cand.push_back({pmax, sg * std::sqrt(s * s - pmax * pmax)});
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    cand.push_back({s * c, sg * s * t * c});
  }

  PowerPair best{0.0, 0.0};
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& c : cand) {
    if (!feasible(c.p, c.q)) continue;
    const double d = (c.p - p) * (c.p - p) + (c.q - q) * (c.q - q);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

PowerPair project_load(const CapabilitySet& cap, double p, double q) {
  const double t = cap.pf_fixed >= 1.0 ? 0.0 : std::sqrt(1.0 - cap.pf_fixed * cap.pf_fixed) / cap.pf_fixed;
  double a = (p + t * q) / (1.0 + t * t);
  a = std::clamp(a, cap.p_min, cap.p_max);
  return {a, t * a};
}

}  // namespace

PowerPair project_capability(const CapabilitySet& cap, double p, double q) {
  if (cap.kind == DerKind::PvInverter) {
    if (!(cap.s_max > 0.0) || !(cap.pf_min > 0.0) || cap.pf_min > 1.0)
      fail(ErrorCode::InvalidArgument, "capability set: need s_max > 0 and 0 < pf_min <= 1");
    if (cap.p_avail < 0.0) fail(ErrorCode::Infeasible, "capability set is empty (p_avail < 0)");
    return project_pv(cap, p, q);
  }
  if (!(cap.pf_fixed > 0.0) || cap.pf_fixed > 1.0)
    fail(ErrorCode::InvalidArgument, "capability set: need 0 < pf_fixed <= 1");
  if (cap.p_min > cap.p_max) fail(ErrorCode::Infeasible, "capability set is empty (p_min > p_max)");
  return project_load(cap, p, q);
}

DerUnit step_der(DerUnit unit, double u_p, double u_q, double dt) {
  if (!(dt > 0.0) || !(dt < unit.tau_p) || !(dt < unit.tau_q))
    fail(ErrorCode::InvalidArgument,
         fmt::format("step_der: need 0 < dt < min(tau_p, tau_q), got dt = {}", dt));
  unit.p_c += dt / unit.tau_p * (u_p - unit.p_c);
  unit.q_c += dt / unit.tau_q * (u_q - unit.q_c);
  if (unit.online) {
    const auto pq = project_capability(unit.cap, unit.p_c, unit.q_c);
    unit.p_c = pq.p;
    unit.q_c = pq.q;
  }
  return unit;
}

double tso_requirement(double k_agg, double omega, double omega_star) { return k_agg * (omega - omega_star); }

DerKind parse_der_kind(const std::string& s) {
  if (s == "pv" || s == "pv-inverter") return DerKind::PvInverter;
  if (s == "load" || s == "flexible-load") return DerKind::FlexibleLoad;
  fail(ErrorCode::Parse, fmt::format("unknown DER kind '{}'", s));
}

const char* der_kind_name(DerKind kind) { return kind == DerKind::PvInverter ? "pv" : "load"; }

std::vector<DerUnit> load_ders(const std::string& path) {
  const csv::Table t = csv::read(path);
  const auto cn = t.column("node"), ck = t.column("kind"), cs = t.column("s_rating_pu"),
             ctp = t.column("tau_p_s"), ctq = t.column("tau_q_s"), cpf = t.column("pf_min");
  std::vector<DerUnit> out;
  for (const auto& row : t.rows) {
    DerUnit u;
    u.node = csv::to_int(t, row, cn);
    DerKind kind;
    try {
      kind = parse_der_kind(row.fields[ck]);
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: {}", path, row.line, e.what()));
    }
    u.cap.kind = kind;
    u.cap.s_max = csv::to_double(t, row, cs);
    u.tau_p = csv::to_double(t, row, ctp);
    u.tau_q = csv::to_double(t, row, ctq);
    const double pf = csv::to_double(t, row, cpf);
    if (!(u.cap.s_max > 0.0) || !(u.tau_p > 0.0) || !(u.tau_q > 0.0) || !(pf > 0.0) || pf > 1.0)
      fail(ErrorCode::Parse,
           fmt::format("{}:{}: need s_rating > 0, taus > 0 and 0 < pf_min <= 1", path, row.line));
    if (kind == DerKind::PvInverter) {
      u.cap.pf_min = pf;
    } else {
      // a flexible load consumes up to its rating at a fixed power factor
      u.cap.pf_fixed = pf;
      u.cap.p_min = -u.cap.s_max * pf;
      u.cap.p_max = 0.0;
    }
    out.push_back(u);
  }
  return out;
}

std::vector<NodeGains> load_gains(const std::string& path) {
  const csv::Table t = csv::read(path);
  const auto cn = t.column("node"), c1 = t.column("k_pv"), c2 = t.column("k_pf"), c3 = t.column("k_qv"),
             c4 = t.column("k_qf");
  std::vector<NodeGains> out;
  for (const auto& row : t.rows)
    out.push_back({csv::to_int(t, row, cn),
                   {csv::to_double(t, row, c1), csv::to_double(t, row, c2), csv::to_double(t, row, c3),
                    csv::to_double(t, row, c4)}});
  return out;
}

}  // namespace droopsched
