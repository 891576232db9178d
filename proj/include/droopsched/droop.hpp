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

#pragma once

#include <string>
#include <vector>

namespace droopsched {

struct DroopGains {
  double k_pv = 0.0;
  double k_pf = 0.0;
  double k_qv = 0.0;
  double k_qf = 0.0;
  bool operator==(const DroopGains&) const = default;
};

enum class DerKind { PvInverter, FlexibleLoad };

struct CapabilitySet {
  DerKind kind = DerKind::PvInverter;
  double s_max = 1.0;
  double pf_min = 1.0;  // pv
  double p_min = 0.0;   // load
  double p_max = 0.0;
  double pf_fixed = 1.0;  // load
  double p_avail = 0.0;   // pv, time varying
};

struct DerUnit {
  int node = 0;
  double p_c = 0.0;
  double q_c = 0.0;
  double p_star = 0.0;
  double q_star = 0.0;
  double tau_p = 0.2;
  double tau_q = 0.2;
  DroopGains gains;
  CapabilitySet cap;
  bool online = true;
};

struct PowerPair {
  double p = 0.0;
  double q = 0.0;
};

PowerPair droop_input(const DerUnit& unit, double v_local, double v_star, double omega, double omega_star);

// Euclidean projection onto the capability region. Throws Error(Infeasible)
// when the region is empty.
PowerPair project_capability(const CapabilitySet& cap, double p, double q);

// One forward Euler step of the output filters, then projection when online.
DerUnit step_der(DerUnit unit, double u_p, double u_q, double dt);

double tso_requirement(double k_agg, double omega, double omega_star);

DerKind parse_der_kind(const std::string& s);
const char* der_kind_name(DerKind kind);

// node,kind,s_rating_pu,tau_p_s,tau_q_s,pf_min
std::vector<DerUnit> load_ders(const std::string& path);

// node,k_pv,k_pf,k_qv,k_qf
struct NodeGains {
  int node = 0;
  DroopGains gains;
};
std::vector<NodeGains> load_gains(const std::string& path);

}  // namespace droopsched
