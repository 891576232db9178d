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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace droopsched {

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
};

// Branch indices into the validated input list. forward runs root to leaves,
// backward runs leaves to root.
struct RadialOrder {
  std::vector<std::size_t> forward;
  std::vector<std::size_t> backward;
};

// bus_count includes the substation (bus 0). Throws Error(Topology) on
// duplicate branches, cycles, disconnected nodes or bad ids.
RadialOrder validate_radial(int bus_count, std::span<const Branch> branches);

// Radial feeder rooted at bus 0. Branch k feeds bus k+1; vectors over
// non-substation buses use index id-1.
class NetworkModel {
 public:
  NetworkModel() = default;
  explicit NetworkModel(std::vector<Branch> branches, double v_sub = 1.0, double s_base = 1.0);

  std::size_t size() const { return branches_.size(); }
  const std::vector<Branch>& branches() const { return branches_; }
  const Branch& feeding(int bus) const { return branches_[static_cast<std::size_t>(bus - 1)]; }
  int parent(int bus) const { return branches_[static_cast<std::size_t>(bus - 1)].from; }
  const std::vector<int>& children(int bus) const { return children_[static_cast<std::size_t>(bus)]; }
  // non-substation buses, parents before children
  const std::vector<int>& forward_buses() const { return forward_; }
  // path from the substation to bus, as a list of buses (excluding 0)
  std::vector<int> path(int bus) const;

  double v_sub() const { return v_sub_; }
  void set_v_sub(double v) { v_sub_ = v; }
  double s_base() const { return s_base_; }

  const std::vector<int>& controllable() const { return controllable_; }
  void set_controllable(std::vector<int> buses);

 private:
  std::vector<Branch> branches_;
  std::vector<std::vector<int>> children_;
  std::vector<int> forward_;
  std::vector<int> controllable_;
  double v_sub_ = 1.0;
  double s_base_ = 1.0;
};

NetworkModel load_network(const std::string& path, double v_sub = 1.0);

struct PowerFlowOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

struct PowerFlowSolution {
  std::vector<double> v;       // size n+1, v[0] is the substation
  std::vector<double> p_flow;  // sending-end flow into bus id, index id-1
  std::vector<double> q_flow;
  std::vector<double> i_sq;  // squared current magnitude, index id-1
  double p_pcc = 0.0;
  double q_pcc = 0.0;
  int iterations = 0;
  double max_residual = 0.0;
  bool converged = false;
};

// p_inj, q_inj: net injection (generation minus demand) at buses 1..n, index id-1.
// Throws Error(NoConvergence) or Error(Infeasible) when v^2 goes non-positive.
PowerFlowSolution solve_power_flow(const NetworkModel& model, std::span<const double> p_inj,
                                   std::span<const double> q_inj, const PowerFlowOptions& opts = {},
                                   const PowerFlowSolution* warm = nullptr);

struct PccExchange {
  double p = 0.0;
  double q = 0.0;
};
PccExchange pcc_exchange(const PowerFlowSolution& sol);

}  // namespace droopsched
