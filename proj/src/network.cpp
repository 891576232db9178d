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

#include "droopsched/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "csv.hpp"
#include "droopsched/error.hpp"

namespace droopsched {

RadialOrder validate_radial(int bus_count, std::span<const Branch> branches) {
  if (bus_count < 1) fail(ErrorCode::Topology, "network has no substation");
  const auto n = static_cast<std::size_t>(bus_count);
  std::set<std::pair<int, int>> seen;
  std::vector<std::vector<std::pair<int, std::size_t>>> adj(n);
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& b = branches[k];
    if (b.from < 0 || b.to < 0 || b.from >= bus_count || b.to >= bus_count)
      fail(ErrorCode::Topology, fmt::format("branch {}-{}: bus id out of range", b.from, b.to));
    if (b.from == b.to) fail(ErrorCode::Topology, "cycle detected");
    if (!(b.r >= 0.0) || !(b.x >= 0.0) || (b.r == 0.0 && b.x == 0.0) || !std::isfinite(b.r) ||
        !std::isfinite(b.x))
      fail(ErrorCode::InvalidArgument,
           fmt::format("branch {}-{}: impedance must be nonnegative and nonzero", b.from, b.to));
    const auto key = std::minmax(b.from, b.to);
    if (!seen.insert(key).second)
      fail(ErrorCode::Topology, fmt::format("duplicate branch {}-{}", b.from, b.to));
    adj[static_cast<std::size_t>(b.from)].push_back({b.to, k});
    adj[static_cast<std::size_t>(b.to)].push_back({b.from, k});
  }
  if (branches.size() >= n) fail(ErrorCode::Topology, "cycle detected");

  RadialOrder order;
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> via(n, branches.size());
  std::queue<int> q;
  visited[0] = true;
  q.push(0);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const auto& [w, k] : adj[static_cast<std::size_t>(u)]) {
      if (k == via[static_cast<std::size_t>(u)]) continue;
      if (visited[static_cast<std::size_t>(w)]) fail(ErrorCode::Topology, "cycle detected");
      visited[static_cast<std::size_t>(w)] = true;
      via[static_cast<std::size_t>(w)] = k;
      order.forward.push_back(k);
      q.push(w);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!visited[i]) fail(ErrorCode::Topology, fmt::format("disconnected node {}", i));
  order.backward.assign(order.forward.rbegin(), order.forward.rend());
  return order;
}

NetworkModel::NetworkModel(std::vector<Branch> branches, double v_sub, double s_base)
    : v_sub_(v_sub), s_base_(s_base) {
  if (!(v_sub > 0.0)) fail(ErrorCode::InvalidArgument, "v_sub must be positive");
  const int bus_count = static_cast<int>(branches.size()) + 1;
  const RadialOrder order = validate_radial(bus_count, branches);
  const auto n = branches.size();
  branches_.resize(n);
  children_.assign(n + 1, {});
  std::vector<bool> placed(n + 1, false);
  placed[0] = true;
  for (const std::size_t k : order.forward) {
    Branch b = branches[k];
    if (!placed[static_cast<std::size_t>(b.from)]) std::swap(b.from, b.to);
    placed[static_cast<std::size_t>(b.to)] = true;
    branches_[static_cast<std::size_t>(b.to - 1)] = b;
    children_[static_cast<std::size_t>(b.from)].push_back(b.to);
    forward_.push_back(b.to);
  }
}

std::vector<int> NetworkModel::path(int bus) const {
  std::vector<int> p;
  for (int b = bus; b != 0; b = parent(b)) p.push_back(b);
  std::reverse(p.begin(), p.end());
  return p;
}

void NetworkModel::set_controllable(std::vector<int> buses) {
  std::sort(buses.begin(), buses.end());
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i] < 1 || static_cast<std::size_t>(buses[i]) > size())
      fail(ErrorCode::InvalidArgument, fmt::format("controllable bus {} is not a feeder bus", buses[i]));
    if (i > 0 && buses[i] == buses[i - 1])
      fail(ErrorCode::InvalidArgument, fmt::format("controllable bus {} listed twice", buses[i]));
  }
  controllable_ = std::move(buses);
}

NetworkModel load_network(const std::string& path, double v_sub) {
  const csv::Table t = csv::read(path);
  const auto cf = t.column("from"), ct = t.column("to"), cr = t.column("r_pu"), cx = t.column("x_pu");
  std::vector<Branch> branches;
  for (const auto& row : t.rows)
    branches.push_back({csv::to_int(t, row, cf), csv::to_int(t, row, ct), csv::to_double(t, row, cr),
                        csv::to_double(t, row, cx)});
  try {
    return NetworkModel(std::move(branches), v_sub);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path, e.what()));
  }
}

PowerFlowSolution solve_power_flow(const NetworkModel& model, std::span<const double> p_inj,
                                   std::span<const double> q_inj, const PowerFlowOptions& opts,
                                   const PowerFlowSolution* warm) {
  const std::size_t n = model.size();
  if (p_inj.size() != n || q_inj.size() != n)
    fail(ErrorCode::InvalidArgument,
         fmt::format("injection vectors must have length {} (got {}, {})", n, p_inj.size(), q_inj.size()));
  if (!(opts.tol > 0.0)) fail(ErrorCode::InvalidArgument, "tol must be positive");
  if (opts.max_iter < 1) fail(ErrorCode::InvalidArgument, "max_iter must be at least 1");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p_inj[i]) || !std::isfinite(q_inj[i]))
      fail(ErrorCode::InvalidArgument, fmt::format("non-finite injection at bus {}", i + 1));

  const double v0sq = model.v_sub() * model.v_sub();
  std::vector<double> vsq(n + 1, v0sq), l(n, 0.0), P(n, 0.0), Q(n, 0.0);
  if (warm != nullptr && warm->v.size() == n + 1 && warm->i_sq.size() == n) {
    for (std::size_t i = 1; i <= n; ++i) vsq[i] = warm->v[i] * warm->v[i];
    l = warm->i_sq;
  }
  const auto& fwd = model.forward_buses();
  std::vector<double> vsq_new(n + 1, v0sq);

  PowerFlowSolution sol;
  for (int it = 1; it <= opts.max_iter; ++it) {
    for (auto rit = fwd.rbegin(); rit != fwd.rend(); ++rit) {
      const int j = *rit;
      const auto k = static_cast<std::size_t>(j - 1);
      const Branch& b = model.feeding(j);
      double pj = -p_inj[k] + b.r * l[k];
      double qj = -q_inj[k] + b.x * l[k];
      for (const int c : model.children(j)) {
        pj += P[static_cast<std::size_t>(c - 1)];
        qj += Q[static_cast<std::size_t>(c - 1)];
      }
      P[k] = pj;
      Q[k] = qj;
    }
    double dv = 0.0;
    for (const int j : fwd) {
      const auto k = static_cast<std::size_t>(j - 1);
      const Branch& b = model.feeding(j);
      const double w = vsq_new[static_cast<std::size_t>(b.from)] - 2.0 * (b.r * P[k] + b.x * Q[k]) +
                       (b.r * b.r + b.x * b.x) * l[k];
      if (!(w > 0.0))
        fail(ErrorCode::Infeasible, fmt::format("negative squared voltage at bus {} (iteration {})", j, it));
      vsq_new[static_cast<std::size_t>(j)] = w;
      dv = std::max(dv, std::abs(std::sqrt(w) - std::sqrt(vsq[static_cast<std::size_t>(j)])));
    }
    double resid = 0.0;
    for (const int j : fwd) {
      const auto k = static_cast<std::size_t>(j - 1);
      const Branch& b = model.feeding(j);
      const double ln = (P[k] * P[k] + Q[k] * Q[k]) / vsq_new[static_cast<std::size_t>(b.from)];
      const double dl = std::abs(ln - l[k]);
      resid = std::max({resid, b.r * dl, b.x * dl, (b.r * b.r + b.x * b.x) * dl});
      l[k] = ln;
    }
    vsq.swap(vsq_new);
    vsq_new[0] = v0sq;
    if (dv <= opts.tol && resid <= opts.tol) {
      sol.iterations = it;
      sol.max_residual = resid;
      sol.converged = true;
      break;
    }
  }
  if (!sol.converged)
    fail(ErrorCode::NoConvergence,
         fmt::format("power flow did not converge within {} iterations", opts.max_iter));

  sol.v.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) sol.v[i] = std::sqrt(vsq[i]);
  sol.p_flow = std::move(P);
  sol.q_flow = std::move(Q);
  sol.i_sq = std::move(l);
  for (const int c : model.children(0)) {
    sol.p_pcc += sol.p_flow[static_cast<std::size_t>(c - 1)];
    sol.q_pcc += sol.q_flow[static_cast<std::size_t>(c - 1)];
  }
  return sol;
}

PccExchange pcc_exchange(const PowerFlowSolution& sol) { return {sol.p_pcc, sol.q_pcc}; }

}  // namespace droopsched
