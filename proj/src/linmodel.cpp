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

#include "droopsched/linmodel.hpp"

#include <algorithm>
#include <vector>

#include <fmt/format.h>

#include "droopsched/error.hpp"

namespace droopsched {

RX build_rx(const NetworkModel& model) {
  const auto n = static_cast<Eigen::Index>(model.size());
  RX out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  if (n == 0) return out;
  // cumulative path sums from the substation
  std::vector<double> rs(model.size() + 1, 0.0), xs(model.size() + 1, 0.0);
  for (const int j : model.forward_buses()) {
    const Branch& b = model.feeding(j);
    rs[static_cast<std::size_t>(j)] = rs[static_cast<std::size_t>(b.from)] + b.r;
    xs[static_cast<std::size_t>(j)] = xs[static_cast<std::size_t>(b.from)] + b.x;
  }
  std::vector<std::vector<int>> paths(model.size() + 1);
  for (int i = 1; i <= n; ++i) paths[static_cast<std::size_t>(i)] = model.path(i);
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      const auto& pi = paths[static_cast<std::size_t>(i)];
      const auto& pj = paths[static_cast<std::size_t>(j)];
      std::size_t m = 0;
      while (m < pi.size() && m < pj.size() && pi[m] == pj[m]) ++m;
      const int last = m == 0 ? 0 : pi[m - 1];
      out.R(i - 1, j - 1) = out.R(j - 1, i - 1) = rs[static_cast<std::size_t>(last)];
      out.X(i - 1, j - 1) = out.X(j - 1, i - 1) = xs[static_cast<std::size_t>(last)];
    }
  }
  return out;
}

PccSensitivity build_pcc_sensitivity(const NetworkModel& model, std::span<const double> p_base,
                                     std::span<const double> q_base, double step,
                                     const PowerFlowSolution* warm) {
  if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "step must be positive");
  const std::size_t n = model.size();
  PowerFlowOptions opts;
  opts.tol = 1e-13;
  opts.max_iter = 200;
  PccSensitivity out;
  out.base = solve_power_flow(model, p_base, q_base, opts, warm);
  out.p_pcc = out.base.p_pcc;
  out.H.resize(static_cast<Eigen::Index>(2 * n));
  std::vector<double> p(p_base.begin(), p_base.end()), q(q_base.begin(), q_base.end());
  for (std::size_t k = 0; k < 2 * n; ++k) {
    auto& vec = k < n ? p : q;
    const std::size_t i = k < n ? k : k - n;
    const double orig = vec[i];
    vec[i] = orig + step;
    const double up = solve_power_flow(model, p, q, opts, &out.base).p_pcc;
    vec[i] = orig - step;
    const double dn = solve_power_flow(model, p, q, opts, &out.base).p_pcc;
    vec[i] = orig;
    out.H(static_cast<Eigen::Index>(k)) = (up - dn) / (2.0 * step);
  }
  return out;
}

SensitivityModel make_sensitivity_model(const NetworkModel& model) {
  SensitivityModel sm;
  auto rx = build_rx(model);
  sm.R = std::move(rx.R);
  sm.X = std::move(rx.X);
  const auto n = static_cast<Eigen::Index>(model.size());
  sm.v0 = Eigen::VectorXd::Constant(n, model.v_sub());
  sm.H = Eigen::VectorXd::Zero(2 * n);
  sm.H.head(n).setConstant(-1.0);
  sm.rho.v_meas = sm.v0;
  return sm;
}

void recenter(SensitivityModel& sm, const SchedulingPoint& rho, const Eigen::VectorXd& p_droop,
              const Eigen::VectorXd& q_droop, double delivered) {
  const Eigen::Index n = sm.R.rows();
  if (rho.v_meas.size() != n || p_droop.size() != n || q_droop.size() != n || sm.H.size() != 2 * n)
    fail(ErrorCode::InvalidArgument, "recenter: dimension mismatch");
  sm.v0 = rho.v_meas - sm.R * p_droop - sm.X * q_droop;
  sm.P0 = delivered - sm.H.head(n).dot(p_droop) - sm.H.tail(n).dot(q_droop);
  sm.rho = rho;
}

Eigen::VectorXd predict_voltage(const SensitivityModel& sm, const Eigen::VectorXd& p_c,
                                const Eigen::VectorXd& q_c, const Eigen::VectorXd& p_d,
                                const Eigen::VectorXd& q_d) {
  const Eigen::Index n = sm.R.rows();
  if (p_c.size() != n || q_c.size() != n || p_d.size() != n || q_d.size() != n)
    fail(ErrorCode::InvalidArgument, "predict_voltage: dimension mismatch");
  return sm.R * (p_c + p_d) + sm.X * (q_c + q_d) + sm.v0;
}

}  // namespace droopsched
