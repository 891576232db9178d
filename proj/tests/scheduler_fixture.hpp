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

// Six-bus scheduler instance with random measurements.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "droopsched/linmodel.hpp"
#include "droopsched/network.hpp"
#include "droopsched/scheduler.hpp"
#include "droopsched/stability.hpp"

namespace fixture {

using namespace droopsched;

struct Fixture {
  NetworkModel net;
  SensitivityModel sm;
  SchedulingPoint rho;
  SchedulerConfig cfg;
  SchedulerState st;
  StabilityParams stab;
  Eigen::VectorXd dv;
};

inline Fixture make_fixture(std::uint64_t seed, std::vector<int> ders = {2, 3, 5}) {
  Fixture f;
  f.net = NetworkModel({{0, 1, 0.6, 0.4}, {1, 2, 0.8, 0.5}, {2, 3, 1.0, 0.6}, {1, 4, 0.9, 0.6}, {4, 5, 1.1, 0.7}});
  f.sm = make_sensitivity_model(f.net);
  const std::vector<double> z(5, 0.0);
  f.sm.H = build_pcc_sensitivity(f.net, z, z).H;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  f.rho.v_meas = Eigen::VectorXd(5);
  for (auto& v : f.rho.v_meas) v = 1.0 + 0.05 * u(rng);
  f.rho.omega = 1.0 + 0.001 * u(rng);
  f.rho.r_t = 0.02;
  f.rho.timestamp = 60.0;
  f.sm.rho = f.rho;
  f.sm.v0 = f.rho.v_meas;
  f.sm.P0 = 1e-5 * u(rng);
  f.st = make_scheduler_state(5);
  for (int d : ders) add_unit(f.st, d, 0.2, 0.2, 1.0 + 0.1 * u(rng));
  f.dv = (f.rho.v_meas.array() - f.cfg.v_star).matrix();
  const Eigen::VectorXd T = Eigen::VectorXd::Constant(5, 0.2);
  f.stab = make_stability_params(compute_gamma(f.sm.R, f.sm.X, T, T));
  return f;
}

inline void randomize(Fixture& f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
  for (auto& x : f.st.kappa_v) x = 0.5 * u(rng);
  for (auto& x : f.st.kappa_f) x = 2.0 * u(rng);
  for (auto& x : f.st.prev_kappa_v) x = 0.5 * u(rng);
  for (auto& x : f.st.prev_kappa_f) x = 2.0 * u(rng);
  for (auto& x : f.st.cvar_hi) x = 0.02 * pos(rng);
  for (auto& x : f.st.cvar_lo) x = 0.02 * pos(rng);
  for (auto& x : f.st.mu) x = 5.0 * pos(rng);
  f.st.lambda = Eigen::Vector2d(pos(rng), pos(rng)) * 1e3;
}

}  // namespace fixture
