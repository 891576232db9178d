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

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "droopsched/droop.hpp"
#include "droopsched/linmodel.hpp"
#include "droopsched/stability.hpp"

namespace droopsched {

struct SchedulerConfig {
  double alpha_primal = 0.8;
  double alpha_dual = 0.4;
  double phi = 3e-4;
  double psi = 3e-4;
  double reg_tau = 3e-4;
  double beta = 0.1;
  int n_samples = 100;
  double noise_std = 0.015;
  double v_min = 0.95;
  double v_max = 1.05;
  double e_min = -2e-7;
  double e_max = 2e-7;
  // enforced band shrunk by this fraction of its half-width
  double band_backoff = 0.0;
  double cost_w_pv = 0.3;
  double cost_w_qv = 0.1;
  double cost_w_f_lo = 0.9;  // range for per-unit frequency-gain weights
  double cost_w_f_hi = 1.1;
  double tau_s = 30.0;
  double v_star = 1.0;
  // constraint rows enter the Lagrangian divided by these
  double v_scale = 1.0;
  double e_scale = 1.0;
  int inner_iters = 1;
  // CVaR auxiliaries: exact minimization per step, or a projected gradient step
  bool exact_cvar = true;

  void validate() const;
};

struct SampleSet {
  Eigen::MatrixXd xi;  // n x N_s
  std::uint64_t seed = 0;
};

// Slots follow ascending node order. kappa_v = (k_pv..., k_qv...),
// kappa_f = (k_pf..., k_qf...).
struct SchedulerState {
  std::vector<int> nodes;
  Eigen::VectorXd tau_p, tau_q, w_f;
  Eigen::VectorXd kappa_v, kappa_f;
  Eigen::VectorXd prev_kappa_v, prev_kappa_f;
  Eigen::VectorXd cvar_hi, cvar_lo;  // n
  Eigen::VectorXd mu;                // 2n, upper rows then lower rows
  Eigen::Vector2d lambda = Eigen::Vector2d::Zero();  // lower band row, upper band row
  double timestamp = 0.0;

  std::size_t slots() const { return nodes.size(); }
  int slot_of(int node) const;  // -1 if absent
  DroopGains gains(std::size_t slot) const;
  void set_gains(std::size_t slot, const DroopGains& g);
};

SchedulerState make_scheduler_state(std::size_t n_buses);
// Adds a unit with zero gains (current and previous).
void add_unit(SchedulerState& state, int node, double tau_p, double tau_q, double w_f);
void remove_unit(SchedulerState& state, int node);

// Per-unit frequency-gain weight, a function of (seed, node) only.
double draw_freq_weight(std::uint64_t seed, int node, const SchedulerConfig& cfg);

SampleSet draw_samples(const Eigen::VectorXd& v_meas, const SchedulerConfig& cfg, std::uint64_t seed);

Eigen::VectorXd voltage_model(const SensitivityModel& sm, const SchedulerState& state, const SchedulingPoint& rho,
                              const Eigen::VectorXd& dv);

Eigen::VectorXd cvar_constraints(const Eigen::VectorXd& vm, const SampleSet& samples, const Eigen::VectorXd& cvar_hi,
                                 const Eigen::VectorXd& cvar_lo, const SchedulerConfig& cfg);

double freq_error(const SensitivityModel& sm, const SchedulerState& state, const SchedulingPoint& rho,
                  const Eigen::VectorXd& dv);

// (-e + e_min, e - e_max), tightened by band_backoff
Eigen::Vector2d band_constraints(double e, const SchedulerConfig& cfg);

double cost(const SchedulerState& state, const SchedulerConfig& cfg);

// Gradient of cost() with respect to kappa_v and kappa_f.
std::pair<Eigen::VectorXd, Eigen::VectorXd> cost_gradient(const SchedulerState& state, const SchedulerConfig& cfg);

double lagrangian(const SchedulerState& state, const SensitivityModel& sm, const SchedulingPoint& rho,
                  const SampleSet& samples, const SchedulerConfig& cfg, const Eigen::VectorXd& dv);

// Partial derivatives of the Lagrangian with respect to the primal variables.
struct PrimalGradient {
  Eigen::VectorXd kappa_v, kappa_f, cvar_hi, cvar_lo;
};
PrimalGradient lagrangian_gradient(const SchedulerState& state, const SensitivityModel& sm,
                                   const SchedulingPoint& rho, const SampleSet& samples,
                                   const SchedulerConfig& cfg, const Eigen::VectorXd& dv);

// One dual ascent / primal descent iteration. Throws Error(StaleModel) if
// sm was built for a different timestamp than rho.
SchedulerState primal_dual_step(const SchedulerState& state, const SensitivityModel& sm, const SchedulingPoint& rho,
                                const SampleSet& samples, const SchedulerConfig& cfg,
                                const StabilityParams& stab, const Eigen::VectorXd& dv);

// Rotates the feedforward gains, runs cfg.inner_iters iterations and returns
// the broadcast gains in slot order.
std::pair<SchedulerState, std::vector<DroopGains>> schedule_step(const SchedulerState& state,
                                                                 const SensitivityModel& sm,
                                                                 const SchedulingPoint& rho,
                                                                 const SampleSet& samples,
                                                                 const SchedulerConfig& cfg,
                                                                 const StabilityParams& stab);

}  // namespace droopsched
