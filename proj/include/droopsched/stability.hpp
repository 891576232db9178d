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

#include <vector>

#include <Eigen/Dense>

#include "droopsched/droop.hpp"
#include "droopsched/linmodel.hpp"

namespace droopsched {

struct StabilityParams {
  double gamma = 1.0;
  double margin = 1e-6;  // absolute, in units of gamma
  double freq_gain_box = 10.0;
};

StabilityParams make_stability_params(double gamma, double rel_margin = 1e-6, double freq_gain_box = 10.0);

// 1 / lambda_max(G T) with G = blkdiag(R, X), T = diag(tau_p, tau_q).
// tau vectors have length n. Throws Error(InvalidArgument) if R or X is not PD.
double compute_gamma(const Eigen::MatrixXd& R, const Eigen::MatrixXd& X, const Eigen::VectorXd& tau_p,
                     const Eigen::VectorXd& tau_q);

// gamma of a feeder with a DER fleet; buses without a unit get the fleet's
// largest time constant.
double fleet_gamma(const NetworkModel& model, const std::vector<DerUnit>& ders);

// Quadratic form of the per-unit condition with a = k_pv/tau_p, b = k_qv/tau_q:
// (a - b)^2 + 4 gamma (a + b) - 4 gamma^2. Negative inside the certified set.
double stability_form(double a, double b, double gamma);

// Per-unit test: form < -2 gamma margin and (a or b below gamma - margin/2).
bool check_gains(const DroopGains& gains, double tau_p, double tau_q, const StabilityParams& params);

// Euclidean projection of (a, b) onto {form <= -4 gamma margin}, rescaled by
// tau; frequency gains clamped to the box. Result always passes check_gains.
DroopGains project_gains(const DroopGains& gains, double tau_p, double tau_q, const StabilityParams& params);

// 1/2 dx' blkdiag(R, X) dx, dx of length 2n.
double lyapunov_value(const Eigen::MatrixXd& R, const Eigen::MatrixXd& X, const Eigen::VectorXd& dx);

// T^-1 (K_v G - I) with K_v = [[diag(k_pv), diag(k_pv)], [diag(k_qv), diag(k_qv)]].
Eigen::MatrixXd closed_loop_matrix(const Eigen::MatrixXd& R, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& k_pv, const Eigen::VectorXd& k_qv,
                                   const Eigen::VectorXd& tau_p, const Eigen::VectorXd& tau_q);

double spectral_abscissa(const Eigen::MatrixXd& A);

}  // namespace droopsched
