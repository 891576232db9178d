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

#include <span>

#include <Eigen/Dense>

#include "droopsched/network.hpp"

namespace droopsched {

// Measurement bundle the linear model is built around.
struct SchedulingPoint {
  Eigen::VectorXd v_meas;  // buses 1..n
  double r_t = 0.0;        // aggregate frequency droop requested at the PCC
  double omega = 1.0;
  double omega_star = 1.0;
  double timestamp = 0.0;
};

struct SensitivityModel {
  Eigen::MatrixXd R;
  Eigen::MatrixXd X;
  Eigen::VectorXd v0;
  Eigen::VectorXd H;  // length 2n, d p_pcc / d p then d p_pcc / d q
  double P0 = 0.0;
  SchedulingPoint rho;
};

struct RX {
  Eigen::MatrixXd R;
  Eigen::MatrixXd X;
};

// Common-path sums of branch resistance and reactance.
RX build_rx(const NetworkModel& model);

struct PccSensitivity {
  Eigen::VectorXd H;
  double p_pcc = 0.0;  // at the base point
  PowerFlowSolution base;
};

// Central differences of p_pcc with respect to every bus injection.
PccSensitivity build_pcc_sensitivity(const NetworkModel& model, std::span<const double> p_base,
                                     std::span<const double> q_base, double step = 1e-5,
                                     const PowerFlowSolution* warm = nullptr);

// R, X from the topology; v0 flat at v_sub; H lossless (-1 on active entries).
SensitivityModel make_sensitivity_model(const NetworkModel& model);

// Re-anchor the offsets at a measurement. p_droop, q_droop are the droop
// components of the controllable injections at rho (zero elsewhere);
// delivered is the measured PCC adjustment due to droop action.
// Afterwards v0 + R p_droop + X q_droop == rho.v_meas and P0 + H (p_droop, q_droop) == delivered.
void recenter(SensitivityModel& sm, const SchedulingPoint& rho, const Eigen::VectorXd& p_droop,
              const Eigen::VectorXd& q_droop, double delivered);

Eigen::VectorXd predict_voltage(const SensitivityModel& sm, const Eigen::VectorXd& p_c,
                                const Eigen::VectorXd& q_c, const Eigen::VectorXd& p_d,
                                const Eigen::VectorXd& q_d);

}  // namespace droopsched
