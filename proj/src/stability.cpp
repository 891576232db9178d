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

#include "droopsched/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "droopsched/error.hpp"

namespace droopsched {

StabilityParams make_stability_params(double gamma, double rel_margin, double freq_gain_box) {
  if (!(gamma > 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be positive");
  if (!(rel_margin > 0.0)) fail(ErrorCode::InvalidArgument, "margin must be positive");
  return {gamma, rel_margin * gamma, freq_gain_box};
}

double compute_gamma(const Eigen::MatrixXd& R, const Eigen::MatrixXd& X, const Eigen::VectorXd& tau_p,
                     const Eigen::VectorXd& tau_q) {
  const Eigen::Index n = R.rows();
  if (R.cols() != n || X.rows() != n || X.cols() != n || tau_p.size() != n || tau_q.size() != n)
    fail(ErrorCode::InvalidArgument, "compute_gamma: dimension mismatch");
  if ((tau_p.array() <= 0.0).any() || (tau_q.array() <= 0.0).any())
    fail(ErrorCode::InvalidArgument, "compute_gamma: time constants must be positive");
  if (Eigen::LLT<Eigen::MatrixXd>(R).info() != Eigen::Success ||
      Eigen::LLT<Eigen::MatrixXd>(X).info() != Eigen::Success)
    fail(ErrorCode::InvalidArgument, "compute_gamma: sensitivity matrices are not positive definite");
  const Eigen::VectorXd sp = tau_p.cwiseSqrt(), sq = tau_q.cwiseSqrt();
  const Eigen::MatrixXd Sp = sp.asDiagonal() * R * sp.asDiagonal();
  const Eigen::MatrixXd Sq = sq.asDiagonal() * X * sq.asDiagonal();
  // blocks decouple, so the largest eigenvalue is the larger of the two
  const double lp = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Sp, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double lq = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Sq, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return 1.0 / std::max(lp, lq);
}

double fleet_gamma(const NetworkModel& model, const std::vector<DerUnit>& ders) {
  const auto n = static_cast<Eigen::Index>(model.size());
  double tau_max = 0.0;
  for (const auto& d : ders) tau_max = std::max({tau_max, d.tau_p, d.tau_q});
  if (ders.empty()) tau_max = 1.0;
  Eigen::VectorXd tp = Eigen::VectorXd::Constant(n, tau_max), tq = tp;
  for (const auto& d : ders) {
    if (d.node < 1 || d.node > n) fail(ErrorCode::InvalidArgument, fmt::format("DER node {} outside the feeder", d.node));
    tp(d.node - 1) = d.tau_p;
    tq(d.node - 1) = d.tau_q;
  }
  const RX rx = build_rx(model);
  return compute_gamma(rx.R, rx.X, tp, tq);
}

double stability_form(double a, double b, double gamma) {
  return (a - b) * (a - b) + 4.0 * gamma * (a + b) - 4.0 * gamma * gamma;
}

bool check_gains(const DroopGains& gains, double tau_p, double tau_q, const StabilityParams& params) {
  const double a = gains.k_pv / tau_p;
  const double b = gains.k_qv / tau_q;
  const double g = params.gamma;
  const double eps = params.margin;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return stability_form(a, b, g) < -2.0 * g * eps && (a < g - 0.5 * eps || b < g - 0.5 * eps);
}

namespace {

// Real roots of x^3 + P x + Q = 0.
std::vector<double> depressed_cubic_roots(double P, double Q) {
  std::vector<double> roots;
  const double D = Q * Q / 4.0 + P * P * P / 27.0;
  if (D > 0.0) {
    const double s = std::sqrt(D);
    roots.push_back(std::cbrt(-Q / 2.0 + s) + std::cbrt(-Q / 2.0 - s));
  } else if (P == 0.0) {
    roots.push_back(0.0);
  } else {
    const double m = 2.0 * std::sqrt(-P / 3.0);
    const double arg = std::clamp(3.0 * Q / (P * m), -1.0, 1.0);
    const double th = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos(th - 2.0 * std::numbers::pi * k / 3.0));
  }
  for (double& x : roots) {
    for (int it = 0; it < 4; ++it) {
      const double f = x * x * x + P * x + Q;
      const double df = 3.0 * x * x + P;
      if (df == 0.0) break;
      x -= f / df;
    }
  }
  return roots;
}

}  // namespace

DroopGains project_gains(const DroopGains& gains, double tau_p, double tau_q, const StabilityParams& params) {
  DroopGains out = gains;
  const double box = params.freq_gain_box;
  out.k_pf = std::clamp(gains.k_pf, -box, box);
  out.k_qf = std::clamp(gains.k_qf, -box, box);

  const double g = params.gamma;
  const double eps = params.margin;
  const double a = gains.k_pv / tau_p;
  const double b = gains.k_qv / tau_q;
  if (stability_form(a, b, g) <= -4.0 * g * eps) return out;

  // rotated frame: s along a + b, d along a - b; set is s <= c0 - c2 d^2
  const double r2 = std::numbers::sqrt2;
  const double s0 = (a + b) / r2;
  const double d0 = (a - b) / r2;
  const double c0 = (g - eps) / r2;
  const double c2 = 1.0 / (2.0 * r2 * g);
  // stationarity of the distance along the boundary
  const double k3 = 2.0 * c2 * c2;
  const double k1 = 1.0 - 2.0 * c2 * (c0 - s0);
  double best_d = d0, best = std::numeric_limits<double>::infinity();
  for (const double d : depressed_cubic_roots(k1 / k3, -d0 / k3)) {
    const double s = c0 - c2 * d * d;
    const double dist = (s - s0) * (s - s0) + (d - d0) * (d - d0);
    if (dist < best) {
      best = dist;
      best_d = d;
    }
  }
  const double s = c0 - c2 * best_d * best_d;
  out.k_pv = (s + best_d) / r2 * tau_p;
  out.k_qv = (s - best_d) / r2 * tau_q;
  return out;
}

double lyapunov_value(const Eigen::MatrixXd& R, const Eigen::MatrixXd& X, const Eigen::VectorXd& dx) {
  const Eigen::Index n = R.rows();
  if (dx.size() != 2 * n) fail(ErrorCode::InvalidArgument, "lyapunov_value: dimension mismatch");
  const auto dp = dx.head(n);
  const auto dq = dx.tail(n);
  return 0.5 * (dp.dot(R * dp) + dq.dot(X * dq));
}

Eigen::MatrixXd closed_loop_matrix(const Eigen::MatrixXd& R, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& k_pv, const Eigen::VectorXd& k_qv,
                                   const Eigen::VectorXd& tau_p, const Eigen::VectorXd& tau_q) {
  const Eigen::Index n = R.rows();
  if (X.rows() != n || k_pv.size() != n || k_qv.size() != n || tau_p.size() != n || tau_q.size() != n)
    fail(ErrorCode::InvalidArgument, "closed_loop_matrix: dimension mismatch");
  Eigen::MatrixXd A(2 * n, 2 * n);
  A.topLeftCorner(n, n) = k_pv.asDiagonal() * R;
  A.topRightCorner(n, n) = k_pv.asDiagonal() * X;
  A.bottomLeftCorner(n, n) = k_qv.asDiagonal() * R;
  A.bottomRightCorner(n, n) = k_qv.asDiagonal() * X;
  A -= Eigen::MatrixXd::Identity(2 * n, 2 * n);
  Eigen::VectorXd tinv(2 * n);
  tinv << tau_p.cwiseInverse(), tau_q.cwiseInverse();
  return tinv.asDiagonal() * A;
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) fail(ErrorCode::Internal, "eigenvalue computation failed");
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace droopsched
