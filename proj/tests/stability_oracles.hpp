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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "droopsched/stability.hpp"

namespace oracle {

// Nearest point of {f(a,b) <= -4 gamma eps} over a grid of columns in a
// (spacing h), taking the exact feasible interval in b within each column.
inline std::pair<double, double> grid_project_ab(double a0, double b0, double gamma, double eps,
                                                 double h_rel = 1e-5) {
  const auto inside = [&](double a, double b) {
    return droopsched::stability_form(a, b, gamma) <= -4.0 * gamma * eps;
  };
  if (inside(a0, b0)) return {a0, b0};
  // (0, 0) is feasible, so the answer lies within this distance of a0
  const double radius = std::hypot(a0, b0);
  const double h = h_rel * gamma;
  const long m = static_cast<long>(std::ceil(radius / h));
  double bd = std::numeric_limits<double>::infinity(), ba = 0.0, bb = 0.0;
  for (long i = -m; i <= m; ++i) {
    const double a = a0 + i * h;
    // f <= -4 gamma eps as a quadratic in b
    const double B = -2.0 * a + 4.0 * gamma;
    const double C = a * a + 4.0 * gamma * a - 4.0 * gamma * gamma + 4.0 * gamma * eps;
    const double disc = B * B - 4.0 * C;
    if (disc < 0.0) continue;
    const double lo = (-B - std::sqrt(disc)) / 2.0, hi = (-B + std::sqrt(disc)) / 2.0;
    const double b = std::clamp(b0, lo, hi);
    const double d = (a - a0) * (a - a0) + (b - b0) * (b - b0);
    if (d < bd) {
      bd = d;
      ba = a;
      bb = b;
    }
  }
  return {ba, bb};
}

// Exact one-step propagator of classical RK4 for x' = A x.
inline Eigen::MatrixXd rk4_propagator(const Eigen::MatrixXd& A, double dt) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  const Eigen::MatrixXd hA = dt * A;
  return I + hA + hA * hA / 2.0 + hA * hA * hA / 6.0 + hA * hA * hA * hA / 24.0;
}

}  // namespace oracle
