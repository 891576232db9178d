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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "droopsched/droop.hpp"
#include "droopsched/error.hpp"
#include "oracles.hpp"

using namespace droopsched;

namespace {

bool in_pv(const CapabilitySet& c, double p, double q, double tol = 1e-9) {
  const double t = std::sqrt(1.0 - c.pf_min * c.pf_min) / c.pf_min;
  return p >= -tol && p <= c.p_avail + tol && std::abs(q) <= p * t + tol && std::hypot(p, q) <= c.s_max + tol;
}

// nearest point among dense samples of the region boundary
PowerPair boundary_projection(const CapabilitySet& c, double p, double q) {
  if (in_pv(c, p, q, 0.0)) return {p, q};
  const double th0 = std::acos(c.pf_min);
  PowerPair best;
  double bd = std::numeric_limits<double>::infinity();
  const auto consider = [&](double a, double b) {
    const double d = (a - p) * (a - p) + (b - q) * (b - q);
    if (d < bd) {
      bd = d;
      best = {a, b};
    }
  };
  const int m = 200000;
  for (int k = 0; k <= m; ++k) {
    const double th = -th0 + 2.0 * th0 * k / m;
    const double r = std::min(c.s_max, c.p_avail / std::cos(th));
    consider(r * std::cos(th), r * std::sin(th));
  }
  for (const double sg : {1.0, -1.0}) {
    const double rmax = std::min(c.s_max, c.p_avail / std::cos(th0));
    for (int k = 0; k <= m; ++k) {
      const double r = rmax * k / m;
      consider(r * std::cos(th0), sg * r * std::sin(th0));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("droop input law") {
  DerUnit u;
  u.p_star = 0.2;
  u.q_star = -0.1;
  auto r = droop_input(u, 1.03, 1.0, 1.001, 1.0);
  CHECK(r.p == 0.2);
  CHECK(r.q == -0.1);
  u.gains = {-0.5, 0.0, 0.0, 0.0};
  r = droop_input(u, 1.0, 1.0, 1.0, 1.0);
  CHECK(r.p == 0.2);
  r = droop_input(u, 1.02, 1.0, 1.0, 1.0);
  CHECK(r.p == doctest::Approx(0.19).epsilon(1e-14));
  u.gains = {0.0, 2.0, 0.0, -3.0};
  r = droop_input(u, 1.0, 1.0, 1.001, 1.0);
  CHECK(r.p == doctest::Approx(0.202));
  CHECK(r.q == doctest::Approx(-0.103));
}

TEST_CASE("pv capability projection") {
  CapabilitySet c;
  c.s_max = 1.0;
  c.pf_min = 0.8;
  c.p_avail = 1.0;
  const auto in = project_capability(c, 0.5, 0.1);
  CHECK(in.p == 0.5);
  CHECK(in.q == 0.1);
  // at p = 0 only q = 0 is admissible, but the nearest point of the region
  // to (0, 2) is the disk/cone corner
  const auto apex = project_capability(c, 0.0, 2.0);
  CHECK(apex.p == doctest::Approx(0.8));
  CHECK(apex.q == doctest::Approx(0.6));
  const auto axis = project_capability(c, -0.3, 0.1);
  CHECK(axis.p == doctest::Approx(0.0));
  CHECK(axis.q == doctest::Approx(0.0));
  // grid oracle at 1e-4 resolution gave (0.8, 0.6)
  const auto corner = project_capability(c, 0.9, 0.9);
  CHECK(std::abs(corner.p - 0.8) < 2e-4);
  CHECK(std::abs(corner.q - 0.6) < 2e-4);

  CapabilitySet empty = c;
  empty.p_avail = -0.1;
  try {
    project_capability(empty, 0.1, 0.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

TEST_CASE("pv projection matches boundary sampling") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5), pf(0.7, 0.99), av(0.0, 1.2);
  for (int k = 0; k < 40; ++k) {
    CapabilitySet c;
    c.s_max = 1.0;
    c.pf_min = pf(rng);
    c.p_avail = av(rng);
    const double p = u(rng), q = u(rng);
    const auto got = project_capability(c, p, q);
    const auto ref = boundary_projection(c, p, q);
    CHECK(in_pv(c, got.p, got.q));
    CHECK(std::hypot(got.p - p, got.q - q) <= std::hypot(ref.p - p, ref.q - q) + 1e-12);
    CHECK(std::hypot(got.p - ref.p, got.q - ref.q) < 1e-4);
  }
}

TEST_CASE("projection is non-expansive") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  CapabilitySet pv;
  pv.s_max = 1.2;
  pv.pf_min = 0.85;
  pv.p_avail = 0.9;
  CapabilitySet load;
  load.kind = DerKind::FlexibleLoad;
  load.p_min = -1.0;
  load.p_max = -0.1;
  load.pf_fixed = 0.9;
  for (const auto& c : {pv, load}) {
    for (int k = 0; k < 500; ++k) {
      const double a = u(rng), b = u(rng), x = u(rng), y = u(rng);
      const auto pa = project_capability(c, a, b);
      const auto px = project_capability(c, x, y);
      CHECK(std::hypot(pa.p - px.p, pa.q - px.q) <= std::hypot(a - x, b - y) + 1e-12);
    }
  }
}

TEST_CASE("flexible load projection") {
  CapabilitySet c;
  c.kind = DerKind::FlexibleLoad;
  c.p_min = -1.0;
  c.p_max = -0.2;
  c.pf_fixed = 0.8;
  const auto r = project_capability(c, -0.5, -0.375);
  CHECK(r.p == doctest::Approx(-0.5));
  CHECK(r.q == doctest::Approx(-0.375));
  const auto clamp = project_capability(c, 0.3, 0.0);
  CHECK(clamp.p == doctest::Approx(-0.2));
  CHECK(clamp.q == doctest::Approx(-0.15));
  c.p_min = 0.1;
  CHECK_THROWS_AS(project_capability(c, 0.0, 0.0), Error);
}

TEST_CASE("first-order output dynamics") {
  DerUnit u;
  u.cap.s_max = 2.0;
  u.cap.pf_min = 0.5;
  u.cap.p_avail = 2.0;
  u.p_c = 0.3;
  u.q_c = 0.1;
  auto same = step_der(u, 0.3, 0.1, 0.01);
  CHECK(same.p_c == 0.3);
  CHECK(same.q_c == 0.1);

  u.p_c = 0.0;
  u.q_c = 0.0;
  const auto one = step_der(u, 1.0, 0.0, 0.01);
  CHECK(one.p_c == doctest::Approx(0.05).epsilon(1e-14));

  DerUnit v = u;
  for (int k = 1; k <= 50; ++k) {
    v = step_der(v, 1.0, 0.0, 0.01);
    CHECK(1.0 - v.p_c == doctest::Approx(std::pow(0.95, k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(step_der(u, 1.0, 0.0, 0.25), Error);
  CHECK_THROWS_AS(step_der(u, 1.0, 0.0, 0.0), Error);
}

TEST_CASE("outputs stay feasible") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  DerUnit d;
  d.cap.s_max = 1.0;
  d.cap.pf_min = 0.9;
  d.cap.p_avail = 0.7;
  for (int k = 0; k < 2000; ++k) {
    d = step_der(d, u(rng), u(rng), 0.01);
    CHECK(in_pv(d.cap, d.p_c, d.q_c));
  }
}

TEST_CASE("transmission requirement") {
  CHECK(tso_requirement(0.02, 1.0, 1.0) == 0.0);
  CHECK(tso_requirement(0.02, 1.001, 1.0) == doctest::Approx(2e-5));
  CHECK(tso_requirement(-0.02, 1.001, 1.0) <= 0.0);
}

TEST_CASE("DER and gain files") {
  oracle::TempDir dir;
  const auto f = dir.file("der.csv",
                          "node,kind,s_rating_pu,tau_p_s,tau_q_s,pf_min\n2,pv,0.5,0.2,0.2,0.9\n3,load,0.2,0.3,0.3,0.95\n");
  const auto ders = load_ders(f);
  REQUIRE(ders.size() == 2);
  CHECK(ders[0].cap.kind == DerKind::PvInverter);
  CHECK(ders[0].cap.pf_min == 0.9);
  CHECK(ders[1].cap.kind == DerKind::FlexibleLoad);
  CHECK(ders[1].cap.p_min == doctest::Approx(-0.19));
  const auto bad = dir.file("bad.csv", "node,kind,s_rating_pu,tau_p_s,tau_q_s,pf_min\n2,wind,0.5,0.2,0.2,0.9\n");
  CHECK_THROWS_AS(load_ders(bad), Error);
  const auto g = dir.file("g.csv", "node,k_pv,k_pf,k_qv,k_qf\n2,-0.1,0.2,-0.3,0.4\n");
  const auto gains = load_gains(g);
  REQUIRE(gains.size() == 1);
  CHECK(gains[0].gains == DroopGains{-0.1, 0.2, -0.3, 0.4});
}
