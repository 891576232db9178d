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

#include "droopsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "droopsched/error.hpp"

namespace droopsched {

void SchedulerConfig::validate() const {
  const auto bad = [](const char* what) { fail(ErrorCode::InvalidArgument, fmt::format("scheduler: {}", what)); };
  if (!(alpha_primal > 0.0) || !(alpha_dual > 0.0)) bad("step sizes must be positive");
  if (!(phi > 0.0) || !(psi > 0.0) || !(reg_tau > 0.0)) bad("regularization weights must be positive");
  if (!(beta > 0.0 && beta < 1.0)) bad("beta must lie in (0, 1)");
  if (n_samples < 1) bad("n_samples must be at least 1");
  if (!(noise_std >= 0.0)) bad("noise_std must be nonnegative");
  if (!(v_min < v_max)) bad("v_min must be below v_max");
  if (!(e_min < e_max)) bad("e_min must be below e_max");
  if (!(cost_w_f_lo <= cost_w_f_hi)) bad("frequency weight range is empty");
  if (!(tau_s > 0.0)) bad("tau_s must be positive");
  if (!(v_scale > 0.0) || !(e_scale > 0.0)) bad("constraint scales must be positive");
  if (inner_iters < 1) bad("inner_iters must be at least 1");
  if (!(band_backoff >= 0.0 && band_backoff < 1.0)) bad("band_backoff must lie in [0, 1)");
}

int SchedulerState::slot_of(int node) const {
  const auto it = std::find(nodes.begin(), nodes.end(), node);
  return it == nodes.end() ? -1 : static_cast<int>(it - nodes.begin());
}

DroopGains SchedulerState::gains(std::size_t slot) const {
  const auto m = static_cast<Eigen::Index>(slots());
  const auto j = static_cast<Eigen::Index>(slot);
  return {kappa_v(j), kappa_f(j), kappa_v(m + j), kappa_f(m + j)};
}

void SchedulerState::set_gains(std::size_t slot, const DroopGains& g) {
  const auto m = static_cast<Eigen::Index>(slots());
  const auto j = static_cast<Eigen::Index>(slot);
  kappa_v(j) = g.k_pv;
  kappa_v(m + j) = g.k_qv;
  kappa_f(j) = g.k_pf;
  kappa_f(m + j) = g.k_qf;
}

SchedulerState make_scheduler_state(std::size_t n_buses) {
  SchedulerState s;
  const auto n = static_cast<Eigen::Index>(n_buses);
  s.tau_p = s.tau_q = s.w_f = Eigen::VectorXd(0);
  s.kappa_v = s.kappa_f = s.prev_kappa_v = s.prev_kappa_f = Eigen::VectorXd(0);
  s.cvar_hi = s.cvar_lo = Eigen::VectorXd::Zero(n);
  s.mu = Eigen::VectorXd::Zero(2 * n);
  return s;
}

namespace {

Eigen::VectorXd insert_at(const Eigen::VectorXd& v, Eigen::Index pos, double value) {
  Eigen::VectorXd out(v.size() + 1);
  out << v.head(pos), value, v.tail(v.size() - pos);
  return out;
}

Eigen::VectorXd erase_at(const Eigen::VectorXd& v, Eigen::Index pos) {
  Eigen::VectorXd out(v.size() - 1);
  out << v.head(pos), v.tail(v.size() - pos - 1);
  return out;
}

// stacked (first half, second half) vectors
Eigen::VectorXd insert_pair(const Eigen::VectorXd& v, Eigen::Index pos) {
  const Eigen::Index m = v.size() / 2;
  Eigen::VectorXd out(2 * m + 2);
  out << v.head(pos), 0.0, v.segment(pos, m - pos), v.segment(m, pos), 0.0, v.tail(m - pos);
  return out;
}

Eigen::VectorXd erase_pair(const Eigen::VectorXd& v, Eigen::Index pos) {
  const Eigen::Index m = v.size() / 2;
  Eigen::VectorXd out(2 * m - 2);
  out << v.head(pos), v.segment(pos + 1, m - pos - 1), v.segment(m, pos), v.tail(m - pos - 1);
  return out;
}

}  // namespace

void add_unit(SchedulerState& state, int node, double tau_p, double tau_q, double w_f) {
  if (state.slot_of(node) >= 0) fail(ErrorCode::InvalidArgument, fmt::format("unit at node {} already scheduled", node));
  if (!(tau_p > 0.0) || !(tau_q > 0.0)) fail(ErrorCode::InvalidArgument, "time constants must be positive");
  const auto it = std::lower_bound(state.nodes.begin(), state.nodes.end(), node);
  const auto pos = static_cast<Eigen::Index>(it - state.nodes.begin());
  state.nodes.insert(it, node);
  state.tau_p = insert_at(state.tau_p, pos, tau_p);
  state.tau_q = insert_at(state.tau_q, pos, tau_q);
  state.w_f = insert_at(state.w_f, pos, w_f);
  state.kappa_v = insert_pair(state.kappa_v, pos);
  state.kappa_f = insert_pair(state.kappa_f, pos);
  state.prev_kappa_v = insert_pair(state.prev_kappa_v, pos);
  state.prev_kappa_f = insert_pair(state.prev_kappa_f, pos);
}

void remove_unit(SchedulerState& state, int node) {
  const int s = state.slot_of(node);
  if (s < 0) fail(ErrorCode::InvalidArgument, fmt::format("no scheduled unit at node {}", node));
  const auto pos = static_cast<Eigen::Index>(s);
  state.nodes.erase(state.nodes.begin() + s);
  state.tau_p = erase_at(state.tau_p, pos);
  state.tau_q = erase_at(state.tau_q, pos);
  state.w_f = erase_at(state.w_f, pos);
  state.kappa_v = erase_pair(state.kappa_v, pos);
  state.kappa_f = erase_pair(state.kappa_f, pos);
  state.prev_kappa_v = erase_pair(state.prev_kappa_v, pos);
  state.prev_kappa_f = erase_pair(state.prev_kappa_f, pos);
}

double draw_freq_weight(std::uint64_t seed, int node, const SchedulerConfig& cfg) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x57u,
                    static_cast<std::uint32_t>(node)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(cfg.cost_w_f_lo, cfg.cost_w_f_hi);
  return cfg.cost_w_f_lo == cfg.cost_w_f_hi ? cfg.cost_w_f_lo : dist(rng);
}

SampleSet draw_samples(const Eigen::VectorXd& v_meas, const SchedulerConfig& cfg, std::uint64_t seed) {
  SampleSet s;
  s.seed = seed;
  const Eigen::Index n = v_meas.size();
  s.xi = Eigen::MatrixXd::Zero(n, cfg.n_samples);
  if (cfg.noise_std == 0.0) return s;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < cfg.n_samples; ++k)
    for (Eigen::Index i = 0; i < n; ++i) s.xi(i, k) = cfg.noise_std * v_meas(i) * normal(rng);
  return s;
}

namespace {

void check_dims(const SensitivityModel& sm, const SchedulerState& state, const Eigen::VectorXd& dv) {
  const Eigen::Index n = sm.R.rows();
  const auto m = static_cast<Eigen::Index>(state.slots());
  if (dv.size() != n || sm.v0.size() != n || sm.H.size() != 2 * n || state.kappa_v.size() != 2 * m ||
      state.kappa_f.size() != 2 * m || state.prev_kappa_v.size() != 2 * m || state.prev_kappa_f.size() != 2 * m ||
      state.cvar_hi.size() != n || state.cvar_lo.size() != n || state.mu.size() != 2 * n)
    fail(ErrorCode::InvalidArgument, "scheduler: dimension mismatch");
  for (const int node : state.nodes)
    if (node < 1 || node > n) fail(ErrorCode::InvalidArgument, fmt::format("scheduler: bad node {}", node));
}

struct Hinge {
  Eigen::VectorXd l;  // 2n
  Eigen::VectorXd frac;  // 2n, share of samples with positive hinge argument
};

Hinge eval_hinge(const Eigen::VectorXd& vm, const SampleSet& samples, const Eigen::VectorXd& cvar_hi,
                 const Eigen::VectorXd& cvar_lo, const SchedulerConfig& cfg) {
  const Eigen::Index n = vm.size();
  const Eigen::Index ns = samples.xi.cols();
  if (samples.xi.rows() != n || cvar_hi.size() != n || cvar_lo.size() != n)
    fail(ErrorCode::InvalidArgument, "cvar_constraints: dimension mismatch");
  Hinge h{Eigen::VectorXd::Zero(2 * n), Eigen::VectorXd::Zero(2 * n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double sh = 0.0, sl = 0.0;
    int ch = 0, cl = 0;
    for (Eigen::Index s = 0; s < ns; ++s) {
      const double zh = vm(i) - cfg.v_max + samples.xi(i, s) + cvar_hi(i);
      const double zl = cfg.v_min - vm(i) - samples.xi(i, s) + cvar_lo(i);
      if (zh > 0.0) {
        sh += zh;
        ++ch;
      }
      if (zl > 0.0) {
        sl += zl;
        ++cl;
      }
    }
    const double inv = 1.0 / static_cast<double>(ns);
    h.l(i) = sh * inv - cvar_hi(i) * cfg.beta;
    h.l(n + i) = sl * inv - cvar_lo(i) * cfg.beta;
    h.frac(i) = ch * inv;
    h.frac(n + i) = cl * inv;
  }
  return h;
}

// Minimizer over t >= 0 of reg t^2 / 2 + c [mean[x + t]_+ - beta t]_+^2 / 2,
// the auxiliary problem with the row dual maximized out, and the hinge slope
// consistent with its stationarity condition.
struct TailMin {
  double t = 0.0;
  double frac = 0.0;
};

TailMin tail_minimizer(std::vector<double>& x, double c, double beta, double reg) {
  const auto N = static_cast<double>(x.size());
  std::sort(x.begin(), x.end(), std::greater<>());
  std::size_t j = 0;
  double S = 0.0;
  while (j < x.size() && x[j] > 0.0) S += x[j++];
  double lo = 0.0;
  for (;;) {
    const double f = static_cast<double>(j) / N;
    const double g = f - beta;
    // on this segment l(t) = S / N + g t
    if (S / N + g * lo <= 0.0 || g >= 0.0) return {lo, f};
    const double next = j < x.size() ? -x[j] : std::numeric_limits<double>::infinity();
    // root of the linear derivative; l stays positive up to it
    const double stat = -c * (S / N) * g / (reg + c * g * g);
    if (stat <= next) return {std::max(stat, lo), f};
    // sample j joins at t = next
    const double l_next = S / N + g * next;
    const double g_after = static_cast<double>(j + 1) / N - beta;
    if (reg * next + c * l_next * g_after >= 0.0) return {next, beta - reg * next / (c * l_next)};
    S += x[j];
    ++j;
    lo = next;
  }
}

double omega_dev(const SchedulingPoint& rho) { return rho.omega - rho.omega_star; }

}  // namespace

Eigen::VectorXd voltage_model(const SensitivityModel& sm, const SchedulerState& state, const SchedulingPoint& rho,
                              const Eigen::VectorXd& dv) {
  check_dims(sm, state, dv);
  const Eigen::Index n = sm.R.rows();
  const auto m = static_cast<Eigen::Index>(state.slots());
  const double dw = omega_dev(rho);
  Eigen::VectorXd v = sm.v0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index c = state.nodes[static_cast<std::size_t>(j)] - 1;
    const double pj = state.kappa_v(j) * dv(c) + state.prev_kappa_f(j) * dw;
    const double qj = state.kappa_v(m + j) * dv(c) + state.prev_kappa_f(m + j) * dw;
    for (Eigen::Index i = 0; i < n; ++i) v(i) += sm.R(i, c) * pj + sm.X(i, c) * qj;
  }
  return v;
}

Eigen::VectorXd cvar_constraints(const Eigen::VectorXd& vm, const SampleSet& samples, const Eigen::VectorXd& cvar_hi,
                                 const Eigen::VectorXd& cvar_lo, const SchedulerConfig& cfg) {
  return eval_hinge(vm, samples, cvar_hi, cvar_lo, cfg).l;
}

double freq_error(const SensitivityModel& sm, const SchedulerState& state, const SchedulingPoint& rho,
                  const Eigen::VectorXd& dv) {
  check_dims(sm, state, dv);
  const Eigen::Index n = sm.R.rows();
  const auto m = static_cast<Eigen::Index>(state.slots());
  const double dw = omega_dev(rho);
  double e = sm.P0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index c = state.nodes[static_cast<std::size_t>(j)] - 1;
    e += sm.H(c) * (state.prev_kappa_v(j) * dv(c)) + sm.H(n + c) * (state.prev_kappa_v(m + j) * dv(c));
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index c = state.nodes[static_cast<std::size_t>(j)] - 1;
    e += sm.H(c) * state.kappa_f(j) * dw + sm.H(n + c) * state.kappa_f(m + j) * dw;
  }
  return e - rho.r_t * dw;
}

Eigen::Vector2d band_constraints(double e, const SchedulerConfig& cfg) {
  const double shrink = 0.5 * cfg.band_backoff * (cfg.e_max - cfg.e_min);
  return {-e + cfg.e_min + shrink, e - cfg.e_max + shrink};
}

double cost(const SchedulerState& state, const SchedulerConfig& cfg) {
  const auto m = static_cast<Eigen::Index>(state.slots());
  double c = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = cfg.cost_w_pv * state.kappa_v(j);
    const double b = cfg.cost_w_qv * state.kappa_v(m + j);
    const double f1 = state.w_f(j) * state.kappa_f(j);
    const double f2 = state.w_f(j) * state.kappa_f(m + j);
    c += a * a + b * b + f1 * f1 + f2 * f2;
  }
  return c;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> cost_gradient(const SchedulerState& state, const SchedulerConfig& cfg) {
  const auto m = static_cast<Eigen::Index>(state.slots());
  Eigen::VectorXd gv(2 * m), gf(2 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double wf2 = state.w_f(j) * state.w_f(j);
    gv(j) = 2.0 * cfg.cost_w_pv * cfg.cost_w_pv * state.kappa_v(j);
    gv(m + j) = 2.0 * cfg.cost_w_qv * cfg.cost_w_qv * state.kappa_v(m + j);
    gf(j) = 2.0 * wf2 * state.kappa_f(j);
    gf(m + j) = 2.0 * wf2 * state.kappa_f(m + j);
  }
  return {gv, gf};
}

double lagrangian(const SchedulerState& state, const SensitivityModel& sm, const SchedulingPoint& rho,
                  const SampleSet& samples, const SchedulerConfig& cfg, const Eigen::VectorXd& dv) {
  const Eigen::VectorXd vm = voltage_model(sm, state, rho, dv);
  const Eigen::VectorXd l = cvar_constraints(vm, samples, state.cvar_hi, state.cvar_lo, cfg);
  const Eigen::Vector2d r = band_constraints(freq_error(sm, state, rho, dv), cfg);
  return cost(state, cfg) + state.mu.dot(l) / cfg.v_scale + state.lambda.dot(r) / cfg.e_scale -
         0.5 * cfg.phi * state.mu.squaredNorm() - 0.5 * cfg.psi * state.lambda.squaredNorm() +
         0.5 * cfg.reg_tau * (state.cvar_hi.squaredNorm() + state.cvar_lo.squaredNorm());
}

namespace {

PrimalGradient gradient_from(const SchedulerState& state, const SensitivityModel& sm, const SchedulingPoint& rho,
                             const Hinge& h, const SchedulerConfig& cfg, const Eigen::VectorXd& dv) {
  const Eigen::Index n = sm.R.rows();
  const auto m = static_cast<Eigen::Index>(state.slots());
  const double dw = omega_dev(rho);
  PrimalGradient g;
  // weight on dv/dkappa from the voltage rows
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = (state.mu(i) * h.frac(i) - state.mu(n + i) * h.frac(n + i)) / cfg.v_scale;
  const double lam = (state.lambda(1) - state.lambda(0)) / cfg.e_scale;
  std::tie(g.kappa_v, g.kappa_f) = cost_gradient(state, cfg);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index c = state.nodes[static_cast<std::size_t>(j)] - 1;
    double sp = 0.0, sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sp += sm.R(i, c) * w(i);
      sq += sm.X(i, c) * w(i);
    }
    g.kappa_v(j) += sp * dv(c);
    g.kappa_v(m + j) += sq * dv(c);
    g.kappa_f(j) += lam * sm.H(c) * dw;
    g.kappa_f(m + j) += lam * sm.H(n + c) * dw;
  }
  g.cvar_hi.resize(n);
  g.cvar_lo.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.cvar_hi(i) = state.mu(i) * (h.frac(i) - cfg.beta) / cfg.v_scale + cfg.reg_tau * state.cvar_hi(i);
    g.cvar_lo(i) = state.mu(n + i) * (h.frac(n + i) - cfg.beta) / cfg.v_scale + cfg.reg_tau * state.cvar_lo(i);
  }
  return g;
}

}  // namespace

PrimalGradient lagrangian_gradient(const SchedulerState& state, const SensitivityModel& sm,
                                   const SchedulingPoint& rho, const SampleSet& samples,
                                   const SchedulerConfig& cfg, const Eigen::VectorXd& dv) {
  const Eigen::VectorXd vm = voltage_model(sm, state, rho, dv);
  const Hinge h = eval_hinge(vm, samples, state.cvar_hi, state.cvar_lo, cfg);
  return gradient_from(state, sm, rho, h, cfg, dv);
}

SchedulerState primal_dual_step(const SchedulerState& state, const SensitivityModel& sm, const SchedulingPoint& rho,
                                const SampleSet& samples, const SchedulerConfig& cfg,
                                const StabilityParams& stab, const Eigen::VectorXd& dv) {
  if (sm.rho.timestamp != rho.timestamp)
    fail(ErrorCode::StaleModel, fmt::format("sensitivity model built at t = {} used at t = {}", sm.rho.timestamp,
                                            rho.timestamp));
  const Eigen::VectorXd vm = voltage_model(sm, state, rho, dv);
  const Hinge h0 = eval_hinge(vm, samples, state.cvar_hi, state.cvar_lo, cfg);
  const Eigen::Vector2d r = band_constraints(freq_error(sm, state, rho, dv), cfg);

  SchedulerState next = state;
  next.mu = (state.mu + cfg.alpha_dual * (h0.l / cfg.v_scale - cfg.phi * state.mu)).cwiseMax(0.0);
  next.lambda = (state.lambda + cfg.alpha_dual * (r / cfg.e_scale - cfg.psi * state.lambda)).cwiseMax(0.0);

  Hinge h = h0;
  if (cfg.exact_cvar) {
    // auxiliaries at their best response with the row duals maximized out
    const Eigen::Index n = vm.size();
    std::vector<double> x(static_cast<std::size_t>(samples.xi.cols()));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int side = 0; side < 2; ++side) {
        for (Eigen::Index k = 0; k < samples.xi.cols(); ++k)
          x[static_cast<std::size_t>(k)] = side == 0 ? vm(i) - cfg.v_max + samples.xi(i, k)
                                                     : cfg.v_min - vm(i) - samples.xi(i, k);
        const TailMin tm = tail_minimizer(x, 1.0 / (cfg.phi * cfg.v_scale * cfg.v_scale), cfg.beta, cfg.reg_tau);
        (side == 0 ? next.cvar_hi : next.cvar_lo)(i) = tm.t;
        h.frac(side * n + i) = tm.frac;
      }
    }
  }
  const PrimalGradient g = gradient_from(next, sm, rho, h, cfg, dv);
  next.kappa_v = state.kappa_v - cfg.alpha_primal * g.kappa_v;
  next.kappa_f = state.kappa_f - cfg.alpha_primal * g.kappa_f;
  for (std::size_t j = 0; j < next.slots(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    next.set_gains(j, project_gains(next.gains(j), next.tau_p(jj), next.tau_q(jj), stab));
  }
  if (!cfg.exact_cvar) {
    next.cvar_hi = (state.cvar_hi - cfg.alpha_primal * g.cvar_hi).cwiseMax(0.0);
    next.cvar_lo = (state.cvar_lo - cfg.alpha_primal * g.cvar_lo).cwiseMax(0.0);
  }
  next.timestamp = rho.timestamp;
  return next;
}

std::pair<SchedulerState, std::vector<DroopGains>> schedule_step(const SchedulerState& state,
                                                                 const SensitivityModel& sm,
                                                                 const SchedulingPoint& rho,
                                                                 const SampleSet& samples,
                                                                 const SchedulerConfig& cfg,
                                                                 const StabilityParams& stab) {
  SchedulerState s = state;
  s.prev_kappa_v = s.kappa_v;
  s.prev_kappa_f = s.kappa_f;
  const Eigen::VectorXd dv = (rho.v_meas.array() - cfg.v_star).matrix();
  for (int k = 0; k < cfg.inner_iters; ++k) s = primal_dual_step(s, sm, rho, samples, cfg, stab, dv);
  std::vector<DroopGains> out;
  out.reserve(s.slots());
  for (std::size_t j = 0; j < s.slots(); ++j) out.push_back(s.gains(j));
  return {std::move(s), std::move(out)};
}

}  // namespace droopsched
