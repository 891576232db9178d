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
#include <map>
#include <string>
#include <vector>

#include "droopsched/droop.hpp"
#include "droopsched/error.hpp"
#include "droopsched/network.hpp"
#include "droopsched/scheduler.hpp"

namespace droopsched {

// Piecewise linear in time, endpoint values held outside the samples.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<double> t, std::vector<double> y);
  static TimeSeries constant(double value) { return TimeSeries({0.0}, {value}); }
  double at(double time) const;
  bool empty() const { return t_.empty(); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::vector<double> t_, y_;
};

// Values at t0, t0 + dt, ..., up to t_end inclusive.
std::vector<double> resample(const TimeSeries& s, double t0, double t_end, double dt);

struct Event {
  double time = 0.0;
  int node = 0;
  bool connect = true;
};

struct ScenarioData {
  std::vector<TimeSeries> p_load, q_load;  // demand, per bus 1..n
  std::map<int, TimeSeries> pv_avail;      // by DER node
  TimeSeries omega;
  std::vector<Event> events;
};

struct ProfilePaths {
  std::string loads;      // time_s,node,p_load_pu,q_load_pu
  std::string pv;         // time_s,node,p_avail_pu
  std::string frequency;  // time_s,omega_pu
  std::string events;     // time_s,node,action
};

// Missing paths give zero loads, p_avail = s_max and nominal frequency.
ScenarioData ingest_profiles(const ProfilePaths& paths, const NetworkModel& model, const std::vector<DerUnit>& ders,
                             double omega_star = 1.0);

enum class Controller { Scheduled, Static, None, SetpointHold };
Controller parse_controller(const std::string& s);
const char* controller_name(Controller c);

struct SimConfig {
  double dt = 0.01;
  double tau_s = 30.0;
  double duration = 7200.0;
  double v_star = 1.0;
  double omega_star = 1.0;
  double k_agg = 0.02;
  Controller controller = Controller::Scheduled;
  DroopGains static_gains{-0.02, 0.0, -0.02, 0.0};
  std::uint64_t seed = 1;
  double record_every = 1.0;
  double gain_margin = 1e-6;
  double freq_gain_box = 10.0;

  void validate() const;
};

struct StateRecord {
  double t = 0.0;
  std::vector<double> v;  // all buses, substation first
  std::vector<double> p_c, q_c;  // per DER in fleet order
  double omega = 1.0;
  double dp_required = 0.0;
  double dp_delivered = 0.0;
};

struct SchedRecord {
  double t = 0.0;
  std::vector<DroopGains> gains;  // per DER in fleet order, zero when not scheduled
  std::vector<bool> scheduled;
  Eigen::VectorXd mu, cvar_hi, cvar_lo, l;
  Eigen::Vector2d lambda = Eigen::Vector2d::Zero();
  double e_model = 0.0;  // predicted error with the new frequency gains
  double e_meas = 0.0;   // measured error before the update
  double cost = 0.0;
};

struct SimTrace {
  std::vector<int> der_nodes;
  std::vector<StateRecord> states;
  std::vector<SchedRecord> sched;
  std::vector<double> vmax_step;  // extreme bus voltages after every dt step
  std::vector<double> vmin_step;
  double dt = 0.0;
  double tau_s = 0.0;
  double v_min = 0.95, v_max = 1.05;
  double gamma = 0.0;
};

struct RunInputs {
  NetworkModel network;
  std::vector<DerUnit> ders;
  ScenarioData scenario;
  SimConfig sim;
  SchedulerConfig sched;
};

// Raised when the power flow fails mid-run. Carries the trace up to the
// last good step.
class SimulationError : public Error {
 public:
  SimulationError(ErrorCode code, const std::string& what, double time, SimTrace partial)
      : Error(code, what), time_(time), partial_(std::move(partial)) {}
  double time() const { return time_; }
  const SimTrace& partial() const { return partial_; }

 private:
  double time_;
  SimTrace partial_;
};

SimTrace run_closed_loop(const RunInputs& in);

struct Metrics {
  double total_cost = 0.0;  // sum of C_t * tau_s
  double cost_sum = 0.0;
  double violation_duration_s = 0.0;
  double max_voltage = 0.0;
  double min_voltage = 0.0;
  double max_excursion = 0.0;
  double rms_freq_error = 0.0;
  std::vector<double> effort;  // per DER, time integral of |gains| over scheduler periods

  std::vector<std::pair<std::string, double>> rows(const std::vector<int>& der_nodes) const;
};

Metrics compute_metrics(const SimTrace& trace);

// voltages.csv, gains.csv, duals.csv, frequency.csv, outputs.csv, metrics.csv
void write_trace(const SimTrace& trace, const std::string& dir);

std::string iso_duration(double seconds);

}  // namespace droopsched
