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

#include <string>

#include "droopsched/scheduler.hpp"
#include "droopsched/sim.hpp"

namespace droopsched {

// INI layout:
//   [files]     network, ders, loads, pv, frequency, events, output_dir
//   [network]   v_sub
//   [sim]       SimConfig fields, controller by name, static_k_pv .. static_k_qf
//   [scheduler] SchedulerConfig fields
// Relative paths are taken relative to the directory holding the file.
struct RunConfig {
  std::string network_path;
  std::string der_path;
  ProfilePaths profiles;
  std::string output_dir;
  double v_sub = 1.0;
  SimConfig sim;
  SchedulerConfig sched;
};

// Throws Error(Io) if unreadable, Error(Parse) on bad values or unknown keys.
RunConfig load_config(const std::string& path);

// Paths are written verbatim, numbers round-trip exactly.
void write_config(const RunConfig& cfg, const std::string& path);

// Single-key access using the INI names. set_config_value does not resolve
// relative paths.
void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& section, const std::string& key);

// Module invariants and presence of every referenced file.
void validate_config(const RunConfig& cfg);

// Reads network, DER and profile files.
RunInputs build_inputs(const RunConfig& cfg);

}  // namespace droopsched
