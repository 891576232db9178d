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
#include <string>
#include <vector>

#include "droopsched/network.hpp"

namespace droopsched::synth {

// Parabolic clear-sky arc: peak at t_noon, zero beyond +-half_width.
double clear_sky(double t, double peak, double t_noon, double half_width);

// +amp until t_first_flip, then alternating every half_period.
double square_wave(double t, double amp, double t_first_flip, double half_period);

// Six buses (substation included), two laterals. Impedances of a low-voltage
// feeder expressed on a 100 MVA base, i.e. scaled by z_scale.
std::vector<Branch> feeder6(double z_scale = 100.0);

// 37 buses, random radial tree with laterals of bounded depth.
std::vector<Branch> feeder37(std::uint64_t seed = 37, double z_scale = 100.0);

enum class Scenario { Overvoltage, Frequency, PlugAndPlay, Feeder37 };
Scenario parse_scenario(const std::string& s);
const char* scenario_name(Scenario s);

// Writes network.csv, ders.csv, loads.csv, pv.csv, frequency.csv, events.csv
// and config.ini into dir.
void write_scenario(Scenario s, const std::string& dir);

}  // namespace droopsched::synth
