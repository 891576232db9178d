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
#include <vector>

#include "droopsched/sim.hpp"

namespace droopsched {

struct FileMetrics {
  std::vector<int> der_nodes;
  Metrics metrics;
};

// Recomputes the run metrics from the trace files alone. Voltage statistics
// use the recorded rows, so they agree with the in-memory metrics when the
// trace was recorded every dt.
FileMetrics metrics_from_files(const std::string& trace_dir, double v_min, double v_max);

// Long-format tables for plotting: fig_voltages.csv, fig_outputs.csv,
// fig_gains.csv, fig_frequency.csv, fig_cost.csv.
void write_plot_data(const std::string& trace_dir, const std::string& out_dir);

}  // namespace droopsched
