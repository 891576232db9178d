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

#include "droopsched/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "csv.hpp"
#include "droopsched/error.hpp"

namespace droopsched {

namespace {

namespace fs = std::filesystem;

csv::Table open_table(const fs::path& dir, const char* name) {
  const fs::path p = dir / name;
  if (!fs::is_regular_file(p)) fail(ErrorCode::Io, fmt::format("trace file '{}' not found", p.string()));
  return csv::read(p.string());
}

std::vector<std::size_t> columns_with_prefix(const csv::Table& t, const std::string& prefix) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].rfind(prefix, 0) == 0) out.push_back(i);
  return out;
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::Io, fmt::format("cannot write '{}'", p.string()));
  return f;
}

}  // namespace

FileMetrics metrics_from_files(const std::string& trace_dir, double v_min, double v_max) {
  const fs::path dir(trace_dir);
  FileMetrics out;
  Metrics& m = out.metrics;

  const csv::Table volt = open_table(dir, "voltages.csv");
  const auto ct = volt.column("t_s");
  auto vcols = columns_with_prefix(volt, "v_");
  vcols.erase(std::remove(vcols.begin(), vcols.end(), volt.column("v_0")), vcols.end());
  if (volt.rows.empty() || vcols.empty()) fail(ErrorCode::Parse, "voltages.csv is empty");
  double prev_t = 0.0;
  long bad = 0;
  double interval = 0.0;
  bool first = true;
  for (const auto& row : volt.rows) {
    const double t = csv::to_double(volt, row, ct);
    double lo = 1e300, hi = -1e300;
    for (const auto c : vcols) {
      const double v = csv::to_double(volt, row, c);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (first) {
      m.max_voltage = hi;
      m.min_voltage = lo;
    } else {
      m.max_voltage = std::max(m.max_voltage, hi);
      m.min_voltage = std::min(m.min_voltage, lo);
      interval = t - prev_t;
      if (hi > v_max || lo < v_min) ++bad;
    }
    prev_t = t;
    first = false;
  }
  m.violation_duration_s = static_cast<double>(bad) * interval;
  m.max_excursion = std::max({0.0, m.max_voltage - v_max, v_min - m.min_voltage});

  const csv::Table duals = open_table(dir, "duals.csv");
  const auto dt_col = duals.column("t_s"), cc = duals.column("cost"), ce = duals.column("e_meas");
  std::vector<double> bt;
  double e2 = 0.0;
  for (const auto& row : duals.rows) {
    bt.push_back(csv::to_double(duals, row, dt_col));
    m.cost_sum += csv::to_double(duals, row, cc);
    const double e = csv::to_double(duals, row, ce);
    e2 += e * e;
  }
  // one boundary means duration == tau_s
  const double tau_s = bt.size() >= 2 ? bt[1] - bt[0] : prev_t;
  m.total_cost = m.cost_sum * tau_s;
  m.rms_freq_error = bt.empty() ? 0.0 : std::sqrt(e2 / static_cast<double>(bt.size()));

  const csv::Table gains = open_table(dir, "gains.csv");
  const auto cn = gains.column("node"), c1 = gains.column("k_pv"), c2 = gains.column("k_pf"),
             c3 = gains.column("k_qv"), c4 = gains.column("k_qf");
  std::map<int, std::size_t> slot;
  for (const auto& row : gains.rows) {
    const int node = csv::to_int(gains, row, cn);
    auto it = slot.find(node);
    if (it == slot.end()) {
      it = slot.emplace(node, out.der_nodes.size()).first;
      out.der_nodes.push_back(node);
      m.effort.push_back(0.0);
    }
    const double s = std::abs(csv::to_double(gains, row, c1)) + std::abs(csv::to_double(gains, row, c2)) +
                     std::abs(csv::to_double(gains, row, c3)) + std::abs(csv::to_double(gains, row, c4));
    m.effort[it->second] += s * tau_s;
  }
  return out;
}

void write_plot_data(const std::string& trace_dir, const std::string& out_dir) {
  const fs::path dir(trace_dir), od(out_dir);
  std::error_code ec;
  fs::create_directories(od, ec);
  if (ec) fail(ErrorCode::Io, fmt::format("cannot create '{}': {}", out_dir, ec.message()));

  {
    const csv::Table t = open_table(dir, "voltages.csv");
    const auto ct = t.column("t_s");
    const auto vcols = columns_with_prefix(t, "v_");
    auto f = open_out(od / "fig_voltages.csv");
    f << "t_s,bus,v_pu\n";
    for (const auto& row : t.rows)
      for (const auto c : vcols) f << row.fields[ct] << ',' << t.header[c].substr(2) << ',' << row.fields[c] << "\n";
  }
  {
    const csv::Table t = open_table(dir, "outputs.csv");
    const auto ct = t.column("t_s"), cn = t.column("node"), cp = t.column("p_c"), cq = t.column("q_c");
    auto f = open_out(od / "fig_outputs.csv");
    f << "t_s,node,quantity,value\n";
    for (const auto& row : t.rows) {
      f << row.fields[ct] << ',' << row.fields[cn] << ",p_c," << row.fields[cp] << "\n";
      f << row.fields[ct] << ',' << row.fields[cn] << ",q_c," << row.fields[cq] << "\n";
    }
  }
  {
    const csv::Table t = open_table(dir, "gains.csv");
    const auto ct = t.column("t_s"), cn = t.column("node");
    auto f = open_out(od / "fig_gains.csv");
    f << "t_s,node,gain,value\n";
    for (const auto& row : t.rows)
      for (const char* g : {"k_pv", "k_pf", "k_qv", "k_qf"})
        f << row.fields[ct] << ',' << row.fields[cn] << ',' << g << ',' << row.fields[t.column(g)] << "\n";
  }
  {
    const csv::Table t = open_table(dir, "frequency.csv");
    const auto ct = t.column("t_s"), cr = t.column("dp_required"), cd = t.column("dp_delivered");
    auto f = open_out(od / "fig_frequency.csv");
    f << "t_s,series,value\n";
    for (const auto& row : t.rows) {
      f << row.fields[ct] << ",required," << row.fields[cr] << "\n";
      f << row.fields[ct] << ",delivered," << row.fields[cd] << "\n";
    }
  }
  {
    const csv::Table t = open_table(dir, "duals.csv");
    const auto ct = t.column("t_s"), cc = t.column("cost"), ce = t.column("e_meas");
    auto f = open_out(od / "fig_cost.csv");
    f << "t_s,cost,cumulative_cost,e_meas\n";
    double cum = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& row = t.rows[i];
      const double tau = i + 1 < t.rows.size() ? csv::to_double(t, t.rows[i + 1], ct) - csv::to_double(t, row, ct)
                         : i > 0              ? csv::to_double(t, row, ct) - csv::to_double(t, t.rows[i - 1], ct)
                                              : 0.0;
      cum += csv::to_double(t, row, cc) * tau;
      f << row.fields[ct] << ',' << row.fields[cc] << ',' << num(cum) << ',' << row.fields[ce] << "\n";
    }
  }
}

}  // namespace droopsched
