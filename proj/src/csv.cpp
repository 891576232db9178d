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

#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "droopsched/error.hpp"

namespace droopsched::csv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  fail(ErrorCode::Parse, fmt::format("{}:1: missing column '{}'", path, name));
}

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, fmt::format("cannot open file '{}'", path));
  Table t;
  t.path = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = split(s);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      fail(ErrorCode::Parse, fmt::format("{}:{}: expected {} fields, got {}", path, lineno,
                                         t.header.size(), fields.size()));
    t.rows.push_back({lineno, std::move(fields)});
  }
  if (t.header.empty()) fail(ErrorCode::Parse, fmt::format("{}: missing header line", path));
  return t;
}

double to_double(const Table& t, const Row& row, std::size_t col) {
  const std::string& f = row.fields[col];
  double v = 0.0;
  const auto* end = f.data() + f.size();
  const auto res = std::from_chars(f.data(), end, v);
  if (f.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    fail(ErrorCode::Parse, fmt::format("{}:{}: bad number '{}' in column '{}'", t.path, row.line, f,
                                       t.header[col]));
  return v;
}

int to_int(const Table& t, const Row& row, std::size_t col) {
  const std::string& f = row.fields[col];
  int v = 0;
  const auto* end = f.data() + f.size();
  const auto res = std::from_chars(f.data(), end, v);
  if (f.empty() || res.ec != std::errc() || res.ptr != end)
    fail(ErrorCode::Parse, fmt::format("{}:{}: bad integer '{}' in column '{}'", t.path, row.line, f,
                                       t.header[col]));
  return v;
}

}  // namespace droopsched::csv
