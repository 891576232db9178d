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

namespace droopsched::csv {

struct Row {
  int line = 0;
  std::vector<std::string> fields;
};

struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<Row> rows;

  // column index by name, throws Error(Parse) if absent
  std::size_t column(const std::string& name) const;
};

// Reads a comma separated file with a header line. Blank lines and lines
// starting with '#' are skipped. Every row must have as many fields as the header.
Table read(const std::string& path);

double to_double(const Table& t, const Row& row, std::size_t col);
int to_int(const Table& t, const Row& row, std::size_t col);

}  // namespace droopsched::csv
