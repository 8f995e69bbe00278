// Copyright 2026 The qspace Authors
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

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qspace {

/// Shortest round-trip decimal form; identical bytes on every run.
std::string format_real(double value);

/// Headerless CSV of reals, one matrix row per line.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header);
/// Reads a headerless CSV of reals; throws IoError on ragged rows or
/// unparseable cells.
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

/// Splits one CSV line on commas (no quoting support needed for numeric data;
/// text cells are quoted with "" escaping).
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& cell);

/// Writes to `path` through a temporary sibling file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace qspace
