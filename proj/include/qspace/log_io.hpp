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

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qspace/error.hpp"
#include "qspace/query_ir.hpp"
#include "qspace/schema.hpp"

namespace qspace {

struct ParseFailure {
  ErrorKind kind;
  std::string message;
};

/// One statement of a query log. `ir` is present iff parsing succeeded;
/// otherwise `failure` records why.
struct LogRecord {
  std::size_t index = 0;
  std::size_t line = 0;  // 1-based source line
  std::string sql;
  std::optional<QueryIR> ir;
  std::optional<ParseFailure> failure;
  std::map<std::string, std::string> metadata;
};

enum class LogFormat { Auto, Plain, Tsv };

/// Plain logs hold one statement per line; blank lines and lines starting
/// with '#' are skipped. TSV logs carry a header with a required `sql`
/// column; every other column is kept as metadata.
std::vector<LogRecord> read_log(std::istream& in, const Schema& schema,
                                LogFormat format = LogFormat::Auto);
std::vector<LogRecord> load_log(const std::string& path, const Schema& schema,
                                LogFormat format = LogFormat::Auto);

/// Parsed records only, in log order.
std::vector<QueryIR> parsed_queries(const std::vector<LogRecord>& log);
std::vector<std::size_t> parsed_indices(const std::vector<LogRecord>& log);

}  // namespace qspace
