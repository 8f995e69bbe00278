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

#include "qspace/log_io.hpp"

#include <fstream>
#include <sstream>

#include "qspace/parser.hpp"

namespace qspace {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

void parse_into(LogRecord& record, const Schema& schema) {
  try {
    record.ir = parse(record.sql, schema);
  } catch (const Error& e) {
    record.failure = ParseFailure{e.kind(), e.detail()};
  }
}

}  // namespace

std::vector<LogRecord> read_log(std::istream& in, const Schema& schema, LogFormat format) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    strip_cr(line);
    lines.push_back(std::move(line));
  }

  std::size_t first = 0;
  while (first < lines.size() && is_blank(lines[first])) ++first;
  if (format == LogFormat::Auto) {
    format = LogFormat::Plain;
    if (first < lines.size() && lines[first].find('\t') != std::string::npos) {
      for (const auto& field : split_tabs(lines[first]))
        if (to_lower(field) == "sql") format = LogFormat::Tsv;
    }
  }

  std::vector<LogRecord> records;
  if (format == LogFormat::Plain) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto& line = lines[i];
      if (is_blank(line)) continue;
      auto lead = line.find_first_not_of(" \t");
      if (line[lead] == '#') continue;
      LogRecord record;
      record.index = records.size();
      record.line = i + 1;
      record.sql = line.substr(lead);
      parse_into(record, schema);
      records.push_back(std::move(record));
    }
    return records;
  }

  if (first >= lines.size()) return records;
  auto header = split_tabs(lines[first]);
  std::size_t sql_column = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    header[c] = to_lower(header[c]);
    if (header[c] == "sql") sql_column = c;
  }
  if (sql_column == header.size())
    fail(ErrorKind::IoError, "TSV log header lacks a 'sql' column");
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    auto fields = split_tabs(lines[i]);
    if (fields.size() != header.size())
      fail(ErrorKind::IoError, "TSV line " + std::to_string(i + 1) + " has " +
                                   std::to_string(fields.size()) + " fields, expected " +
                                   std::to_string(header.size()));
    LogRecord record;
    record.index = records.size();
    record.line = i + 1;
    record.sql = fields[sql_column];
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != sql_column) record.metadata[header[c]] = fields[c];
    parse_into(record, schema);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<LogRecord> load_log(const std::string& path, const Schema& schema, LogFormat format) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open log file '" + path + "'");
  return read_log(in, schema, format);
}

std::vector<QueryIR> parsed_queries(const std::vector<LogRecord>& log) {
  std::vector<QueryIR> out;
  for (const auto& record : log)
    if (record.ir) out.push_back(*record.ir);
  return out;
}

std::vector<std::size_t> parsed_indices(const std::vector<LogRecord>& log) {
  std::vector<std::size_t> out;
  for (const auto& record : log)
    if (record.ir) out.push_back(record.index);
  return out;
}

}  // namespace qspace
