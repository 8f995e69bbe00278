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

#include "qspace/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "qspace/error.hpp"

namespace qspace {

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

namespace {

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto first = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(first) || first == '_')) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

}  // namespace

Schema::Schema(std::vector<Table> tables) : tables_(std::move(tables)) {
  if (tables_.empty()) fail(ErrorKind::SchemaError, "schema has no tables");
  std::set<std::string> seen_tables;
  for (auto& table : tables_) {
    table.name = to_lower(table.name);
    if (!is_identifier(table.name))
      fail(ErrorKind::SchemaError, "invalid table name '" + table.name + "'");
    if (!seen_tables.insert(table.name).second)
      fail(ErrorKind::SchemaError, "duplicate table '" + table.name + "'");
    if (table.columns.empty())
      fail(ErrorKind::SchemaError, "table '" + table.name + "' has no columns");
    std::set<std::string> seen_columns;
    for (auto& column : table.columns) {
      column.name = to_lower(column.name);
      if (!is_identifier(column.name))
        fail(ErrorKind::SchemaError, "invalid column name '" + column.name + "'");
      if (!seen_columns.insert(column.name).second)
        fail(ErrorKind::SchemaError,
             "duplicate column '" + table.name + "." + column.name + "'");
    }
  }
}

std::optional<std::size_t> Schema::table_index(std::string_view table) const {
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (tables_[i].name == table) return i;
  return std::nullopt;
}

std::optional<std::size_t> Schema::column_index(std::size_t table,
                                                std::string_view column) const {
  const auto& columns = tables_.at(table).columns;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == column) return i;
  return std::nullopt;
}

bool Schema::has_column(std::string_view table, std::string_view column) const {
  auto t = table_index(table);
  return t && column_index(*t, column);
}

ColumnType Schema::column_type(std::string_view table,
                               std::string_view column) const {
  auto t = table_index(table);
  if (!t) fail(ErrorKind::UnknownIdentifier, "table '" + std::string(table) + "'");
  auto c = column_index(*t, column);
  if (!c)
    fail(ErrorKind::UnknownIdentifier,
         "column '" + std::string(table) + "." + std::string(column) + "'");
  return tables_[*t].columns[*c].type;
}

Schema Schema::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) fail(ErrorKind::SchemaError, "schema must be a JSON object");
  std::vector<Table> tables;
  for (const auto& [name, columns] : doc.items()) {
    if (!columns.is_array())
      fail(ErrorKind::SchemaError, "table '" + name + "' must map to an array");
    Table table{name, {}};
    for (const auto& entry : columns) {
      if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
        fail(ErrorKind::SchemaError, "column entry of '" + name + "' lacks a name");
      Column column{entry["name"].get<std::string>(), ColumnType::Numeric};
      if (entry.contains("type")) {
        auto type = to_lower(entry["type"].get<std::string>());
        if (type == "numeric") {
          column.type = ColumnType::Numeric;
        } else if (type == "text") {
          column.type = ColumnType::Text;
        } else {
          fail(ErrorKind::SchemaError, "unknown column type '" + type + "'");
        }
      }
      table.columns.push_back(std::move(column));
    }
    tables.push_back(std::move(table));
  }
  return Schema(std::move(tables));
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open schema file '" + path + "'");
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  return from_json(doc);
}

nlohmann::ordered_json Schema::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& table : tables_) {
    auto columns = nlohmann::ordered_json::array();
    for (const auto& column : table.columns)
      columns.push_back({{"name", column.name},
                         {"type", column.type == ColumnType::Numeric ? "numeric" : "text"}});
    doc[table.name] = std::move(columns);
  }
  return doc;
}

}  // namespace qspace
