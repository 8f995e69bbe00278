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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qspace {

enum class ColumnType { Numeric, Text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::Numeric;

  bool operator==(const Column&) const = default;
};

struct Table {
  std::string name;
  std::vector<Column> columns;

  bool operator==(const Table&) const = default;
};

/// Database schema the query dialect and the generative model are defined
/// over. Table and column order is significant: it fixes the layout of every
/// probability vector built on top of the schema.
class Schema {
 public:
  Schema() = default;
  /// Validates and lower-cases names. Throws SchemaError.
  explicit Schema(std::vector<Table> tables);

  const std::vector<Table>& tables() const noexcept { return tables_; }
  std::size_t table_count() const noexcept { return tables_.size(); }

  std::optional<std::size_t> table_index(std::string_view table) const;
  std::optional<std::size_t> column_index(std::size_t table,
                                          std::string_view column) const;
  bool has_column(std::string_view table, std::string_view column) const;
  /// Type of an existing column; throws UnknownIdentifier otherwise.
  ColumnType column_type(std::string_view table, std::string_view column) const;

  bool operator==(const Schema&) const = default;

  /// Table -> [{name, type}] with file order preserved.
  static Schema from_json(const nlohmann::ordered_json& doc);
  static Schema load(const std::string& path);
  nlohmann::ordered_json to_json() const;

 private:
  std::vector<Table> tables_;
};

std::string to_lower(std::string_view text);

}  // namespace qspace
