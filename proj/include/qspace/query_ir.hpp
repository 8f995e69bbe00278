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

#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspace/schema.hpp"

namespace qspace {

struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
  std::string str() const { return table + "." + column; }
};

enum class Aggregate { None, Count, Sum, Avg, Min, Max };

std::string_view to_string(Aggregate agg);

/// A projection item: a plain column, an aggregate over a column, `*`, or
/// COUNT(*).
struct SelectItem {
  Aggregate aggregate = Aggregate::None;
  bool star = false;
  ColumnRef column;  // empty when star

  auto operator<=>(const SelectItem&) const = default;

  static SelectItem plain(ColumnRef ref) { return {Aggregate::None, false, std::move(ref)}; }
  static SelectItem all() { return {Aggregate::None, true, {}}; }
};

/// Equi-join between two distinct columns, stored with left < right.
struct JoinPair {
  ColumnRef left;
  ColumnRef right;

  auto operator<=>(const JoinPair&) const = default;

  static JoinPair make(ColumnRef a, ColumnRef b);
};

enum class CompareOp { Eq, Lt, Gt, Le, Ge, Ne, Like };

std::string_view to_string(CompareOp op);
CompareOp flip(CompareOp op);

using Constant = std::variant<double, std::string>;

struct Predicate {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  Constant value;

  auto operator<=>(const Predicate&) const = default;
  bool operator==(const Predicate&) const = default;
};

/// Canonical, clause-order independent form of a single-block
/// SELECT-PROJECT-JOIN query.
struct QueryIR {
  std::set<std::string> from_set;
  std::set<SelectItem> select_set;
  std::set<JoinPair> join_set;
  std::set<Predicate> pred_set;
  std::set<ColumnRef> group_set;
  std::set<ColumnRef> order_set;

  bool operator==(const QueryIR&) const = default;
};

/// Checks every invariant of `ir` against `schema`; throws the matching error.
void validate(const QueryIR& ir, const Schema& schema);

/// Deterministic SQL text; sets are serialized in lexicographic order.
std::string emit(const QueryIR& ir);

/// Clause roles used to tag fragments, in a fixed order.
enum class Role { From, Select, Join, Pred, Group, Order };
inline constexpr std::size_t kRoleCount = 6;
std::string_view role_prefix(Role role);

/// Role-tagged syntactic units, e.g. "FROM:t1", "SEL:t1.a", "PRED:t1.a:>".
/// Predicate constants are not part of any fragment.
std::set<std::string> fragments(const QueryIR& ir);
/// Same fragments split by role, indexed by static_cast<size_t>(Role).
std::vector<std::set<std::string>> fragments_by_role(const QueryIR& ir);

std::string fragment(Role role, const std::string& body);
std::string select_fragment_body(const SelectItem& item);
std::string join_fragment_body(const JoinPair& join);
std::string pred_fragment_body(const ColumnRef& column, CompareOp op);

/// Every fragment any accepted query on `schema` can produce.
std::set<std::string> fragment_universe(const Schema& schema);

std::string format_number(double value);
std::string quote_text(std::string_view text);

nlohmann::ordered_json to_json(const QueryIR& ir);

}  // namespace qspace
