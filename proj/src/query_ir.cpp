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

#include "qspace/query_ir.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "qspace/error.hpp"

namespace qspace {

std::string_view to_string(Aggregate agg) {
  switch (agg) {
    case Aggregate::None: return "";
    case Aggregate::Count: return "count";
    case Aggregate::Sum: return "sum";
    case Aggregate::Avg: return "avg";
    case Aggregate::Min: return "min";
    case Aggregate::Max: return "max";
  }
  return "";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Like: return "LIKE";
  }
  return "";
}

CompareOp flip(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return CompareOp::Gt;
    case CompareOp::Gt: return CompareOp::Lt;
    case CompareOp::Le: return CompareOp::Ge;
    case CompareOp::Ge: return CompareOp::Le;
    default: return op;
  }
}

JoinPair JoinPair::make(ColumnRef a, ColumnRef b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  std::string out(buf.data(), end);
  if (out == "-0") out = "0";
  return out;
}

std::string quote_text(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

namespace {

constexpr std::array<Aggregate, 5> kAggregates = {
    Aggregate::Count, Aggregate::Sum, Aggregate::Avg, Aggregate::Min, Aggregate::Max};
constexpr std::array<CompareOp, 7> kOps = {CompareOp::Eq, CompareOp::Lt, CompareOp::Gt,
                                           CompareOp::Le, CompareOp::Ge, CompareOp::Ne,
                                           CompareOp::Like};

std::string upper(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string select_sql(const SelectItem& item) {
  std::string inner = item.star ? "*" : item.column.str();
  if (item.aggregate == Aggregate::None) return inner;
  return upper(to_string(item.aggregate)) + "(" + inner + ")";
}

std::string constant_sql(const Constant& value) {
  if (const auto* number = std::get_if<double>(&value)) return format_number(*number);
  return quote_text(std::get<std::string>(value));
}

template <typename Range, typename Fn>
std::vector<std::string> sorted_strings(const Range& range, Fn&& fn) {
  std::vector<std::string> out;
  for (const auto& item : range) out.push_back(fn(item));
  std::sort(out.begin(), out.end());
  return out;
}

std::string join_with(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void check_ref(const ColumnRef& ref, const QueryIR& ir, const Schema& schema) {
  if (!schema.has_column(ref.table, ref.column))
    fail(ErrorKind::UnknownIdentifier, "column '" + ref.str() + "'");
  if (!ir.from_set.contains(ref.table))
    fail(ErrorKind::UnknownIdentifier,
         "table '" + ref.table + "' is referenced but not in FROM");
}

}  // namespace

void validate(const QueryIR& ir, const Schema& schema) {
  if (ir.from_set.empty()) fail(ErrorKind::InvalidQuery, "query has no FROM table");
  if (ir.select_set.empty()) fail(ErrorKind::InvalidQuery, "query has no projection");
  for (const auto& table : ir.from_set)
    if (!schema.table_index(table))
      fail(ErrorKind::UnknownIdentifier, "table '" + table + "'");
  for (const auto& item : ir.select_set) {
    if (item.star) {
      if (item.aggregate != Aggregate::None && item.aggregate != Aggregate::Count)
        fail(ErrorKind::InvalidQuery, "only COUNT accepts '*'");
      continue;
    }
    check_ref(item.column, ir, schema);
    if ((item.aggregate == Aggregate::Sum || item.aggregate == Aggregate::Avg) &&
        schema.column_type(item.column.table, item.column.column) != ColumnType::Numeric)
      fail(ErrorKind::TypeMismatch,
           std::string(to_string(item.aggregate)) + " over text column " + item.column.str());
  }
  for (const auto& join : ir.join_set) {
    check_ref(join.left, ir, schema);
    check_ref(join.right, ir, schema);
    if (!(join.left < join.right))
      fail(ErrorKind::InvalidQuery, "join pair must hold two distinct ordered columns");
  }
  for (const auto& pred : ir.pred_set) {
    check_ref(pred.column, ir, schema);
    auto type = schema.column_type(pred.column.table, pred.column.column);
    bool numeric = std::holds_alternative<double>(pred.value);
    if (numeric != (type == ColumnType::Numeric))
      fail(ErrorKind::TypeMismatch, "constant type does not match column " + pred.column.str());
    if (numeric && !std::isfinite(std::get<double>(pred.value)))
      fail(ErrorKind::InvalidQuery, "non-finite constant on " + pred.column.str());
    if (pred.op == CompareOp::Like && numeric)
      fail(ErrorKind::TypeMismatch, "LIKE on numeric column " + pred.column.str());
  }
  for (const auto& ref : ir.group_set) check_ref(ref, ir, schema);
  for (const auto& ref : ir.order_set) check_ref(ref, ir, schema);
}

std::string emit(const QueryIR& ir) {
  std::string sql = "SELECT " + join_with(sorted_strings(ir.select_set, select_sql), ", ");
  sql += " FROM " + join_with(sorted_strings(ir.from_set, [](const std::string& t) { return t; }),
                              ", ");
  auto joins = sorted_strings(ir.join_set, [](const JoinPair& j) {
    return j.left.str() + " = " + j.right.str();
  });
  auto preds = sorted_strings(ir.pred_set, [](const Predicate& p) {
    return p.column.str() + " " + std::string(to_string(p.op)) + " " + constant_sql(p.value);
  });
  joins.insert(joins.end(), preds.begin(), preds.end());
  if (!joins.empty()) sql += " WHERE " + join_with(joins, " AND ");
  auto refs = [](const ColumnRef& r) { return r.str(); };
  if (!ir.group_set.empty()) sql += " GROUP BY " + join_with(sorted_strings(ir.group_set, refs), ", ");
  if (!ir.order_set.empty()) sql += " ORDER BY " + join_with(sorted_strings(ir.order_set, refs), ", ");
  return sql;
}

std::string_view role_prefix(Role role) {
  switch (role) {
    case Role::From: return "FROM";
    case Role::Select: return "SEL";
    case Role::Join: return "JOIN";
    case Role::Pred: return "PRED";
    case Role::Group: return "GROUP";
    case Role::Order: return "ORDER";
  }
  return "";
}

std::string fragment(Role role, const std::string& body) {
  return std::string(role_prefix(role)) + ":" + body;
}

std::string select_fragment_body(const SelectItem& item) {
  std::string inner = item.star ? "*" : item.column.str();
  if (item.aggregate == Aggregate::None) return inner;
  return std::string(to_string(item.aggregate)) + "(" + inner + ")";
}

std::string join_fragment_body(const JoinPair& join) {
  return join.left.str() + "=" + join.right.str();
}

std::string pred_fragment_body(const ColumnRef& column, CompareOp op) {
  return column.str() + ":" + std::string(to_string(op));
}

std::vector<std::set<std::string>> fragments_by_role(const QueryIR& ir) {
  std::vector<std::set<std::string>> roles(kRoleCount);
  auto put = [&](Role role, const std::string& body) {
    roles[static_cast<std::size_t>(role)].insert(fragment(role, body));
  };
  for (const auto& t : ir.from_set) put(Role::From, t);
  for (const auto& s : ir.select_set) put(Role::Select, select_fragment_body(s));
  for (const auto& j : ir.join_set) put(Role::Join, join_fragment_body(j));
  for (const auto& p : ir.pred_set) put(Role::Pred, pred_fragment_body(p.column, p.op));
  for (const auto& g : ir.group_set) put(Role::Group, g.str());
  for (const auto& o : ir.order_set) put(Role::Order, o.str());
  return roles;
}

std::set<std::string> fragments(const QueryIR& ir) {
  std::set<std::string> out;
  for (auto& role : fragments_by_role(ir)) out.merge(role);
  return out;
}

std::set<std::string> fragment_universe(const Schema& schema) {
  std::set<std::string> out;
  std::vector<std::pair<ColumnRef, ColumnType>> columns;
  for (const auto& t : schema.tables()) {
    out.insert(fragment(Role::From, t.name));
    for (const auto& c : t.columns) columns.push_back({{t.name, c.name}, c.type});
  }
  out.insert(fragment(Role::Select, "*"));
  out.insert(fragment(Role::Select, "count(*)"));
  for (const auto& [ref, type] : columns) {
    out.insert(fragment(Role::Select, ref.str()));
    for (auto agg : kAggregates) {
      if (type == ColumnType::Text && (agg == Aggregate::Sum || agg == Aggregate::Avg)) continue;
      out.insert(fragment(Role::Select, select_fragment_body({agg, false, ref})));
    }
    for (auto op : kOps) {
      if (type == ColumnType::Numeric && op == CompareOp::Like) continue;
      out.insert(fragment(Role::Pred, pred_fragment_body(ref, op)));
    }
    out.insert(fragment(Role::Group, ref.str()));
    out.insert(fragment(Role::Order, ref.str()));
  }
  for (std::size_t i = 0; i < columns.size(); ++i)
    for (std::size_t j = i + 1; j < columns.size(); ++j)
      out.insert(fragment(Role::Join,
                          join_fragment_body(JoinPair::make(columns[i].first, columns[j].first))));
  return out;
}

nlohmann::ordered_json to_json(const QueryIR& ir) {
  using json = nlohmann::ordered_json;
  auto ref = [](const ColumnRef& r) { return json::array({r.table, r.column}); };
  json doc;
  doc["from"] = json(std::vector<std::string>(ir.from_set.begin(), ir.from_set.end()));
  doc["select"] = json::array();
  for (const auto& s : ir.select_set) {
    json item;
    item["aggregate"] = s.aggregate == Aggregate::None ? json(nullptr) : json(to_string(s.aggregate));
    item["column"] = s.star ? json("*") : ref(s.column);
    doc["select"].push_back(std::move(item));
  }
  doc["joins"] = json::array();
  for (const auto& j : ir.join_set) doc["joins"].push_back(json::array({ref(j.left), ref(j.right)}));
  doc["predicates"] = json::array();
  for (const auto& p : ir.pred_set) {
    json v = std::holds_alternative<double>(p.value) ? json(std::get<double>(p.value))
                                                     : json(std::get<std::string>(p.value));
    doc["predicates"].push_back({{"column", ref(p.column)}, {"op", to_string(p.op)}, {"value", v}});
  }
  doc["group_by"] = json::array();
  for (const auto& g : ir.group_set) doc["group_by"].push_back(ref(g));
  doc["order_by"] = json::array();
  for (const auto& o : ir.order_set) doc["order_by"].push_back(ref(o));
  return doc;
}

}  // namespace qspace
