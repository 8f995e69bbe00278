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

#include "qspace/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qspace/error.hpp"

namespace qspace {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> normalized(std::vector<double> counts, double alpha) {
  double total = 0;
  for (auto& c : counts) {
    c += alpha;
    total += c;
  }
  if (!(total > 0)) {
    std::fill(counts.begin(), counts.end(), 1.0 / static_cast<double>(counts.size()));
    return counts;
  }
  for (auto& c : counts) c /= total;
  return counts;
}

void check_vector(const std::vector<double>& pi, const std::string& name) {
  if (pi.empty()) fail(ErrorKind::DegenerateModel, name + " is empty");
  double total = 0;
  for (double p : pi) {
    if (!(p >= 0) || !std::isfinite(p)) fail(ErrorKind::DegenerateModel, name + " has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::DegenerateModel, name + " sums to " + format_number(total));
}

// Draws `count` distinct indices from `pi` without replacement.
std::vector<std::size_t> draw_distinct(const std::vector<double>& pi, std::size_t count, Rng& rng,
                                       const std::string& what) {
  std::vector<double> remaining = pi;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) {
    auto pick = rng.categorical(remaining);
    if (pick == remaining.size())
      fail(ErrorKind::DegenerateModel, "no probability mass left while drawing " + what);
    out.push_back(pick);
    remaining[pick] = 0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::optional<SFQuery> to_sfquery(const QueryIR& ir, const Schema& schema) {
  SFQuery q;
  for (const auto& table : ir.from_set) {
    auto t = schema.table_index(table);
    if (!t) fail(ErrorKind::UnknownIdentifier, "table '" + table + "'");
    q.columns[*t];
  }
  for (const auto& item : ir.select_set) {
    if (item.star || item.aggregate != Aggregate::None) continue;
    auto t = schema.table_index(item.column.table);
    auto c = t ? schema.column_index(*t, item.column.column) : std::nullopt;
    if (!c) fail(ErrorKind::UnknownIdentifier, "column '" + item.column.str() + "'");
    q.columns[*t].push_back(*c);
  }
  for (auto& [t, cols] : q.columns) {
    if (cols.empty()) return std::nullopt;
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  }
  if (q.columns.empty()) return std::nullopt;
  return q;
}

QueryIR to_ir(const SFQuery& q, const Schema& schema) {
  QueryIR ir;
  for (const auto& [t, cols] : q.columns) {
    const auto& table = schema.tables().at(t);
    ir.from_set.insert(table.name);
    for (auto c : cols) ir.select_set.insert(SelectItem::plain({table.name, table.columns.at(c).name}));
  }
  return ir;
}

std::string to_sql(const SFQuery& q, const Schema& schema) { return emit(to_ir(q, schema)); }

void validate(const SFQuery& q, const Schema& schema, int max_t) {
  if (q.columns.empty()) fail(ErrorKind::InvalidQuery, "query selects no table");
  if (static_cast<int>(q.columns.size()) > max_t)
    fail(ErrorKind::QueryExceedsMaxT, "query uses " + std::to_string(q.columns.size()) + " tables, max is " +
                                          std::to_string(max_t));
  for (const auto& [t, cols] : q.columns) {
    if (t >= schema.table_count()) fail(ErrorKind::InvalidQuery, "table index out of range");
    if (cols.empty()) fail(ErrorKind::InvalidQuery, "table '" + schema.tables()[t].name + "' has no selected column");
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] >= schema.tables()[t].columns.size()) fail(ErrorKind::InvalidQuery, "column index out of range");
      if (i > 0 && cols[i] <= cols[i - 1]) fail(ErrorKind::InvalidQuery, "column list must be sorted and distinct");
    }
  }
}

void SelectFromModel::check() const {
  if (max_t < 1 || max_t > static_cast<int>(schema.table_count()))
    fail(ErrorKind::DegenerateModel, "max_t must lie in [1, number of tables]");
  if (!(alpha >= 0)) fail(ErrorKind::DegenerateModel, "alpha must be non-negative");
  if (pi_tables.size() != schema.table_count() || pi_columns.size() != schema.table_count() ||
      pi_n.size() != schema.table_count() || pi_t.size() != static_cast<std::size_t>(max_t))
    fail(ErrorKind::DegenerateModel, "parameter vectors do not match the schema");
  check_vector(pi_tables, "pi_tables");
  check_vector(pi_t, "pi_T");
  for (std::size_t t = 0; t < schema.table_count(); ++t) {
    const auto& name = schema.tables()[t].name;
    auto width = schema.tables()[t].columns.size();
    if (pi_columns[t].size() != width || pi_n[t].size() != width)
      fail(ErrorKind::DegenerateModel, "parameter vectors of '" + name + "' do not match its columns");
    check_vector(pi_columns[t], "pi_columns[" + name + "]");
    check_vector(pi_n[t], "pi_N[" + name + "]");
  }
}

int default_max_t(const Schema& schema) { return std::min(4, static_cast<int>(schema.table_count())); }

SelectFromModel sf_fit_weighted(const std::vector<SFQuery>& log, std::span<const double> weights, const Schema& schema,
                                int max_t, double alpha) {
  if (log.empty()) fail(ErrorKind::EmptyLog, "cannot fit a model to an empty log");
  if (weights.size() != log.size()) fail(ErrorKind::ShapeMismatch, "one weight per query is required");
  if (max_t < 1 || max_t > static_cast<int>(schema.table_count()))
    fail(ErrorKind::UsageError, "max_t must lie in [1, " + std::to_string(schema.table_count()) + "]");
  if (!(alpha >= 0) || !std::isfinite(alpha)) fail(ErrorKind::UsageError, "alpha must be non-negative and finite");

  const auto tables = schema.table_count();
  std::vector<double> table_counts(tables, 0.0);
  std::vector<double> size_counts(static_cast<std::size_t>(max_t), 0.0);
  std::vector<std::vector<double>> column_counts(tables);
  std::vector<std::vector<double>> width_counts(tables);
  for (std::size_t t = 0; t < tables; ++t) {
    column_counts[t].assign(schema.tables()[t].columns.size(), 0.0);
    width_counts[t].assign(schema.tables()[t].columns.size(), 0.0);
  }
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& q = log[i];
    validate(q, schema, max_t);
    double w = weights[i];
    size_counts[q.table_count() - 1] += w;
    for (const auto& [t, cols] : q.columns) {
      table_counts[t] += w;
      width_counts[t][cols.size() - 1] += w;
      for (auto c : cols) column_counts[t][c] += w;
    }
  }

  SelectFromModel model;
  model.schema = schema;
  model.max_t = max_t;
  model.alpha = alpha;
  model.pi_tables = normalized(std::move(table_counts), alpha);
  model.pi_t = normalized(std::move(size_counts), alpha);
  for (std::size_t t = 0; t < tables; ++t) {
    model.pi_columns.push_back(normalized(std::move(column_counts[t]), alpha));
    model.pi_n.push_back(normalized(std::move(width_counts[t]), alpha));
  }
  return model;
}

SelectFromModel sf_fit(const std::vector<SFQuery>& log, const Schema& schema, int max_t, double alpha) {
  std::vector<double> ones(log.size(), 1.0);
  return sf_fit_weighted(log, ones, schema, max_t, alpha);
}

double set_probability(std::span<const double> pi, std::span<const std::size_t> members) {
  const std::size_t m = members.size();
  if (m == 0) return 1.0;
  if (m > 20) fail(ErrorKind::UsageError, "set too large for exact permutation sums");
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  const std::size_t full = (std::size_t{1} << m) - 1;
  // f[mask]: probability that the first |mask| draws are exactly `mask`.
  std::vector<double> f(full + 1, 0.0);
  std::vector<double> drawn(full + 1, 0.0);
  f[0] = 1.0;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    std::size_t low = static_cast<std::size_t>(__builtin_ctzll(mask));
    drawn[mask] = drawn[mask & (mask - 1)] + pi[members[low]];
    double acc = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mask & (std::size_t{1} << k))) continue;
      std::size_t prev = mask ^ (std::size_t{1} << k);
      double p = pi[members[k]];
      double left = total - drawn[prev];
      if (f[prev] == 0 || p == 0 || !(left > 0)) continue;
      acc += f[prev] * p / left;
    }
    f[mask] = acc;
  }
  return f[full];
}

double sf_logp(const SelectFromModel& model, const SFQuery& q) {
  validate(q, model.schema, model.max_t);
  std::vector<std::size_t> tables;
  for (const auto& [t, cols] : q.columns) tables.push_back(t);
  double logp = std::log(model.pi_t[tables.size() - 1]) + std::log(set_probability(model.pi_tables, tables));
  for (const auto& [t, cols] : q.columns) {
    logp += std::log(model.pi_n[t][cols.size() - 1]);
    logp += std::log(set_probability(model.pi_columns[t], cols));
  }
  return std::isnan(logp) ? kNegInf : logp;
}

SFQuery sf_sample(const SelectFromModel& model, Rng& rng) {
  auto size = rng.categorical(model.pi_t);
  if (size == model.pi_t.size()) fail(ErrorKind::DegenerateModel, "pi_T has no mass");
  SFQuery q;
  for (auto t : draw_distinct(model.pi_tables, size + 1, rng, "tables")) {
    const auto& name = model.schema.tables()[t].name;
    auto width = rng.categorical(model.pi_n[t]);
    if (width == model.pi_n[t].size()) fail(ErrorKind::DegenerateModel, "pi_N[" + name + "] has no mass");
    q.columns[t] = draw_distinct(model.pi_columns[t], width + 1, rng, "columns of " + name);
  }
  return q;
}

std::vector<SFQuery> enumerate_sfqueries(const Schema& schema, int max_t) {
  const auto tables = schema.table_count();
  std::vector<std::vector<std::vector<std::size_t>>> column_sets(tables);
  for (std::size_t t = 0; t < tables; ++t) {
    auto width = schema.tables()[t].columns.size();
    for (std::size_t mask = 1; mask < (std::size_t{1} << width); ++mask) {
      std::vector<std::size_t> cols;
      for (std::size_t c = 0; c < width; ++c)
        if (mask & (std::size_t{1} << c)) cols.push_back(c);
      column_sets[t].push_back(std::move(cols));
    }
  }
  std::vector<SFQuery> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << tables); ++mask) {
    std::vector<std::size_t> chosen;
    for (std::size_t t = 0; t < tables; ++t)
      if (mask & (std::size_t{1} << t)) chosen.push_back(t);
    if (static_cast<int>(chosen.size()) > max_t) continue;
    // Odometer over the column-set choices of every chosen table.
    std::vector<std::size_t> digit(chosen.size(), 0);
    while (true) {
      SFQuery q;
      for (std::size_t k = 0; k < chosen.size(); ++k) q.columns[chosen[k]] = column_sets[chosen[k]][digit[k]];
      out.push_back(std::move(q));
      std::size_t k = 0;
      while (k < chosen.size() && ++digit[k] == column_sets[chosen[k]].size()) digit[k++] = 0;
      if (k == chosen.size()) break;
    }
  }
  return out;
}

}  // namespace qspace
