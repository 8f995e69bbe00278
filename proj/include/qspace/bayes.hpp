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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspace/query_ir.hpp"
#include "qspace/random.hpp"
#include "qspace/schema.hpp"

namespace qspace {

/// A SELECT-FROM query: the chosen tables and, per table, a non-empty set of
/// projected columns. Indices refer to schema order; column lists are sorted.
struct SFQuery {
  std::map<std::size_t, std::vector<std::size_t>> columns;

  std::size_t table_count() const noexcept { return columns.size(); }
  auto operator<=>(const SFQuery&) const = default;
};

/// Keeps FROM tables and plain column projections. Returns nullopt when some
/// FROM table has no plain projected column (the query has no SELECT-FROM
/// reading).
std::optional<SFQuery> to_sfquery(const QueryIR& ir, const Schema& schema);
QueryIR to_ir(const SFQuery& q, const Schema& schema);
std::string to_sql(const SFQuery& q, const Schema& schema);

/// Checks schema bounds, non-empty column sets and 1 <= |tables| <= max_t.
/// Throws InvalidQuery or QueryExceedsMaxT.
void validate(const SFQuery& q, const Schema& schema, int max_t);

/// Generative model of SELECT-FROM queries: draw a table count T, then T
/// distinct tables without replacement (categorical renormalized at every
/// step), then for each table a column count N_t and N_t distinct columns in
/// the same way.
struct SelectFromModel {
  Schema schema;
  int max_t = 1;
  double alpha = 1.0;
  std::vector<double> pi_tables;                // one per table
  std::vector<std::vector<double>> pi_columns;  // per table, one per column
  std::vector<double> pi_t;                     // P(T = s) at index s - 1
  std::vector<std::vector<double>> pi_n;        // per table, P(N_t = s) at s - 1

  /// Throws DegenerateModel if a vector is malformed or off the simplex.
  void check() const;
};

int default_max_t(const Schema& schema);

/// Smoothed counts: each probability vector is proportional to its
/// occurrence histogram plus alpha. A vector whose smoothed counts are all
/// zero (alpha = 0 and never observed) is set to uniform. Throws EmptyLog or
/// QueryExceedsMaxT.
SelectFromModel sf_fit(const std::vector<SFQuery>& log, const Schema& schema, int max_t, double alpha = 1.0);
/// Same estimator with per-query weights.
SelectFromModel sf_fit_weighted(const std::vector<SFQuery>& log, std::span<const double> weights, const Schema& schema,
                                int max_t, double alpha);

/// Probability that sequential draws without replacement from `pi` produce
/// the unordered set `members`, summed exactly over every draw order.
double set_probability(std::span<const double> pi, std::span<const std::size_t> members);

/// Exact log-probability; -infinity when the query has zero mass. Throws
/// InvalidQuery or QueryExceedsMaxT for queries outside the model's domain.
double sf_logp(const SelectFromModel& model, const SFQuery& q);

/// Throws DegenerateModel when a draw finds no remaining mass.
SFQuery sf_sample(const SelectFromModel& model, Rng& rng);

/// Every SFQuery over `schema` with at most max_t tables, in a fixed order.
std::vector<SFQuery> enumerate_sfqueries(const Schema& schema, int max_t);

nlohmann::ordered_json to_json(const SelectFromModel& model);
SelectFromModel select_from_model_from_json(const nlohmann::ordered_json& doc);

}  // namespace qspace
