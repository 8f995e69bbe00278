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

#include <cmath>
#include <map>

#include "doctest.h"
#include "qspace/bayes.hpp"
#include "qspace/parser.hpp"
#include "support/corpus.hpp"
#include "support/errors.hpp"
#include "support/models.hpp"

using namespace qspace;
using qspace::testing::three_by_two_schema;

namespace {

SFQuery sfq(std::map<std::size_t, std::vector<std::size_t>> columns) { return SFQuery{std::move(columns)}; }

}  // namespace

TEST_CASE("table counts without smoothing") {
  Schema schema({{"t1", {{"a", ColumnType::Numeric}}}, {"t2", {{"b", ColumnType::Numeric}}}});
  std::vector<SFQuery> log = {sfq({{0, {0}}}), sfq({{0, {0}}}), sfq({{0, {0}}}), sfq({{1, {0}}})};
  SelectFromModel m = sf_fit(log, schema, 1, 0.0);
  CHECK(m.pi_tables[0] == doctest::Approx(0.75));
  CHECK(m.pi_tables[1] == doctest::Approx(0.25));
  CHECK(m.pi_t[0] == doctest::Approx(1.0));
}

TEST_CASE("strong smoothing approaches uniform") {
  Schema schema = three_by_two_schema();
  std::vector<SFQuery> log = {sfq({{0, {0, 1}}, {2, {1}}}), sfq({{1, {0}}})};
  SelectFromModel m = sf_fit(log, schema, 3, 1e9);
  for (double p : m.pi_tables) CHECK(p == doctest::Approx(1.0 / 3));
  for (double p : m.pi_t) CHECK(p == doctest::Approx(1.0 / 3));
  for (const auto& v : m.pi_columns)
    for (double p : v) CHECK(p == doctest::Approx(0.5));
  for (const auto& v : m.pi_n)
    for (double p : v) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("a single repeated query gets probability one") {
  Schema schema = three_by_two_schema();
  SFQuery q = sfq({{0, {1}}, {2, {0, 1}}});
  SelectFromModel m = sf_fit({q, q, q}, schema, 3, 0.0);
  CHECK(std::exp(sf_logp(m, q)) == doctest::Approx(1.0));
  CHECK(sf_logp(m, sfq({{1, {0}}})) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("fit errors") {
  Schema schema = three_by_two_schema();
  QS_CHECK_THROWS_KIND(sf_fit({}, schema, 2), ErrorKind::EmptyLog);
  QS_CHECK_THROWS_KIND(sf_fit({sfq({{0, {0}}, {1, {0}}, {2, {0}}})}, schema, 2), ErrorKind::QueryExceedsMaxT);
  QS_CHECK_THROWS_KIND(validate(sfq({{0, {5}}}), schema, 2), ErrorKind::InvalidQuery);
  QS_CHECK_THROWS_KIND(validate(sfq({{0, {}}}), schema, 2), ErrorKind::InvalidQuery);
  QS_CHECK_THROWS_KIND(validate(sfq({}), schema, 2), ErrorKind::InvalidQuery);
  CHECK(default_max_t(schema) == 3);
}

TEST_CASE("one-table probability needs no permutation sum") {
  Schema schema({{"t1", {{"a", ColumnType::Numeric}, {"b", ColumnType::Numeric}}}});
  SelectFromModel m;
  m.schema = schema;
  m.max_t = 1;
  m.alpha = 0;
  m.pi_tables = {1.0};
  m.pi_t = {1.0};
  m.pi_columns = {{0.3, 0.7}};
  m.pi_n = {{0.6, 0.4}};
  CHECK(std::exp(sf_logp(m, sfq({{0, {0}}}))) == doctest::Approx(0.6 * 0.3));
}

TEST_CASE("unordered set probability sums drawing orders") {
  std::vector<double> pi = {0.5, 0.3, 0.2};
  std::vector<std::size_t> members = {0, 1};
  CHECK(set_probability(pi, members) == doctest::Approx(0.5 * (0.3 / 0.5) + 0.3 * (0.5 / 0.7)));
  CHECK(set_probability(pi, members) == doctest::Approx(0.3 + 0.2142857142857143));
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = qspace::testing::random_simplex(rng, 6, 0.0);
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < 6; ++i)
      if (rng.below(2)) set.push_back(i);
    if (set.empty()) set.push_back(3);
    CHECK(set_probability(p, set) == doctest::Approx(qspace::testing::permutation_sum(p, set)).epsilon(1e-12));
  }
}

TEST_CASE("log probability matches the generative-story oracle") {
  Schema schema = three_by_two_schema();
  Rng rng(6);
  SelectFromModel m = qspace::testing::random_model(schema, 3, rng);
  for (const auto& q : enumerate_sfqueries(schema, 3))
    CHECK(std::exp(sf_logp(m, q)) == doctest::Approx(qspace::testing::oracle_probability(m, q)).epsilon(1e-12));
}

TEST_CASE("enumeration is complete and normalized") {
  Schema schema = three_by_two_schema();
  auto all = enumerate_sfqueries(schema, 3);
  CHECK(all.size() == 63);
  CHECK(std::set<SFQuery>(all.begin(), all.end()).size() == 63);
  CHECK(enumerate_sfqueries(schema, 1).size() == 9);
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    SelectFromModel m = qspace::testing::random_model(schema, 3, rng);
    double total = 0;
    for (const auto& q : all) total += std::exp(sf_logp(m, q));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sampling") {
  Schema one({{"t1", {{"a", ColumnType::Numeric}, {"b", ColumnType::Numeric}}}});
  SelectFromModel single = sf_fit({sfq({{0, {0}}})}, one, 1, 1.0);
  Rng r1(3);
  for (int i = 0; i < 100; ++i) CHECK(sf_sample(single, r1).columns.count(0) == 1);

  Schema schema = three_by_two_schema();
  Rng mr(8);
  SelectFromModel m = qspace::testing::random_model(schema, 3, mr);
  std::vector<double> marginal(3, 0.0);
  for (const auto& q : enumerate_sfqueries(schema, 3))
    for (const auto& [t, cols] : q.columns) marginal[t] += std::exp(sf_logp(m, q));
  Rng rng(2024);
  std::vector<double> counts(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    SFQuery q = sf_sample(m, rng);
    validate(q, schema, 3);
    for (const auto& [t, cols] : q.columns) counts[t] += 1;
  }
  for (int t = 0; t < 3; ++t) CHECK(std::abs(counts[static_cast<std::size_t>(t)] / n - marginal[static_cast<std::size_t>(t)]) <= 0.01);

  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) CHECK(sf_sample(m, a) == sf_sample(m, b));
}

TEST_CASE("sampling a degenerate model fails") {
  Schema schema = three_by_two_schema();
  Rng rng(1);
  SelectFromModel m = qspace::testing::random_model(schema, 3, rng);
  m.pi_tables = {1.0, 0.0, 0.0};
  m.pi_t = {0.0, 0.0, 1.0};
  Rng s(0);
  QS_CHECK_THROWS_KIND(sf_sample(m, s), ErrorKind::DegenerateModel);
}

TEST_CASE("query IR projection") {
  Schema schema = three_by_two_schema();
  QueryIR ir = parse("SELECT t1.b, t3.e, t1.a FROM t1, t3 WHERE t1.a = t3.e", schema);
  auto q = to_sfquery(ir, schema);
  REQUIRE(q.has_value());
  CHECK(*q == sfq({{0, {0, 1}}, {2, {0}}}));
  CHECK(to_sql(*q, schema) == "SELECT t1.a, t1.b, t3.e FROM t1, t3");
  CHECK(to_sfquery(parse(to_sql(*q, schema), schema), schema) == q);
  CHECK(!to_sfquery(parse("SELECT COUNT(*) FROM t1", schema), schema).has_value());
}

TEST_CASE("model JSON round trip") {
  Schema schema = three_by_two_schema();
  Rng rng(9);
  SelectFromModel m = qspace::testing::random_model(schema, 2, rng);
  SelectFromModel back = select_from_model_from_json(to_json(m));
  CHECK(back.schema == m.schema);
  CHECK(back.pi_tables == m.pi_tables);
  CHECK(back.pi_columns == m.pi_columns);
  CHECK(back.pi_t == m.pi_t);
  CHECK(back.pi_n == m.pi_n);
  CHECK(back.max_t == 2);
}
