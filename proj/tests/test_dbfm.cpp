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
#include <limits>

#include "doctest.h"
#include "qspace/dbfm.hpp"
#include "qspace/parser.hpp"
#include "support/corpus.hpp"
#include "support/errors.hpp"

using namespace qspace;

namespace {

struct Fixture {
  Schema schema = qspace::testing::five_table_schema();
  std::vector<QueryIR> log = qspace::testing::random_corpus(schema, 30, 17);
  MeasurePtr fragment = std::make_shared<FragmentMeasure>();
  MeasurePtr ngram = std::make_shared<NgramMeasure>(3);
};

double medoid_cost(const Eigen::MatrixXd& data, const std::vector<Eigen::Index>& medoids) {
  double cost = 0;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (auto m : medoids) best = std::min(best, (data.col(c) - data.col(m)).norm());
    cost += best;
  }
  return cost;
}

Eigen::MatrixXd euclidean(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd d(points.rows(), points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < points.rows(); ++j) d(i, j) = (points.row(i) - points.row(j)).norm();
  return d;
}

}  // namespace

TEST_CASE("single matrix rows are the vectors") {
  Fixture f;
  auto d = matrix(f.log, f.fragment);
  DbfmSpace space = dbfm_build(f.log, {d});
  CHECK(space.raw_dim() == 30);
  CHECK(space.vectors() == d.values);
}

TEST_CASE("stacked matrices and the Gram identity") {
  Fixture f;
  auto d1 = matrix(f.log, f.fragment);
  auto d2 = matrix(f.log, f.ngram);
  DbfmSpace space = dbfm_build(f.log, {d1, d2});
  CHECK(space.raw_dim() == 60);
  Eigen::MatrixXd gram = space.raw * space.raw.transpose();
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(30, 30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j)
      for (int k = 0; k < 30; ++k) oracle(i, j) += d1.values(i, k) * d1.values(j, k) + d2.values(i, k) * d2.values(j, k);
  CHECK((gram - oracle).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("shape mismatch") {
  Fixture f;
  auto d = matrix(f.log, f.fragment);
  std::vector<QueryIR> shorter(f.log.begin(), f.log.begin() + 10);
  QS_CHECK_THROWS_KIND(dbfm_build(shorter, {d}), ErrorKind::ShapeMismatch);
}

TEST_CASE("out-of-sample mapping") {
  Fixture f;
  auto d = matrix(f.log, f.fragment);
  DbfmSpace space = dbfm_build(f.log, {d});
  for (int k = 0; k < 30; ++k) CHECK(dbfm_map(space, f.log[static_cast<std::size_t>(k)]) == Eigen::VectorXd(d.values.row(k).transpose()));
  Rng rng(99);
  QueryIR fresh = qspace::testing::random_query(f.schema, rng);
  Eigen::VectorXd v = dbfm_map(space, fresh);
  for (int j = 0; j < 30; ++j) CHECK(v(j) == doctest::Approx(d_fragment(fresh, f.log[static_cast<std::size_t>(j)])).epsilon(1e-14));
  DbfmSpace compressed = dbfm_compress_pca(space, 4);
  CHECK(dbfm_map(compressed, fresh).size() == 4);
  CHECK(compressed.dim() == 4);
}

TEST_CASE("identical reference queries are degenerate for PCA") {
  Fixture f;
  std::vector<QueryIR> same(5, f.log[0]);
  DbfmSpace space = dbfm_build(same, {matrix(same, f.fragment)});
  QS_CHECK_THROWS_KIND(dbfm_compress_pca(space, 1), ErrorKind::DegenerateData);
}

TEST_CASE("prototype selection") {
  Fixture f;
  DbfmSpace space = dbfm_build(f.log, {matrix(f.log, f.fragment)});
  DbfmSpace all = prototype_select(space, 30, 1);
  const auto& cols = std::get<PrototypeColumns>(all.compression).columns;
  REQUIRE(cols.size() == 30);
  for (Eigen::Index i = 0; i < 30; ++i) CHECK(cols[static_cast<std::size_t>(i)] == i);
  QS_CHECK_THROWS_KIND(prototype_select(space, 31, 1), ErrorKind::KTooLarge);
  auto a = std::get<PrototypeColumns>(prototype_select(space, 5, 7).compression).columns;
  auto b = std::get<PrototypeColumns>(prototype_select(space, 5, 7).compression).columns;
  CHECK(a == b);
  DbfmSpace five = prototype_select(space, 5, 7);
  CHECK(dbfm_map(five, f.log[3]).size() == 5);
  CHECK(five.vectors().rows() == 30);
}

TEST_CASE("duplicated column groups yield one medoid per group") {
  Eigen::MatrixXd data(4, 6);
  Eigen::Vector4d g1(0, 0, 1, 1), g2(5, 4, 0, 3);
  for (int c = 0; c < 3; ++c) data.col(c) = g1;
  for (int c = 3; c < 6; ++c) data.col(c) = g2;
  data(0, 1) += 0.2;
  data(1, 4) += 0.1;
  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    auto chosen = kmedoid_columns(data, 2, seed);
    REQUIRE(chosen.size() == 2);
    CHECK((chosen[0] < 3) != (chosen[1] < 3));
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = i + 1; j < 6; ++j) best = std::min(best, medoid_cost(data, {i, j}));
    CHECK(medoid_cost(data, chosen) == doctest::Approx(best));
  }
}

TEST_CASE("mds on three collinear points") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 2, 4, 2, 0, 2, 4, 2, 0;
  MdsResult r = mds(d, 1);
  double sign = r.coordinates(0, 0) < 0 ? 1.0 : -1.0;
  CHECK(sign * r.coordinates(0, 0) == doctest::Approx(-2.0));
  CHECK(sign * r.coordinates(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sign * r.coordinates(2, 0) == doctest::Approx(2.0));
  // B = -1/2 J D^2 J has the single nonzero eigenvalue 8.
  CHECK(r.eigenvalues(0) == doctest::Approx(8.0));
  CHECK(r.distortion == doctest::Approx(0.0));
}

TEST_CASE("mds reproduces planar distances") {
  Eigen::MatrixXd points = Eigen::MatrixXd::Random(15, 2) * 3.0;
  Eigen::MatrixXd d = euclidean(points);
  MdsResult r = mds(d, 2);
  CHECK((euclidean(r.coordinates) - d).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("mds degenerate and error cases") {
  MdsResult r = mds(Eigen::MatrixXd::Zero(4, 4), 2);
  CHECK(r.coordinates.cwiseAbs().maxCoeff() == 0.0);
  QS_CHECK_THROWS_KIND(mds(Eigen::MatrixXd::Zero(4, 4), 4), ErrorKind::DimensionTooLarge);
  Eigen::MatrixXd nonmetric(3, 3);
  nonmetric << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  CHECK(mds(nonmetric, 2).distortion > 0.0);
}

TEST_CASE("dbfm space JSON round trip") {
  Fixture f;
  DbfmSpace space = dbfm_compress_pca(dbfm_build(f.log, {matrix(f.log, f.fragment), matrix(f.log, f.ngram)}), 3);
  DbfmSpace back = dbfm_from_json(to_json(space, f.schema));
  CHECK(back.reference == space.reference);
  CHECK((back.raw - space.raw).cwiseAbs().maxCoeff() <= 1e-15);
  Rng rng(4);
  QueryIR q = qspace::testing::random_query(f.schema, rng);
  CHECK((dbfm_map(back, q) - dbfm_map(space, q)).cwiseAbs().maxCoeff() <= 1e-12);
}
