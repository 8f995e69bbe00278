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
#include "qspace/learners.hpp"
#include "qspace/pca.hpp"
#include "qspace/random.hpp"
#include "support/errors.hpp"

using namespace qspace;

namespace {

Eigen::MatrixXd block_kernel(int first, int second) {
  int n = first + second;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  k.topLeftCorner(first, first).setOnes();
  k.bottomRightCorner(second, second).setOnes();
  return k;
}

// Objective sum_c sum_{i in c} ||phi_i - mu_c||^2 written from kernel entries.
double partition_objective(const Eigen::MatrixXd& k, const std::vector<int>& labels, int clusters) {
  double total = 0;
  for (int c = 0; c < clusters; ++c) {
    std::vector<int> members;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
      if (labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
    if (members.empty()) continue;
    double within = 0;
    for (int i : members)
      for (int j : members) within += k(i, j);
    for (int i : members) total += k(i, i);
    total -= within / static_cast<double>(members.size());
  }
  return total;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  return d;
}

}  // namespace

TEST_CASE("kernel k-means recovers two blocks and the exhaustive optimum") {
  Eigen::MatrixXd k = block_kernel(3, 3);
  // Permute rows so blocks interleave.
  std::vector<int> perm = {0, 3, 1, 4, 5, 2};
  Eigen::MatrixXd p(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) p(i, j) = k(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  auto result = kernel_kmeans(KernelMatrix::certified(p), 2, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      bool same_block = (perm[static_cast<std::size_t>(i)] < 3) == (perm[static_cast<std::size_t>(j)] < 3);
      CHECK((result.labels[static_cast<std::size_t>(i)] == result.labels[static_cast<std::size_t>(j)]) == same_block);
    }
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << 6) - 1; ++mask) {
    std::vector<int> labels(6);
    for (int i = 0; i < 6; ++i) labels[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    best = std::min(best, partition_objective(p, labels, 2));
  }
  CHECK(kernel_kmeans_objective(p, result.labels) == doctest::Approx(best));
  CHECK(partition_objective(p, result.labels, 2) == doctest::Approx(best));
}

TEST_CASE("kernel k-means edge cases") {
  Rng rng(12);
  Eigen::MatrixXd f(8, 3);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 3; ++j) f(i, j) = rng.uniform();
  KernelMatrix k = KernelMatrix::gram_of(f);
  auto one = kernel_kmeans(k, 1, 0);
  for (int label : one.labels) CHECK(label == 0);
  auto all = kernel_kmeans(k, 8, 0);
  CHECK(kernel_kmeans_objective(k.values(), all.labels) == doctest::Approx(0.0).epsilon(1e-12));
  std::set<int> distinct(all.labels.begin(), all.labels.end());
  CHECK(distinct.size() == 8);
  QS_CHECK_THROWS_KIND(kernel_kmeans(k, 9, 0), ErrorKind::KTooLarge);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  QS_CHECK_THROWS_KIND(kernel_kmeans(KernelMatrix(bad), 1, 0), ErrorKind::NotPsd);
}

TEST_CASE("kernel k-means objective never increases and is seed-deterministic") {
  Rng rng(1);
  Eigen::MatrixXd f(40, 4);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 4; ++j) f(i, j) = rng.uniform() + (i % 3);
  KernelMatrix k = KernelMatrix::gram_of(f);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = kernel_kmeans(k, 4, seed);
    for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
      CHECK(r.objective_trace[t] <= r.objective_trace[t - 1] + 1e-9);
    CHECK(kernel_kmeans(k, 4, seed).labels == r.labels);
  }
}

TEST_CASE("kernel PCA agrees with explicit PCA on a linear kernel") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 5);
  KernelMatrix k = KernelMatrix::gram_of(x);
  auto kp = kernel_pca(k, 3);
  Projection p = pca_fit(x, 3);
  Eigen::MatrixXd y = pca_apply_rows(p, x);
  CHECK((pairwise_distances(kp.coordinates) - pairwise_distances(y)).cwiseAbs().maxCoeff() <= 1e-6);
  auto full = kernel_pca(k, 5);
  CHECK((pairwise_distances(full.coordinates) - pairwise_distances(x)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("kernel PCA of the identity gives equidistant points") {
  auto r = kernel_pca(KernelMatrix::certified(Eigen::MatrixXd::Identity(5, 5)), 4);
  Eigen::MatrixXd d = pairwise_distances(r.coordinates);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) CHECK(d(i, j) == doctest::Approx(std::sqrt(2.0)));
  QS_CHECK_THROWS_KIND(kernel_pca(KernelMatrix::certified(Eigen::MatrixXd::Identity(5, 5)), 6),
                       ErrorKind::DimensionTooLarge);
}

TEST_CASE("kernel ridge regression closed forms") {
  Eigen::VectorXd y(4);
  y << 1.0, -2.0, 3.5, 0.25;
  KrrModel m = krr_fit(KernelMatrix::certified(Eigen::MatrixXd::Identity(4, 4)), y, 1.0);
  CHECK((m.alpha - y / 2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(krr_predict(m, Eigen::VectorXd::Unit(4, 2)) == doctest::Approx(1.75));

  Eigen::MatrixXd k = Eigen::MatrixXd::Ones(4, 4) + Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 3.0);
  KrrModel mc = krr_fit(KernelMatrix::certified(k), c, 0.5);
  Eigen::VectorXd oracle = (k + 0.5 * Eigen::MatrixXd::Identity(4, 4)).fullPivLu().solve(c);
  CHECK((mc.alpha - oracle).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(krr_predict(mc, k.row(0).transpose()) == doctest::Approx(k.row(0).dot(oracle)));
  KrrModel huge = krr_fit(KernelMatrix::certified(k), c, 1e12);
  CHECK(huge.alpha.cwiseAbs().maxCoeff() < 1e-10);
  QS_CHECK_THROWS_KIND(krr_fit(KernelMatrix::certified(k), c, 0.0), ErrorKind::UsageError);
}

TEST_CASE("kernel ridge leave-one-out matches brute-force refits") {
  Rng rng(3);
  Eigen::MatrixXd f(9, 3);
  Eigen::VectorXd y(9);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 3; ++j) f(i, j) = rng.uniform();
    y(i) = rng.uniform() * 4 - 2;
  }
  Eigen::MatrixXd k = f * f.transpose();
  Eigen::VectorXd loo = krr_loo_predictions(KernelMatrix::certified(k), y, 0.3);
  for (int held = 0; held < 9; ++held) {
    std::vector<int> keep;
    for (int i = 0; i < 9; ++i)
      if (i != held) keep.push_back(i);
    Eigen::MatrixXd sub(8, 8);
    Eigen::VectorXd ysub(8), row(8);
    for (int a = 0; a < 8; ++a) {
      ysub(a) = y(keep[static_cast<std::size_t>(a)]);
      row(a) = k(held, keep[static_cast<std::size_t>(a)]);
      for (int b = 0; b < 8; ++b) sub(a, b) = k(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
    }
    Eigen::VectorXd alpha = (sub + 0.3 * Eigen::MatrixXd::Identity(8, 8)).fullPivLu().solve(ysub);
    CHECK(loo(held) == doctest::Approx(row.dot(alpha)).epsilon(1e-9));
  }
}

TEST_CASE("nearest-neighbour predictions") {
  Eigen::VectorXd d(4);
  d << 1, 2, 1, 5;
  std::vector<double> y = {0, 8, 2, 100};
  CHECK(knn_regress(d, y, 3) == doctest::Approx(2.4));
  CHECK(knn_regress(d, y, 1) == 0.0);
  Eigen::VectorXd exact(4);
  exact << 3, 0, 1, 0;
  CHECK(knn_regress(exact, y, 3) == 8.0);
  CHECK(nearest_neighbors(d, 2) == std::vector<Eigen::Index>{0, 2});
  std::vector<std::string> labels = {"b", "a", "b", "a"};
  CHECK(knn_classify(d, labels, 1) == "b");
  Eigen::VectorXd tie(2);
  tie << 1, 1;
  std::vector<std::string> two = {"z", "y"};
  CHECK(knn_classify(tie, two, 2) == "y");
  QS_CHECK_THROWS_KIND(knn_regress(d, y, 5), ErrorKind::KTooLarge);
}
