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
#include <numbers>
#include <random>

#include "doctest.h"
#include "qspace/density.hpp"
#include "support/errors.hpp"

using namespace qspace;

TEST_CASE("Silverman bandwidth follows sigma times n to the minus one sixth") {
  Eigen::MatrixXd p(4, 2);
  p << 0, 5, 1, 5, 2, 5, 3, 5;
  Bandwidth h = silverman_bandwidth(p);
  const double sd = std::sqrt(5.0 / 3.0);
  CHECK(h.x == doctest::Approx(sd * std::pow(4.0, -1.0 / 6.0)).epsilon(1e-14));
  CHECK(h.y == 1.0);
  CHECK(silverman_bandwidth(p.topRows(1)).x == 1.0);
}

TEST_CASE("KDE of a single point matches the bivariate normal density") {
  Eigen::MatrixXd p(1, 2);
  p << 0.25, -0.5;
  DensityGrid g = kde_grid(p, 7, 5, 0.5);
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) {
      double dx = (g.x_center(i) - 0.25) / 0.5, dy = (g.y_center(j) + 0.5) / 0.5;
      double expected = std::exp(-0.5 * (dx * dx + dy * dy)) / (2 * std::numbers::pi * 0.25);
      CHECK(g.density(j, i) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  CHECK(count_local_maxima(g) == 1);
}

TEST_CASE("grid mass approaches the probability inside the padded bounds") {
  std::mt19937_64 engine(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd p(60, 2);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) << normal(engine), normal(engine);
  DensityGrid g = kde_grid(p, 120, 120);
  CHECK(g.density.minCoeff() >= 0.0);
  CHECK(g.mass() <= 1.0);
  CHECK(g.mass() > 0.99);
}

TEST_CASE("a peak straddling two cells counts once") {
  DensityGrid g;
  g.width = 4;
  g.height = 4;
  g.density = Eigen::MatrixXd::Zero(4, 4);
  g.density << 0.1, 0.2, 0.2, 0.1,
               0.2, 0.9, 0.9, 0.2,
               0.1, 0.2, 0.2, 0.1,
               0.0, 0.0, 0.0, 0.0;
  CHECK(count_local_maxima(g) == 1);
  g.density(1, 2) = 0.8;
  CHECK(count_local_maxima(g) == 1);
  g.density(3, 3) = 0.5;
  CHECK(count_local_maxima(g) == 2);
}

TEST_CASE("a tied shoulder next to a higher cell is not a maximum") {
  DensityGrid g;
  g.width = 3;
  g.height = 2;
  g.density = Eigen::MatrixXd::Zero(2, 3);
  g.density << 0.5, 0.5, 0.9,
               0.1, 0.1, 0.1;
  CHECK(count_local_maxima(g) == 1);
}

TEST_CASE("two separated groups give two maxima") {
  Eigen::MatrixXd p(20, 2);
  for (Eigen::Index i = 0; i < 20; ++i) p.row(i) << (i < 10 ? -3.0 : 3.0) + 0.01 * static_cast<double>(i % 3), 0.0;
  CHECK(count_local_maxima(kde_grid(p, 41, 20)) == 2);
}

TEST_CASE("invalid grids and bandwidths are rejected") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 2);
  QS_CHECK_THROWS_KIND(kde_grid(p, 1, 4), ErrorKind::UsageError);
  QS_CHECK_THROWS_KIND(kde_grid(p, 4, 4, 0.0), ErrorKind::UsageError);
  QS_CHECK_THROWS_KIND(kde_grid(Eigen::MatrixXd(0, 2), 4, 4), ErrorKind::EmptyLog);
  QS_CHECK_THROWS_KIND(kde_grid(Eigen::MatrixXd::Zero(3, 3), 4, 4), ErrorKind::ShapeMismatch);
}
