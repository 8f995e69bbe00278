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

#include "qspace/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "qspace/error.hpp"

namespace qspace {

Bandwidth silverman_bandwidth(const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  auto rule = [&](Eigen::Index axis) {
    if (n < 2) return 1.0;
    Eigen::VectorXd v = points.col(axis);
    double mean = v.mean();
    double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 1e-12)) return 1.0;
    return sd * std::pow(static_cast<double>(n), -1.0 / 6.0);
  };
  return {rule(0), rule(1)};
}

DensityGrid kde_grid(const Eigen::MatrixXd& points, int width, int height, std::optional<double> bandwidth) {
  if (width < 2 || height < 2) fail(ErrorKind::UsageError, "grid must be at least 2x2");
  if (points.cols() != 2) fail(ErrorKind::ShapeMismatch, "density estimation expects 2-D points");
  if (points.rows() < 1) fail(ErrorKind::EmptyLog, "no points to estimate a density from");
  if (bandwidth && !(*bandwidth > 0)) fail(ErrorKind::UsageError, "bandwidth must be positive");

  DensityGrid grid;
  grid.width = width;
  grid.height = height;
  grid.bandwidth = bandwidth ? Bandwidth{*bandwidth, *bandwidth} : silverman_bandwidth(points);
  grid.x_min = points.col(0).minCoeff() - 3 * grid.bandwidth.x;
  grid.x_max = points.col(0).maxCoeff() + 3 * grid.bandwidth.x;
  grid.y_min = points.col(1).minCoeff() - 3 * grid.bandwidth.y;
  grid.y_max = points.col(1).maxCoeff() + 3 * grid.bandwidth.y;

  const double hx = grid.bandwidth.x;
  const double hy = grid.bandwidth.y;
  const double norm = 1.0 / (2 * std::numbers::pi * hx * hy * static_cast<double>(points.rows()));
  grid.density = Eigen::MatrixXd::Zero(height, width);
  for (int j = 0; j < height; ++j) {
    double y = grid.y_center(j);
    for (int i = 0; i < width; ++i) {
      double x = grid.x_center(i);
      double sum = 0;
      for (Eigen::Index p = 0; p < points.rows(); ++p) {
        double dx = (x - points(p, 0)) / hx;
        double dy = (y - points(p, 1)) / hy;
        sum += std::exp(-0.5 * (dx * dx + dy * dy));
      }
      grid.density(j, i) = norm * sum;
    }
  }
  return grid;
}

int count_local_maxima(const DensityGrid& grid) {
  const int w = grid.width, h = grid.height;
  const double tie = 1e-12 * std::max(grid.density.maxCoeff(), 0.0);
  auto inside = [&](int x, int y) { return x >= 0 && x < w && y >= 0 && y < h; };
  std::vector<char> seen(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  int count = 0;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (seen[static_cast<std::size_t>(j) * w + i]) continue;
      const double v = grid.density(j, i);
      if (!(v > tie)) continue;
      // Flood the plateau of cells tied with (i, j); it is a maximum when no
      // neighbour of any member is larger.
      bool peak = true;
      std::vector<std::pair<int, int>> stack{{i, j}};
      seen[static_cast<std::size_t>(j) * w + i] = 1;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if ((!dx && !dy) || !inside(nx, ny)) continue;
            const double u = grid.density(ny, nx);
            if (u > v + tie) {
              peak = false;
            } else if (std::abs(u - v) <= tie) {
              auto& flag = seen[static_cast<std::size_t>(ny) * w + nx];
              if (!flag) {
                flag = 1;
                stack.push_back({nx, ny});
              }
            }
          }
        }
      }
      count += peak;
    }
  }
  return count;
}

}  // namespace qspace
