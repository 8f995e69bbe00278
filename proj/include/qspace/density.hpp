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

#include <optional>

#include <Eigen/Dense>

namespace qspace {

struct Bandwidth {
  double x = 1;
  double y = 1;
};

/// Per-axis Silverman-style rule for two dimensions, h = sigma * n^(-1/6).
/// An axis with no spread falls back to h = 1.
Bandwidth silverman_bandwidth(const Eigen::MatrixXd& points);

/// Gaussian kernel density estimate evaluated at W x H cell centres.
struct DensityGrid {
  int width = 0;
  int height = 0;
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  Bandwidth bandwidth;
  Eigen::MatrixXd density;  // height x width, row = y index

  double cell_width() const { return (x_max - x_min) / width; }
  double cell_height() const { return (y_max - y_min) / height; }
  double x_center(int i) const { return x_min + (i + 0.5) * cell_width(); }
  double y_center(int j) const { return y_min + (j + 0.5) * cell_height(); }
  /// Riemann sum of the density over the grid.
  double mass() const { return density.sum() * cell_width() * cell_height(); }
};

/// `points` is n x 2. Bounds span the points padded by three bandwidths.
/// Throws UsageError unless width, height >= 2 and n >= 1.
DensityGrid kde_grid(const Eigen::MatrixXd& points, int width, int height,
                     std::optional<double> bandwidth = std::nullopt);

/// Connected plateaus of tied cells that no eight-neighbour exceeds.
int count_local_maxima(const DensityGrid& grid);

}  // namespace qspace
