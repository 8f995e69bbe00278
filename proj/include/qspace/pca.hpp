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

#include <vector>

#include <Eigen/Dense>

#include "qspace/encode.hpp"

namespace qspace {

/// Principal-component projection: the sample mean and the leading
/// eigenvectors of the sample covariance (denominator N - 1).
struct Projection {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // D x m, orthonormal columns
  Eigen::VectorXd eigenvalues;  // m, non-increasing
  double total_variance = 0;    // trace of the covariance

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.cols(); }
};

/// Rows of `data` are observations. Throws DimensionTooLarge when
/// target_dim is outside [1, min(N, D)] and DegenerateData when the data has
/// no variance or fewer than two rows.
Projection pca_fit(const Eigen::MatrixXd& data, Eigen::Index target_dim);
Projection pca_fit(const std::vector<FeatureVector>& vectors, Eigen::Index target_dim);

Eigen::VectorXd pca_apply(const Projection& projection, const Eigen::VectorXd& x);
Eigen::VectorXd pca_apply(const Projection& projection, const FeatureVector& v);
/// Projects every row of `data`.
Eigen::MatrixXd pca_apply_rows(const Projection& projection, const Eigen::MatrixXd& data);

}  // namespace qspace
