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

#include "qspace/pca.hpp"

#include <algorithm>
#include <string>

#include "qspace/error.hpp"
#include "qspace/linalg.hpp"

namespace qspace {

Projection pca_fit(const Eigen::MatrixXd& data, Eigen::Index target_dim) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (target_dim < 1 || target_dim > std::min(n, d))
    fail(ErrorKind::DimensionTooLarge, "target dimension " + std::to_string(target_dim) +
                                           " outside [1, " + std::to_string(std::min(n, d)) + "]");
  if (n < 2) fail(ErrorKind::DegenerateData, "PCA needs at least two observations");

  Projection p;
  p.mean = data.colwise().mean().transpose();
  Eigen::MatrixXd centered = data.rowwise() - p.mean.transpose();
  p.total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
  double scale = std::max(1.0, data.squaredNorm() / static_cast<double>(n));
  if (p.total_variance <= 1e-24 * scale) fail(ErrorKind::DegenerateData, "data has zero total variance");

  p.components.resize(d, target_dim);
  p.eigenvalues.resize(target_dim);
  if (d <= n) {
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    auto eig = symmetric_eigen(cov);
    for (Eigen::Index k = 0; k < target_dim; ++k) {
      p.eigenvalues(k) = std::max(0.0, eig.values(k));
      p.components.col(k) = eig.vectors.col(k);
    }
  } else {
    // Dual form: the centered Gram matrix shares the non-zero spectrum.
    Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(n - 1);
    auto eig = symmetric_eigen(gram);
    for (Eigen::Index k = 0; k < target_dim; ++k) {
      double lambda = std::max(0.0, eig.values(k));
      p.eigenvalues(k) = lambda;
      Eigen::VectorXd axis = centered.transpose() * eig.vectors.col(k);
      double norm = axis.norm();
      if (norm > 1e-12 * std::sqrt(scale)) {
        axis /= norm;
      } else {
        axis.setZero();
      }
      p.components.col(k) = axis;
    }
  }
  return p;
}

Projection pca_fit(const std::vector<FeatureVector>& vectors, Eigen::Index target_dim) {
  return pca_fit(dense_matrix(vectors), target_dim);
}

Eigen::VectorXd pca_apply(const Projection& projection, const Eigen::VectorXd& x) {
  if (x.size() != projection.input_dim())
    fail(ErrorKind::ShapeMismatch, "vector has " + std::to_string(x.size()) + " entries, projection expects " +
                                       std::to_string(projection.input_dim()));
  return projection.components.transpose() * (x - projection.mean);
}

Eigen::VectorXd pca_apply(const Projection& projection, const FeatureVector& v) {
  return pca_apply(projection, v.dense());
}

Eigen::MatrixXd pca_apply_rows(const Projection& projection, const Eigen::MatrixXd& data) {
  if (data.cols() != projection.input_dim())
    fail(ErrorKind::ShapeMismatch, "data width does not match the projection");
  return (data.rowwise() - projection.mean.transpose()) * projection.components;
}

}  // namespace qspace
