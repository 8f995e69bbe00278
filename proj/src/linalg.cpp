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

#include "qspace/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qspace/error.hpp"

namespace qspace {

Eigen::MatrixXd SymmetricEigen::reconstruct() const {
  Eigen::MatrixXd out = vectors * values.asDiagonal() * vectors.transpose();
  return 0.5 * (out + out.transpose());
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::ShapeMismatch, "eigendecomposition needs a square matrix");
  const auto n = m.rows();
  SymmetricEigen out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::SingularSystem, "symmetric eigensolver did not converge");

  // Eigen returns ascending order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = solver.eigenvalues()(src);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(v(i)) > std::abs(v(pivot)) + 1e-12) pivot = i;
    if (v(pivot) < 0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

double asymmetry(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd double_center(const Eigen::MatrixXd& m) {
  Eigen::VectorXd row_means = m.rowwise().mean();
  Eigen::RowVectorXd col_means = m.colwise().mean();
  double grand = m.mean();
  Eigen::MatrixXd out = m;
  out.colwise() -= row_means;
  out.rowwise() -= col_means;
  out.array() += grand;
  return out;
}

}  // namespace qspace
