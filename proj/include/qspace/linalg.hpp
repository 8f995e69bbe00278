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

#include <Eigen/Dense>

namespace qspace {

/// Eigenpairs of a symmetric matrix, eigenvalues in non-increasing order.
/// Each eigenvector's sign is fixed so that its largest-magnitude entry
/// (first on ties) is positive, which makes downstream coordinates
/// reproducible.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // column i pairs with values(i)

  Eigen::MatrixXd reconstruct() const;
};

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m);

/// Largest |m(i,j) - m(j,i)|.
double asymmetry(const Eigen::MatrixXd& m);

/// J m J with J = I - 11^T/n.
Eigen::MatrixXd double_center(const Eigen::MatrixXd& m);

}  // namespace qspace
