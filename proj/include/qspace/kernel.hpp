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
#include <vector>

#include <Eigen/Dense>

#include "qspace/dissim.hpp"
#include "qspace/encode.hpp"
#include "qspace/linalg.hpp"

namespace qspace {

/// Symmetric Gram matrix. The PSD certificate is only granted by a passing
/// Mercer check, a spectral correction, or construction as an explicit Gram
/// product.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  /// Uncertified; throws AsymmetricInput if `values` is not symmetric
  /// within 1e-9.
  explicit KernelMatrix(Eigen::MatrixXd values);

  /// For matrices that are Gram products by construction (F F^T).
  static KernelMatrix gram_of(const Eigen::MatrixXd& features);
  /// Trusted constructor for corrections and checks in this library.
  static KernelMatrix certified(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index size() const { return values_.rows(); }
  bool psd_certified() const noexcept { return certified_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  Eigen::MatrixXd values_;
  bool certified_ = false;
};

inline constexpr double kSymmetryTolerance = 1e-9;

/// K_ij = exp(-d_ij^2 / (2 sigma^2)). With no sigma, the median of the
/// off-diagonal dissimilarities is used (DegenerateScale if it is 0).
/// Throws InvalidSigma for sigma <= 0.
KernelMatrix gaussian_from_dissim(const DissimilarityMatrix& d, std::optional<double> sigma = std::nullopt);
double median_off_diagonal(const Eigen::MatrixXd& d);

/// Dot products of dummy-coded vectors; certified. Throws SpaceMismatch.
KernelMatrix linear_kernel(const std::vector<FeatureVector>& vectors);

struct MercerReport {
  bool psd = false;
  double min_eigenvalue = 0;
};

/// Throws AsymmetricInput.
MercerReport mercer_check(const KernelMatrix& k, double tol = 1e-8);
MercerReport mercer_check(const Eigen::MatrixXd& k, double tol = 1e-8);
/// Returns a certified copy when the check passes; throws NotPsd otherwise.
KernelMatrix certify(const KernelMatrix& k, double tol = 1e-8);

/// Zero the negative part of the spectrum.
KernelMatrix spectral_clip(const KernelMatrix& k);
/// Add |lambda_min| to the diagonal when lambda_min < 0.
KernelMatrix spectral_shift(const KernelMatrix& k);

/// Eigenbasis of a clipped kernel, kept for approximate out-of-sample rows.
struct ClippedBasis {
  Eigen::MatrixXd positive_vectors;  // eigenvectors with eigenvalue > 0
};
ClippedBasis clipped_basis(const KernelMatrix& k);
/// Projects a raw kernel row against the training set onto the retained
/// eigenspace. This is an approximation: the correction itself is defined
/// only on the training Gram matrix.
Eigen::VectorXd clipped_row(const ClippedBasis& basis, const Eigen::VectorXd& raw_row);

}  // namespace qspace
