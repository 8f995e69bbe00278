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

#include "qspace/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qspace/error.hpp"

namespace qspace {
namespace {

void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::AsymmetricInput, "kernel matrix must be square");
  double scale = m.size() ? std::max(1.0, m.cwiseAbs().maxCoeff()) : 1.0;
  if (asymmetry(m) > kSymmetryTolerance * scale)
    fail(ErrorKind::AsymmetricInput, "matrix asymmetry " + format_number(asymmetry(m)) + " exceeds tolerance");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

KernelMatrix::KernelMatrix(Eigen::MatrixXd values) : values_(std::move(values)) { require_symmetric(values_); }

KernelMatrix KernelMatrix::gram_of(const Eigen::MatrixXd& features) {
  return certified(symmetrized(features * features.transpose()));
}

KernelMatrix KernelMatrix::certified(Eigen::MatrixXd values) {
  KernelMatrix k(std::move(values));
  k.certified_ = true;
  return k;
}

double median_off_diagonal(const Eigen::MatrixXd& d) {
  std::vector<double> values;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) values.push_back(d(i, j));
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

KernelMatrix gaussian_from_dissim(const DissimilarityMatrix& d, std::optional<double> sigma) {
  double s = 0;
  if (sigma) {
    if (!(*sigma > 0) || !std::isfinite(*sigma)) fail(ErrorKind::InvalidSigma, "sigma must be positive and finite");
    s = *sigma;
  } else {
    s = median_off_diagonal(d.values);
    if (!(s > 0)) fail(ErrorKind::DegenerateScale, "median off-diagonal dissimilarity is zero");
  }
  Eigen::MatrixXd k = (-d.values.array().square() / (2.0 * s * s)).exp().matrix();
  return KernelMatrix(symmetrized(k));
}

KernelMatrix linear_kernel(const std::vector<FeatureVector>& vectors) {
  const auto n = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      k(i, j) = k(j, i) = dot(vectors[static_cast<std::size_t>(i)], vectors[static_cast<std::size_t>(j)]);
  return KernelMatrix::certified(std::move(k));
}

MercerReport mercer_check(const Eigen::MatrixXd& k, double tol) {
  require_symmetric(k);
  if (k.size() == 0) return {true, 0.0};
  auto eig = symmetric_eigen(k);
  double min_eigenvalue = eig.values(eig.values.size() - 1);
  return {min_eigenvalue >= -tol, min_eigenvalue};
}

MercerReport mercer_check(const KernelMatrix& k, double tol) { return mercer_check(k.values(), tol); }

KernelMatrix certify(const KernelMatrix& k, double tol) {
  if (k.psd_certified()) return k;
  auto report = mercer_check(k, tol);
  if (!report.psd) fail(ErrorKind::NotPsd, "minimum eigenvalue " + format_number(report.min_eigenvalue));
  return KernelMatrix::certified(k.values());
}

KernelMatrix spectral_clip(const KernelMatrix& k) {
  require_symmetric(k.values());
  if (k.size() == 0) return KernelMatrix::certified(k.values());
  auto eig = symmetric_eigen(k.values());
  if (eig.values.minCoeff() >= 0) return KernelMatrix::certified(k.values());
  eig.values = eig.values.cwiseMax(0.0);
  return KernelMatrix::certified(eig.reconstruct());
}

KernelMatrix spectral_shift(const KernelMatrix& k) {
  require_symmetric(k.values());
  if (k.size() == 0) return KernelMatrix::certified(k.values());
  auto eig = symmetric_eigen(k.values());
  double lambda_min = eig.values.minCoeff();
  Eigen::MatrixXd out = k.values();
  if (lambda_min < 0) out.diagonal().array() += -lambda_min;
  return KernelMatrix::certified(std::move(out));
}

ClippedBasis clipped_basis(const KernelMatrix& k) {
  auto eig = symmetric_eigen(k.values());
  Eigen::Index positive = 0;
  while (positive < eig.values.size() && eig.values(positive) > 0) ++positive;
  return {eig.vectors.leftCols(positive)};
}

Eigen::VectorXd clipped_row(const ClippedBasis& basis, const Eigen::VectorXd& raw_row) {
  if (raw_row.size() != basis.positive_vectors.rows())
    fail(ErrorKind::ShapeMismatch, "kernel row length does not match the training set");
  return basis.positive_vectors * (basis.positive_vectors.transpose() * raw_row);
}

}  // namespace qspace
