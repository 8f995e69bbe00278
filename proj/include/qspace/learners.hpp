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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qspace/kernel.hpp"

namespace qspace {

// Every learner here reads Gram or dissimilarity entries only; none of them
// needs the queries themselves.

struct KernelKmeansResult {
  std::vector<int> labels;              // relabelled by first appearance
  std::vector<double> objective_trace;  // one value per assignment pass
  int iterations = 0;
  int reseeded_clusters = 0;  // empty clusters restarted at the farthest point
  bool converged = false;
};

/// Lloyd iterations in the implicit feature space:
///   ||phi_i - mu_c||^2 = K_ii - 2/|c| sum_{j in c} K_ij + 1/|c|^2 sum_{j,l in c} K_jl.
/// Seeded farthest-first initialization. Throws NotPsd or KTooLarge.
KernelKmeansResult kernel_kmeans(const KernelMatrix& k, int clusters, std::uint64_t seed, int max_iter = 100);
/// Sum of implicit squared distances of every point to its cluster mean.
double kernel_kmeans_objective(const Eigen::MatrixXd& k, const std::vector<int>& labels);

struct KernelPcaResult {
  Eigen::MatrixXd coordinates;  // n x m
  Eigen::VectorXd eigenvalues;  // of the centered kernel, non-increasing
};

/// Throws NotPsd or DimensionTooLarge.
KernelPcaResult kernel_pca(const KernelMatrix& k, Eigen::Index m);

struct KrrModel {
  Eigen::VectorXd alpha;
};

/// Solves (K + lambda I) alpha = y. Throws NotPsd, SingularSystem,
/// ShapeMismatch, or UsageError for lambda <= 0.
KrrModel krr_fit(const KernelMatrix& k, const Eigen::VectorXd& y, double lambda);
double krr_predict(const KrrModel& model, const Eigen::VectorXd& k_row);
/// Leave-one-out predictions from the hat matrix H = K (K + lambda I)^-1:
/// y_i - (y_i - (Hy)_i) / (1 - H_ii).
Eigen::VectorXd krr_loo_predictions(const KernelMatrix& k, const Eigen::VectorXd& y, double lambda);

/// Indices of the k smallest entries; ties go to the lower index.
std::vector<Eigen::Index> nearest_neighbors(const Eigen::VectorXd& d_row, int k);
/// Inverse-distance weighted mean; an exact match (d = 0) returns its target.
/// Throws KTooLarge.
double knn_regress(const Eigen::VectorXd& d_row, std::span<const double> y, int k = 5);
/// Inverse-distance weighted vote; ties go to the smallest label.
std::string knn_classify(const Eigen::VectorXd& d_row, std::span<const std::string> labels, int k = 5);

}  // namespace qspace
