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

#include "qspace/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "qspace/error.hpp"
#include "qspace/random.hpp"

namespace qspace {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_certified(const KernelMatrix& k, const char* who) {
  if (!k.psd_certified())
    fail(ErrorKind::NotPsd, std::string(who) + " needs a PSD-certified kernel; run a Mercer check or correction");
}

struct ClusterStats {
  std::vector<int> size;
  std::vector<double> within;   // sum_{j,l in c} K_jl
  Eigen::MatrixXd point_sums;   // n x k, sum_{j in c} K_ij
};

ClusterStats cluster_stats(const Eigen::MatrixXd& k, const std::vector<int>& labels, int clusters) {
  const auto n = k.rows();
  ClusterStats s{std::vector<int>(static_cast<std::size_t>(clusters), 0),
                 std::vector<double>(static_cast<std::size_t>(clusters), 0.0),
                 Eigen::MatrixXd::Zero(n, clusters)};
  for (Eigen::Index j = 0; j < n; ++j) {
    int c = labels[static_cast<std::size_t>(j)];
    ++s.size[static_cast<std::size_t>(c)];
    s.point_sums.col(c) += k.col(j);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    int c = labels[static_cast<std::size_t>(j)];
    s.within[static_cast<std::size_t>(c)] += s.point_sums(j, c);
  }
  return s;
}

double implicit_distance(const Eigen::MatrixXd& k, const ClusterStats& s, Eigen::Index i, int c) {
  auto size = s.size[static_cast<std::size_t>(c)];
  if (size == 0) return kInf;
  double inv = 1.0 / size;
  return std::max(0.0, k(i, i) - 2.0 * inv * s.point_sums(i, c) + inv * inv * s.within[static_cast<std::size_t>(c)]);
}

// Moves the point farthest from its cluster mean into each empty cluster.
int reseed_empty(const Eigen::MatrixXd& k, std::vector<int>& labels, int clusters) {
  int reseeded = 0;
  for (int c = 0; c < clusters; ++c) {
    auto s = cluster_stats(k, labels, clusters);
    if (s.size[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index far = -1;
    double far_distance = -1;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      int own = labels[static_cast<std::size_t>(i)];
      if (s.size[static_cast<std::size_t>(own)] < 2) continue;
      double d = implicit_distance(k, s, i, own);
      if (d > far_distance) {
        far_distance = d;
        far = i;
      }
    }
    if (far < 0) break;
    labels[static_cast<std::size_t>(far)] = c;
    ++reseeded;
  }
  return reseeded;
}

std::vector<int> relabel_by_appearance(const std::vector<int>& labels) {
  std::map<int, int> mapping;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int label : labels) {
    auto [it, inserted] = mapping.try_emplace(label, static_cast<int>(mapping.size()));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

double kernel_kmeans_objective(const Eigen::MatrixXd& k, const std::vector<int>& labels) {
  int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  auto s = cluster_stats(k, labels, clusters);
  double total = 0;
  for (Eigen::Index i = 0; i < k.rows(); ++i) total += implicit_distance(k, s, i, labels[static_cast<std::size_t>(i)]);
  return total;
}

KernelKmeansResult kernel_kmeans(const KernelMatrix& kernel, int clusters, std::uint64_t seed, int max_iter) {
  require_certified(kernel, "kernel k-means");
  const Eigen::MatrixXd& k = kernel.values();
  const Eigen::Index n = k.rows();
  if (clusters < 1) fail(ErrorKind::UsageError, "k must be at least 1");
  if (clusters > n) fail(ErrorKind::KTooLarge, "k = " + std::to_string(clusters) + " exceeds n = " + std::to_string(n));

  auto point_distance = [&](Eigen::Index i, Eigen::Index j) { return std::max(0.0, k(i, i) + k(j, j) - 2 * k(i, j)); };

  Rng rng(seed);
  std::vector<Eigen::Index> centers{static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n)))};
  std::vector<bool> is_center(static_cast<std::size_t>(n), false);
  is_center[static_cast<std::size_t>(centers.front())] = true;
  while (static_cast<int>(centers.size()) < clusters) {
    Eigen::Index best = -1;
    double best_distance = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_center[static_cast<std::size_t>(i)]) continue;
      double nearest = kInf;
      for (auto c : centers) nearest = std::min(nearest, point_distance(i, c));
      if (nearest > best_distance) {
        best_distance = nearest;
        best = i;
      }
    }
    centers.push_back(best);
    is_center[static_cast<std::size_t>(best)] = true;
  }

  KernelKmeansResult result;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < clusters; ++c)
      if (point_distance(i, centers[static_cast<std::size_t>(c)]) <
          point_distance(i, centers[static_cast<std::size_t>(best)]))
        best = c;
    labels[static_cast<std::size_t>(i)] = best;
  }
  // Seed points belong to their own cluster even when tied with an earlier one.
  for (int c = 0; c < clusters; ++c) labels[static_cast<std::size_t>(centers[static_cast<std::size_t>(c)])] = c;
  result.reseeded_clusters += reseed_empty(k, labels, clusters);

  for (int iter = 0; iter < max_iter; ++iter) {
    auto stats = cluster_stats(k, labels, clusters);
    double objective = 0;
    bool changed = false;
    std::vector<int> next = labels;
    for (Eigen::Index i = 0; i < n; ++i) {
      int own = labels[static_cast<std::size_t>(i)];
      double own_distance = implicit_distance(k, stats, i, own);
      objective += own_distance;
      int best = own;
      double best_distance = own_distance;
      for (int c = 0; c < clusters; ++c) {
        double d = implicit_distance(k, stats, i, c);
        if (d < best_distance - 1e-12) {
          best = c;
          best_distance = d;
        }
      }
      if (best != own) {
        next[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    result.objective_trace.push_back(objective);
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }
    labels = std::move(next);
    result.reseeded_clusters += reseed_empty(k, labels, clusters);
  }
  if (!result.converged) result.objective_trace.push_back(kernel_kmeans_objective(k, labels));
  result.labels = relabel_by_appearance(labels);
  return result;
}

KernelPcaResult kernel_pca(const KernelMatrix& k, Eigen::Index m) {
  require_certified(k, "kernel PCA");
  const Eigen::Index n = k.size();
  if (m < 1 || m > n)
    fail(ErrorKind::DimensionTooLarge, "target dimension " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  auto eig = symmetric_eigen(double_center(k.values()));
  KernelPcaResult out;
  out.eigenvalues = eig.values;
  out.coordinates.resize(n, m);
  // Components at rounding level carry no variance.
  const double floor = 1e-10 * std::max(0.0, eig.values(0));
  for (Eigen::Index c = 0; c < m; ++c) {
    const double value = eig.values(c) > floor ? eig.values(c) : 0.0;
    out.coordinates.col(c) = eig.vectors.col(c) * std::sqrt(value);
  }
  return out;
}

namespace {

Eigen::LDLT<Eigen::MatrixXd> regularized_solver(const KernelMatrix& k, double lambda) {
  require_certified(k, "kernel ridge regression");
  if (!(lambda > 0) || !std::isfinite(lambda)) fail(ErrorKind::UsageError, "lambda must be positive and finite");
  Eigen::MatrixXd a = k.values();
  a.diagonal().array() += lambda;
  if (!a.allFinite()) fail(ErrorKind::SingularSystem, "kernel contains non-finite entries");
  Eigen::LDLT<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) fail(ErrorKind::SingularSystem, "LDLT factorization failed");
  return solver;
}

}  // namespace

KrrModel krr_fit(const KernelMatrix& k, const Eigen::VectorXd& y, double lambda) {
  if (y.size() != k.size()) fail(ErrorKind::ShapeMismatch, "target count does not match the kernel size");
  auto solver = regularized_solver(k, lambda);
  KrrModel model{solver.solve(y)};
  if (solver.info() != Eigen::Success || !model.alpha.allFinite())
    fail(ErrorKind::SingularSystem, "ridge system has no finite solution");
  return model;
}

double krr_predict(const KrrModel& model, const Eigen::VectorXd& k_row) {
  if (k_row.size() != model.alpha.size()) fail(ErrorKind::ShapeMismatch, "kernel row length does not match the model");
  return k_row.dot(model.alpha);
}

Eigen::VectorXd krr_loo_predictions(const KernelMatrix& k, const Eigen::VectorXd& y, double lambda) {
  if (y.size() != k.size()) fail(ErrorKind::ShapeMismatch, "target count does not match the kernel size");
  auto solver = regularized_solver(k, lambda);
  // K (K + lambda I)^-1 = I - lambda (K + lambda I)^-1.
  Eigen::MatrixXd inverse = solver.solve(Eigen::MatrixXd::Identity(k.size(), k.size()));
  Eigen::MatrixXd hat = Eigen::MatrixXd::Identity(k.size(), k.size()) - lambda * inverse;
  Eigen::VectorXd fitted = hat * y;
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double leverage = hat(i, i);
    if (!(1.0 - leverage > 1e-14)) fail(ErrorKind::SingularSystem, "leave-one-out leverage is 1");
    out(i) = y(i) - (y(i) - fitted(i)) / (1.0 - leverage);
  }
  return out;
}

std::vector<Eigen::Index> nearest_neighbors(const Eigen::VectorXd& d_row, int k) {
  const auto n = d_row.size();
  if (k < 1) fail(ErrorKind::UsageError, "k must be at least 1");
  if (k > n) fail(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " training points");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d_row(a) < d_row(b); });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

double knn_regress(const Eigen::VectorXd& d_row, std::span<const double> y, int k) {
  if (static_cast<Eigen::Index>(y.size()) != d_row.size()) fail(ErrorKind::ShapeMismatch, "one target per training point");
  auto neighbors = nearest_neighbors(d_row, k);
  if (d_row(neighbors.front()) == 0) return y[static_cast<std::size_t>(neighbors.front())];
  double weighted = 0;
  double total = 0;
  for (auto j : neighbors) {
    double w = 1.0 / d_row(j);
    weighted += w * y[static_cast<std::size_t>(j)];
    total += w;
  }
  return weighted / total;
}

std::string knn_classify(const Eigen::VectorXd& d_row, std::span<const std::string> labels, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != d_row.size()) fail(ErrorKind::ShapeMismatch, "one label per training point");
  auto neighbors = nearest_neighbors(d_row, k);
  if (d_row(neighbors.front()) == 0) return labels[static_cast<std::size_t>(neighbors.front())];
  std::map<std::string, double> votes;
  for (auto j : neighbors) votes[labels[static_cast<std::size_t>(j)]] += 1.0 / d_row(j);
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;  // map order keeps the smallest label on ties
  return best->first;
}

}  // namespace qspace
