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
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qspace/dissim.hpp"
#include "qspace/pca.hpp"
#include "qspace/schema.hpp"

namespace qspace {

/// Retained column indices of the raw space, ascending.
struct PrototypeColumns {
  std::vector<Eigen::Index> columns;
};

using DbfmCompression = std::variant<std::monostate, Projection, PrototypeColumns>;

/// Dissimilarity space over a fixed reference log: query i is represented by
/// the concatenation of row i of every stacked dissimilarity matrix.
struct DbfmSpace {
  std::vector<QueryIR> reference;
  std::vector<MeasurePtr> measures;  // one per stacked matrix; null if unknown
  Eigen::MatrixXd raw;               // N x (M * N)
  DbfmCompression compression;

  Eigen::Index raw_dim() const { return raw.cols(); }
  Eigen::Index dim() const;
  /// Compressed vectors of the reference queries, one per row.
  Eigen::MatrixXd vectors() const;
};

/// Throws ShapeMismatch when a matrix is not N x N for the N-query log.
DbfmSpace dbfm_build(const std::vector<QueryIR>& log, const std::vector<DissimilarityMatrix>& matrices);

/// Out-of-sample map: dissimilarities of `q` to every reference query for
/// each stacked measure, before compression.
Eigen::VectorXd dbfm_raw_map(const DbfmSpace& space, const QueryIR& q);
/// dbfm_raw_map followed by the space's compression.
Eigen::VectorXd dbfm_map(const DbfmSpace& space, const QueryIR& q);

/// PCA over the raw reference rows. Throws DimensionTooLarge or
/// DegenerateData (e.g. every reference query identical).
DbfmSpace dbfm_compress_pca(const DbfmSpace& space, Eigen::Index target_dim);

/// k-medoids over the raw columns (each column a point in R^N, Euclidean),
/// farthest-first initialization from a seeded start column. Throws KTooLarge.
DbfmSpace prototype_select(const DbfmSpace& space, Eigen::Index k, std::uint64_t seed);
std::vector<Eigen::Index> kmedoid_columns(const Eigen::MatrixXd& data, Eigen::Index k, std::uint64_t seed);

struct MdsResult {
  Eigen::MatrixXd coordinates;  // N x target_dim
  Eigen::VectorXd eigenvalues;  // full spectrum of B, non-increasing
  /// |most negative eigenvalue| / largest eigenvalue; 0 for Euclidean input.
  double distortion = 0;
};

/// Classical (Torgerson) scaling; negative eigenvalues are truncated to zero.
/// Throws DimensionTooLarge unless 1 <= target_dim <= N - 1.
MdsResult mds(const Eigen::MatrixXd& dissimilarities, Eigen::Index target_dim);
MdsResult mds(const DissimilarityMatrix& matrix, Eigen::Index target_dim);

nlohmann::ordered_json to_json(const DbfmSpace& space, const Schema& schema);
/// Re-parses the stored canonical SQL and recomputes the raw rows.
DbfmSpace dbfm_from_json(const nlohmann::ordered_json& doc);

}  // namespace qspace
