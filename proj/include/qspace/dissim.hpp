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

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qspace/query_ir.hpp"

namespace qspace {

/// Non-negative per-role weights over FROM, SELECT, JOIN, PRED, GROUP, ORDER
/// summing to one.
using RoleWeights = std::array<double, kRoleCount>;

RoleWeights uniform_role_weights();
/// Throws InvalidWeights.
void check_weights(const double* begin, const double* end);

/// Dissimilarity between two queries. Implementations must be symmetric,
/// zero on identical queries, and bounded to [0, 1] if they want to combine
/// with the built-in measures.
class Measure {
 public:
  virtual ~Measure() = default;

  virtual double operator()(const QueryIR& a, const QueryIR& b) const = 0;
  /// Short identifier, e.g. "fragment" or "ngram".
  virtual std::string name() const = 0;
  /// Round-trips through make_measure.
  virtual nlohmann::ordered_json descriptor() const = 0;

  /// All pairwise values; the default loops over i <= j and mirrors.
  virtual Eigen::MatrixXd pairwise(const std::vector<QueryIR>& log) const;
  /// d(q, reference[j]) for every j.
  virtual Eigen::VectorXd row(const QueryIR& q, const std::vector<QueryIR>& reference) const;
};

using MeasurePtr = std::shared_ptr<const Measure>;

/// 1 - sum_r w_r * J_r with J_r the Jaccard similarity of role-r fragment
/// sets (1 when both are empty). Constants never enter, so queries that
/// differ only in predicate constants are at distance 0.
class FragmentMeasure final : public Measure {
 public:
  explicit FragmentMeasure(RoleWeights weights = uniform_role_weights());

  double operator()(const QueryIR& a, const QueryIR& b) const override;
  std::string name() const override { return "fragment"; }
  nlohmann::ordered_json descriptor() const override;
  Eigen::MatrixXd pairwise(const std::vector<QueryIR>& log) const override;
  Eigen::VectorXd row(const QueryIR& q, const std::vector<QueryIR>& reference) const override;

  const RoleWeights& weights() const noexcept { return weights_; }

 private:
  RoleWeights weights_;
};

/// Character n-gram Jaccard distance over the canonical SQL text of each
/// query.
class NgramMeasure final : public Measure {
 public:
  explicit NgramMeasure(int n = 3);

  double operator()(const QueryIR& a, const QueryIR& b) const override;
  std::string name() const override { return "ngram"; }
  nlohmann::ordered_json descriptor() const override;
  Eigen::MatrixXd pairwise(const std::vector<QueryIR>& log) const override;

  int n() const noexcept { return n_; }

 private:
  int n_;
};

/// {"kind": "fragment", "weights": [...]} or {"kind": "ngram", "n": 3}.
MeasurePtr make_measure(const nlohmann::ordered_json& descriptor);

double d_fragment(const QueryIR& a, const QueryIR& b, const RoleWeights& weights = uniform_role_weights());
/// Texts are lower-cased and whitespace runs collapsed before extracting
/// grams; a non-empty text shorter than n forms a single gram.
double d_ngram(std::string_view a, std::string_view b, int n = 3);

std::vector<std::string> ngrams(std::string_view text, int n);
double jaccard_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct DissimilarityMatrix {
  Eigen::MatrixXd values;
  std::string measure;   // tag, e.g. "fragment", "ngram", "concat"
  MeasurePtr source;     // null when combined or imported

  Eigen::Index size() const { return values.rows(); }
};

/// Throws EmptyLog.
DissimilarityMatrix matrix(const std::vector<QueryIR>& log, const MeasurePtr& measure);

/// Entrywise weighted average. Throws ShapeMismatch or InvalidWeights.
DissimilarityMatrix concat(const std::vector<DissimilarityMatrix>& matrices, const std::vector<double>& weights);

/// Imports a square matrix; throws ShapeMismatch or AsymmetricInput when it is
/// not a valid dissimilarity matrix (symmetric, zero diagonal, non-negative).
DissimilarityMatrix from_values(Eigen::MatrixXd values, std::string tag = "imported");

}  // namespace qspace
