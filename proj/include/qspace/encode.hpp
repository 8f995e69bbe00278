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

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qspace/query_ir.hpp"
#include "qspace/schema.hpp"

namespace qspace {

/// A numeric predicate slot keyed by (column, operator). It contributes two
/// dimensions: a presence bit and the min-max normalized constant.
struct ContinuousSlot {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  double min = 0;
  double max = 0;
  std::vector<double> observed;  // sorted, distinct

  double normalize(double constant) const;
  double denormalize(double value) const;
};

/// Vocabulary of a dummy coding. Binary slots are fragment strings plus one
/// "TEXT:<table>.<column>:<op>:<value>" slot per observed text constant, so
/// text predicates are encoded without loss. Layout of a vector: binary slots
/// first, then (presence, value) pairs for each continuous slot.
class FeatureSpace {
 public:
  FeatureSpace(Schema schema, std::vector<std::string> binary_slots,
               std::vector<ContinuousSlot> continuous_slots);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<std::string>& binary_slots() const noexcept { return binary_; }
  const std::vector<ContinuousSlot>& continuous_slots() const noexcept { return continuous_; }

  std::size_t dimension() const noexcept { return binary_.size() + 2 * continuous_.size(); }
  std::size_t presence_index(std::size_t slot) const { return binary_.size() + 2 * slot; }
  std::size_t value_index(std::size_t slot) const { return binary_.size() + 2 * slot + 1; }

  std::optional<std::size_t> binary_index(const std::string& fragment) const;
  std::optional<std::size_t> continuous_index(const ColumnRef& column, CompareOp op) const;

  /// Column names for CSV export, one per dimension.
  std::vector<std::string> slot_names() const;

  bool operator==(const FeatureSpace& other) const;

  nlohmann::ordered_json to_json() const;
  static std::shared_ptr<const FeatureSpace> from_json(const nlohmann::ordered_json& doc);

 private:
  Schema schema_;
  std::vector<std::string> binary_;
  std::vector<ContinuousSlot> continuous_;
  std::map<std::string, std::size_t> binary_lookup_;
};

using FeatureSpacePtr = std::shared_ptr<const FeatureSpace>;

/// Sparse vector in a FeatureSpace; absent entries are zero.
struct FeatureVector {
  FeatureSpacePtr space;
  std::map<std::size_t, double> entries;

  Eigen::VectorXd dense() const;
  bool operator==(const FeatureVector& other) const {
    return space == other.space && entries == other.entries;
  }
};

double dot(const FeatureVector& a, const FeatureVector& b);

std::string text_slot(const ColumnRef& column, CompareOp op, const std::string& value);

/// Throws EmptyLog.
FeatureSpacePtr build_space(const std::vector<QueryIR>& log, const Schema& schema);

/// Repeated numeric predicates on one (column, operator) collapse to the
/// extreme constant: the largest for > and >=, the smallest for < and <=,
/// and the last in canonical order otherwise. Throws OutOfVocabulary when a
/// fragment, text constant or numeric slot is missing from the space, or a
/// constant lies outside the slot's observed range.
FeatureVector encode(const QueryIR& ir, const FeatureSpacePtr& space);

/// Inverse of encode over the vocabulary. Throws NonBinaryValue or
/// MalformedVector.
QueryIR decode(const FeatureVector& v);

Eigen::MatrixXd dense_matrix(const std::vector<FeatureVector>& vectors);

}  // namespace qspace
