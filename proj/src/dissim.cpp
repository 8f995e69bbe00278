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

#include "qspace/dissim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iterator>

#include "qspace/error.hpp"
#include "qspace/linalg.hpp"

namespace qspace {
namespace {

using TokenSet = std::vector<std::string>;  // sorted, distinct

std::vector<TokenSet> role_tokens(const QueryIR& ir) {
  std::vector<TokenSet> out;
  for (const auto& role : fragments_by_role(ir)) out.emplace_back(role.begin(), role.end());
  return out;
}

double jaccard_similarity(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  std::size_t total = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(total);
}

double weighted_distance(const std::vector<TokenSet>& a, const std::vector<TokenSet>& b,
                         const RoleWeights& weights) {
  // Summing w_r * (1 - J_r) keeps d(q, q) exactly zero.
  double distance = 0;
  for (std::size_t r = 0; r < kRoleCount; ++r)
    if (weights[r] != 0) distance += weights[r] * (1.0 - jaccard_similarity(a[r], b[r]));
  return std::clamp(distance, 0.0, 1.0);
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

template <typename Prepared, typename Distance>
Eigen::MatrixXd pairwise_prepared(const std::vector<Prepared>& items, Distance&& distance) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      m(i, j) = m(j, i) = distance(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]);
  return m;
}

}  // namespace

RoleWeights uniform_role_weights() {
  RoleWeights w;
  w.fill(1.0 / static_cast<double>(kRoleCount));
  return w;
}

void check_weights(const double* begin, const double* end) {
  double sum = 0;
  for (const double* w = begin; w != end; ++w) {
    if (!(*w >= 0)) fail(ErrorKind::InvalidWeights, "weights must be non-negative");
    sum += *w;
  }
  if (begin == end || std::abs(sum - 1.0) > 1e-9)
    fail(ErrorKind::InvalidWeights, "weights must sum to 1 (got " + format_number(sum) + ")");
}

Eigen::MatrixXd Measure::pairwise(const std::vector<QueryIR>& log) const {
  return pairwise_prepared(log, [this](const QueryIR& a, const QueryIR& b) { return (*this)(a, b); });
}

Eigen::VectorXd Measure::row(const QueryIR& q, const std::vector<QueryIR>& reference) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(reference.size()));
  for (std::size_t j = 0; j < reference.size(); ++j) out(static_cast<Eigen::Index>(j)) = (*this)(q, reference[j]);
  return out;
}

FragmentMeasure::FragmentMeasure(RoleWeights weights) : weights_(weights) {
  check_weights(weights_.data(), weights_.data() + weights_.size());
}

double FragmentMeasure::operator()(const QueryIR& a, const QueryIR& b) const {
  return weighted_distance(role_tokens(a), role_tokens(b), weights_);
}

nlohmann::ordered_json FragmentMeasure::descriptor() const {
  return {{"kind", "fragment"}, {"weights", weights_}};
}

Eigen::MatrixXd FragmentMeasure::pairwise(const std::vector<QueryIR>& log) const {
  std::vector<std::vector<TokenSet>> prepared;
  prepared.reserve(log.size());
  for (const auto& q : log) prepared.push_back(role_tokens(q));
  return pairwise_prepared(prepared, [this](const auto& a, const auto& b) {
    return weighted_distance(a, b, weights_);
  });
}

Eigen::VectorXd FragmentMeasure::row(const QueryIR& q, const std::vector<QueryIR>& reference) const {
  auto tokens = role_tokens(q);
  Eigen::VectorXd out(static_cast<Eigen::Index>(reference.size()));
  for (std::size_t j = 0; j < reference.size(); ++j)
    out(static_cast<Eigen::Index>(j)) = weighted_distance(tokens, role_tokens(reference[j]), weights_);
  return out;
}

NgramMeasure::NgramMeasure(int n) : n_(n) {
  if (n < 1) fail(ErrorKind::UsageError, "n-gram length must be at least 1");
}

double NgramMeasure::operator()(const QueryIR& a, const QueryIR& b) const {
  return d_ngram(emit(a), emit(b), n_);
}

nlohmann::ordered_json NgramMeasure::descriptor() const { return {{"kind", "ngram"}, {"n", n_}}; }

Eigen::MatrixXd NgramMeasure::pairwise(const std::vector<QueryIR>& log) const {
  std::vector<TokenSet> prepared;
  prepared.reserve(log.size());
  for (const auto& q : log) prepared.push_back(ngrams(emit(q), n_));
  return pairwise_prepared(prepared, [](const TokenSet& a, const TokenSet& b) { return jaccard_distance(a, b); });
}

MeasurePtr make_measure(const nlohmann::ordered_json& descriptor) {
  try {
    auto kind = descriptor.at("kind").get<std::string>();
    if (kind == "fragment") {
      RoleWeights weights = uniform_role_weights();
      if (descriptor.contains("weights")) {
        auto values = descriptor.at("weights").get<std::vector<double>>();
        if (values.size() != kRoleCount)
          fail(ErrorKind::InvalidWeights, "fragment measure needs " + std::to_string(kRoleCount) + " weights");
        std::copy(values.begin(), values.end(), weights.begin());
      }
      return std::make_shared<FragmentMeasure>(weights);
    }
    if (kind == "ngram") return std::make_shared<NgramMeasure>(descriptor.value("n", 3));
    fail(ErrorKind::UsageError, "unknown measure '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::UsageError, std::string("invalid measure descriptor: ") + e.what());
  }
}

double d_fragment(const QueryIR& a, const QueryIR& b, const RoleWeights& weights) {
  check_weights(weights.data(), weights.data() + weights.size());
  return weighted_distance(role_tokens(a), role_tokens(b), weights);
}

std::vector<std::string> ngrams(std::string_view text, int n) {
  if (n < 1) fail(ErrorKind::UsageError, "n-gram length must be at least 1");
  std::string norm = normalize_text(text);
  std::vector<std::string> grams;
  const auto len = static_cast<std::size_t>(n);
  if (norm.empty()) return grams;
  if (norm.size() < len) {
    grams.push_back(norm);
    return grams;
  }
  for (std::size_t i = 0; i + len <= norm.size(); ++i) grams.push_back(norm.substr(i, len));
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

double jaccard_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return 1.0 - jaccard_similarity(a, b);
}

double d_ngram(std::string_view a, std::string_view b, int n) {
  return jaccard_distance(ngrams(a, n), ngrams(b, n));
}

DissimilarityMatrix matrix(const std::vector<QueryIR>& log, const MeasurePtr& measure) {
  if (log.empty()) fail(ErrorKind::EmptyLog, "cannot build a dissimilarity matrix from an empty log");
  return {measure->pairwise(log), measure->name(), measure};
}

DissimilarityMatrix concat(const std::vector<DissimilarityMatrix>& matrices, const std::vector<double>& weights) {
  if (matrices.empty()) fail(ErrorKind::ShapeMismatch, "nothing to combine");
  if (weights.size() != matrices.size())
    fail(ErrorKind::InvalidWeights, "one weight per matrix is required");
  check_weights(weights.data(), weights.data() + weights.size());
  const auto n = matrices.front().size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    if (matrices[m].values.rows() != n || matrices[m].values.cols() != n)
      fail(ErrorKind::ShapeMismatch, "matrices have different sizes");
    out += weights[m] * matrices[m].values;
  }
  out.diagonal().setZero();
  if (matrices.size() == 1 && weights.front() == 1.0) return matrices.front();
  return {out, "concat", nullptr};
}

DissimilarityMatrix from_values(Eigen::MatrixXd values, std::string tag) {
  if (values.rows() != values.cols()) fail(ErrorKind::ShapeMismatch, "dissimilarity matrix must be square");
  if (asymmetry(values) > 1e-12) fail(ErrorKind::AsymmetricInput, "dissimilarity matrix is not symmetric");
  if (values.size() > 0 && (values.minCoeff() < 0 || values.diagonal().cwiseAbs().maxCoeff() > 1e-12))
    fail(ErrorKind::ShapeMismatch, "dissimilarity matrix needs non-negative entries and a zero diagonal");
  return {std::move(values), std::move(tag), nullptr};
}

}  // namespace qspace
