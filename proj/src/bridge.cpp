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

#include "qspace/bridge.hpp"

#include <numeric>

#include "qspace/error.hpp"

namespace qspace {
namespace {

// d log P / d theta for pi = softmax(theta): pi_k (g_k - sum_j pi_j g_j).
Eigen::VectorXd softmax_chain(std::span<const double> pi, const Eigen::VectorXd& grad_log) {
  Eigen::Map<const Eigen::VectorXd> p(pi.data(), static_cast<Eigen::Index>(pi.size()));
  double mean = p.dot(grad_log);
  return p.cwiseProduct(grad_log.array().matrix() - Eigen::VectorXd::Constant(p.size(), mean));
}

Eigen::VectorXd categorical_score(std::span<const double> pi, std::size_t index, const std::string& name) {
  if (!(pi[index] > 0)) fail(ErrorKind::ZeroProbability, name + " is zero");
  Eigen::VectorXd out = -Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
  out(static_cast<Eigen::Index>(index)) += 1.0;
  return out;
}

Eigen::VectorXd set_score(std::span<const double> pi, std::span<const std::size_t> members, const std::string& name) {
  auto sp = set_probability_gradient(pi, members);
  if (!(sp.value > 0)) fail(ErrorKind::ZeroProbability, "set probability of " + name + " is zero");
  return softmax_chain(pi, sp.gradient / sp.value);
}

}  // namespace

SetProbabilityGradient set_probability_gradient(std::span<const double> pi, std::span<const std::size_t> members) {
  const std::size_t m = members.size();
  const auto width = static_cast<Eigen::Index>(pi.size());
  if (m == 0) return {1.0, Eigen::VectorXd::Zero(width)};
  if (m > 20) fail(ErrorKind::UsageError, "set too large for exact permutation sums");
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  const std::size_t full = (std::size_t{1} << m) - 1;
  std::vector<double> f(full + 1, 0.0);
  std::vector<Eigen::VectorXd> df(full + 1, Eigen::VectorXd::Zero(width));
  std::vector<double> drawn(full + 1, 0.0);
  f[0] = 1.0;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    std::size_t low = static_cast<std::size_t>(__builtin_ctzll(mask));
    drawn[mask] = drawn[mask & (mask - 1)] + pi[members[low]];
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mask & (std::size_t{1} << k))) continue;
      std::size_t prev = mask ^ (std::size_t{1} << k);
      const auto x = static_cast<Eigen::Index>(members[k]);
      double p = pi[members[k]];
      double left = total - drawn[prev];
      if (!(left > 0)) continue;
      // term = f[prev] * p / left, left = sum(pi) - sum_{prev} pi
      f[mask] += f[prev] * p / left;
      Eigen::VectorXd dleft = Eigen::VectorXd::Ones(width);
      for (std::size_t j = 0; j < m; ++j)
        if (prev & (std::size_t{1} << j)) dleft(static_cast<Eigen::Index>(members[j])) = 0.0;
      df[mask] += df[prev] * (p / left) - dleft * (f[prev] * p / (left * left));
      df[mask](x) += f[prev] / left;
    }
  }
  return {f[full], df[full]};
}

std::vector<std::string> fisher_layout(const SelectFromModel& model) {
  std::vector<std::string> names;
  const auto& tables = model.schema.tables();
  for (const auto& t : tables) names.push_back("pi_tables:" + t.name);
  for (const auto& t : tables)
    for (const auto& c : t.columns) names.push_back("pi_columns:" + t.name + "." + c.name);
  for (int s = 1; s <= model.max_t; ++s) names.push_back("pi_T:" + std::to_string(s));
  for (const auto& t : tables)
    for (std::size_t s = 1; s <= t.columns.size(); ++s) names.push_back("pi_N:" + t.name + ":" + std::to_string(s));
  return names;
}

Eigen::VectorXd fisher_map(const SelectFromModel& model, const SFQuery& q) {
  validate(q, model.schema, model.max_t);
  const auto& tables = model.schema.tables();
  std::vector<Eigen::Index> column_offset(tables.size());
  Eigen::Index offset = static_cast<Eigen::Index>(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    column_offset[t] = offset;
    offset += static_cast<Eigen::Index>(tables[t].columns.size());
  }
  const Eigen::Index size_offset = offset;
  offset += model.max_t;
  std::vector<Eigen::Index> width_offset(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    width_offset[t] = offset;
    offset += static_cast<Eigen::Index>(tables[t].columns.size());
  }

  Eigen::VectorXd score = Eigen::VectorXd::Zero(offset);
  std::vector<std::size_t> chosen;
  for (const auto& [t, cols] : q.columns) chosen.push_back(t);
  score.head(static_cast<Eigen::Index>(tables.size())) = set_score(model.pi_tables, chosen, "pi_tables");
  score.segment(size_offset, model.max_t) =
      categorical_score(model.pi_t, chosen.size() - 1, "pi_T[" + std::to_string(chosen.size()) + "]");
  for (const auto& [t, cols] : q.columns) {
    const auto width = static_cast<Eigen::Index>(tables[t].columns.size());
    score.segment(column_offset[t], width) = set_score(model.pi_columns[t], cols, "pi_columns[" + tables[t].name + "]");
    score.segment(width_offset[t], width) = categorical_score(
        model.pi_n[t], cols.size() - 1, "pi_N[" + tables[t].name + "][" + std::to_string(cols.size()) + "]");
  }
  return score;
}

Eigen::MatrixXd fisher_matrix(const SelectFromModel& model, const std::vector<SFQuery>& queries) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(fisher_layout(model).size()));
  for (std::size_t i = 0; i < queries.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = fisher_map(model, queries[i]).transpose();
  return out;
}

KernelMatrix fisher_kernel(const SelectFromModel& model, const std::vector<SFQuery>& queries) {
  return KernelMatrix::gram_of(fisher_matrix(model, queries));
}

KernelMatrix posterior_kernel(const MixtureModel& mm, const std::vector<SFQuery>& queries) {
  Eigen::MatrixXd post(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(mm.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto p = mixture_posterior(mm, queries[i]);
    for (std::size_t c = 0; c < p.size(); ++c) post(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = p[c];
  }
  return KernelMatrix::gram_of(post);
}

}  // namespace qspace
