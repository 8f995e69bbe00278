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

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "qspace/bayes.hpp"

namespace qspace::testing {

/// Every probability vector of a model in the order pi_tables, pi_columns
/// per table, pi_T, pi_N per table.
inline std::vector<std::vector<double>*> model_blocks(SelectFromModel& m) {
  std::vector<std::vector<double>*> blocks = {&m.pi_tables};
  for (auto& v : m.pi_columns) blocks.push_back(&v);
  blocks.push_back(&m.pi_t);
  for (auto& v : m.pi_n) blocks.push_back(&v);
  return blocks;
}

/// Replaces block entries by softmax(log(pi) + h e_k).
inline void tilt(std::vector<double>& pi, std::size_t k, double h) {
  double total = 0;
  for (std::size_t j = 0; j < pi.size(); ++j) total += pi[j] * (j == k ? std::exp(h) : 1.0);
  for (std::size_t j = 0; j < pi.size(); ++j) pi[j] = pi[j] * (j == k ? std::exp(h) : 1.0) / total;
}

/// Central differences of sf_logp with respect to each block's log-parameters.
inline Eigen::VectorXd finite_difference_score(const SelectFromModel& model, const SFQuery& q, double step = 1e-5) {
  std::vector<double> out;
  SelectFromModel probe = model;
  auto count = model_blocks(probe).size();
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t size = model_blocks(probe)[b]->size();
    for (std::size_t k = 0; k < size; ++k) {
      SelectFromModel up = model, down = model;
      tilt(*model_blocks(up)[b], k, step);
      tilt(*model_blocks(down)[b], k, -step);
      out.push_back((sf_logp(up, q) - sf_logp(down, q)) / (2 * step));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace qspace::testing
