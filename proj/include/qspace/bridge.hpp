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

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qspace/bayes.hpp"
#include "qspace/kernel.hpp"
#include "qspace/mixture.hpp"

namespace qspace {

// Kernels and explicit feature maps derived from fitted generative models.

/// K_ij = <posterior(q_i), posterior(q_j)>. This is the probability-product
/// style kernel the library implements: class posteriors of the mixture
/// stand in for the integral form. Certified by construction.
KernelMatrix posterior_kernel(const MixtureModel& mm, const std::vector<SFQuery>& queries);

/// Score vector: gradient of sf_logp with respect to the logits of every
/// probability vector (pi = softmax(theta), evaluated at theta = log pi).
/// Each block sums to zero. Layout: pi_tables, pi_columns per table, pi_T,
/// pi_N per table. Throws ZeroProbability naming the vanishing parameter.
Eigen::VectorXd fisher_map(const SelectFromModel& model, const SFQuery& q);
std::vector<std::string> fisher_layout(const SelectFromModel& model);

/// Gram matrix of score vectors under the identity metric (no Fisher
/// information whitening). Certified by construction.
KernelMatrix fisher_kernel(const SelectFromModel& model, const std::vector<SFQuery>& queries);
Eigen::MatrixXd fisher_matrix(const SelectFromModel& model, const std::vector<SFQuery>& queries);

/// P(set) for sequential draws without replacement, with its gradient with
/// respect to every entry of `pi`.
struct SetProbabilityGradient {
  double value = 0;
  Eigen::VectorXd gradient;
};
SetProbabilityGradient set_probability_gradient(std::span<const double> pi, std::span<const std::size_t> members);

}  // namespace qspace
