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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspace/bayes.hpp"

namespace qspace {

/// Latent-class mixture of SELECT-FROM components sharing one schema.
struct MixtureModel {
  std::vector<double> weights;
  std::vector<SelectFromModel> components;

  std::size_t size() const noexcept { return components.size(); }
  void check() const;
};

struct EmOptions {
  int components = 2;
  int max_t = 1;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  int max_iter = 200;
  double tol = 1e-7;
};

struct EmResult {
  MixtureModel model;
  std::vector<double> loglik_trace;  // observed-data log-likelihood after each M-step
  int iterations = 0;
  bool converged = false;
};

/// EM from seeded random responsibilities. Each M-step refits components from
/// responsibility-weighted smoothed counts; since counts are not the exact
/// maximizer of a without-replacement likelihood, every parameter block keeps
/// its previous value when the count update would lower that block's share
/// of the expected complete-data log-likelihood. The observed log-likelihood
/// is therefore non-decreasing.
EmResult mixture_fit_em(const std::vector<SFQuery>& log, const Schema& schema, const EmOptions& options);

/// Sum over queries of log sum_c pi_c p(q | theta_c).
double mixture_loglik(const MixtureModel& mm, const std::vector<SFQuery>& log);
/// log sum_c pi_c p(q | theta_c); -infinity if every component vanishes.
double mixture_logp(const MixtureModel& mm, const SFQuery& q);
/// Throws ZeroProbability when every component assigns q zero mass.
std::vector<double> mixture_posterior(const MixtureModel& mm, const SFQuery& q);

/// Draws a class from the weights, then a query from that component.
SFQuery mixture_sample(const MixtureModel& mm, Rng& rng);

/// Required tables and (table, column) pairs; a required column implies its
/// table.
struct Constraint {
  std::vector<std::string> tables;
  std::vector<ColumnRef> columns;
};

struct Recommendation {
  SFQuery query;
  std::string sql;
  double probability = 0;  // renormalized over the enumerated completions
};

struct RecommendResult {
  std::vector<Recommendation> items;
  std::optional<std::string> warning;
};

using LogDensity = std::function<double(const SFQuery&)>;

/// Ranks every completion of `constraint` by probability, ties by SQL text.
/// Throws UnsatisfiableConstraint. All-zero mass yields an empty result with
/// a warning.
RecommendResult recommend(const LogDensity& logp, const Schema& schema, int max_t, const Constraint& constraint,
                          int topk);
RecommendResult recommend(const SelectFromModel& model, const Constraint& constraint, int topk);
RecommendResult recommend(const MixtureModel& mm, const Constraint& constraint, int topk);

nlohmann::ordered_json to_json(const MixtureModel& mm);
MixtureModel mixture_model_from_json(const nlohmann::ordered_json& doc);

}  // namespace qspace
