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

#include "qspace/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "qspace/error.hpp"

namespace qspace {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& values) {
  double top = kNegInf;
  for (double v : values) top = std::max(top, v);
  if (top == kNegInf) return kNegInf;
  double sum = 0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

std::vector<double> component_terms(const MixtureModel& mm, const SFQuery& q) {
  std::vector<double> terms;
  terms.reserve(mm.size());
  for (std::size_t c = 0; c < mm.size(); ++c) {
    double w = mm.weights[c];
    terms.push_back(w > 0 ? std::log(w) + sf_logp(mm.components[c], q) : kNegInf);
  }
  return terms;
}

// Weighted sum of log terms, skipping zero weights so 0 * -inf never occurs.
template <typename Fn>
double weighted_objective(const std::vector<SFQuery>& log, std::span<const double> weights, Fn&& term) {
  double total = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (weights[i] == 0) continue;
    double value = term(log[i]);
    if (value == kNegInf) return kNegInf;
    total += weights[i] * value;
  }
  return total;
}

std::vector<std::size_t> table_list(const SFQuery& q) {
  std::vector<std::size_t> out;
  for (const auto& [t, cols] : q.columns) out.push_back(t);
  return out;
}

// Moves each block of `current` toward the candidate by the largest step in
// 1, 1/2, 1/4, ... that does not lower the block's weighted expected
// complete-data log-likelihood; keeps the old block when no step qualifies.
SelectFromModel guarded_update(const SelectFromModel& current, const SelectFromModel& candidate,
                               const std::vector<SFQuery>& log, std::span<const double> weights) {
  SelectFromModel out = candidate;
  auto keep_better = [&](std::vector<double>& target, const std::vector<double>& old_value, auto&& score) {
    const double baseline = score(old_value);
    const std::vector<double> proposal = target;
    double step = 1.0;
    for (int halving = 0; halving <= 30; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < target.size(); ++i) target[i] = (1.0 - step) * old_value[i] + step * proposal[i];
      if (score(target) >= baseline) return;
    }
    target = old_value;
  };
  keep_better(out.pi_t, current.pi_t, [&](const std::vector<double>& pi) {
    return weighted_objective(log, weights, [&](const SFQuery& q) { return std::log(pi[q.table_count() - 1]); });
  });
  keep_better(out.pi_tables, current.pi_tables, [&](const std::vector<double>& pi) {
    return weighted_objective(log, weights, [&](const SFQuery& q) {
      auto tables = table_list(q);
      return std::log(set_probability(pi, tables));
    });
  });
  std::vector<double> masked(weights.begin(), weights.end());
  for (std::size_t t = 0; t < current.schema.table_count(); ++t) {
    for (std::size_t i = 0; i < log.size(); ++i) masked[i] = log[i].columns.contains(t) ? weights[i] : 0.0;
    keep_better(out.pi_n[t], current.pi_n[t], [&](const std::vector<double>& pi) {
      return weighted_objective(log, masked, [&](const SFQuery& q) { return std::log(pi[q.columns.at(t).size() - 1]); });
    });
    keep_better(out.pi_columns[t], current.pi_columns[t], [&](const std::vector<double>& pi) {
      return weighted_objective(log, masked, [&](const SFQuery& q) { return std::log(set_probability(pi, q.columns.at(t))); });
    });
  }
  return out;
}

}  // namespace

void MixtureModel::check() const {
  if (components.empty()) fail(ErrorKind::DegenerateModel, "mixture has no components");
  if (weights.size() != components.size()) fail(ErrorKind::DegenerateModel, "one weight per component is required");
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0)) fail(ErrorKind::DegenerateModel, "mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::DegenerateModel, "mixture weights must sum to 1");
  for (const auto& c : components) {
    c.check();
    if (!(c.schema == components.front().schema) || c.max_t != components.front().max_t)
      fail(ErrorKind::DegenerateModel, "mixture components must share schema and max_t");
  }
}

double mixture_logp(const MixtureModel& mm, const SFQuery& q) { return log_sum_exp(component_terms(mm, q)); }

double mixture_loglik(const MixtureModel& mm, const std::vector<SFQuery>& log) {
  double total = 0;
  for (const auto& q : log) total += mixture_logp(mm, q);
  return total;
}

SFQuery mixture_sample(const MixtureModel& mm, Rng& rng) {
  auto c = rng.categorical(mm.weights);
  if (c == mm.weights.size()) fail(ErrorKind::DegenerateModel, "mixture weights have no mass");
  return sf_sample(mm.components[c], rng);
}

std::vector<double> mixture_posterior(const MixtureModel& mm, const SFQuery& q) {
  auto terms = component_terms(mm, q);
  double norm = log_sum_exp(terms);
  if (norm == kNegInf) fail(ErrorKind::ZeroProbability, "every mixture component assigns the query zero probability");
  std::vector<double> out;
  out.reserve(terms.size());
  for (double t : terms) out.push_back(std::exp(t - norm));
  return out;
}

EmResult mixture_fit_em(const std::vector<SFQuery>& log, const Schema& schema, const EmOptions& options) {
  if (log.empty()) fail(ErrorKind::EmptyLog, "cannot fit a mixture to an empty log");
  if (options.components < 1) fail(ErrorKind::UsageError, "the mixture needs at least one component");
  const auto n = log.size();
  const auto classes = static_cast<std::size_t>(options.components);

  // resp[c][i]
  std::vector<std::vector<double>> resp(classes, std::vector<double>(n));
  Rng rng(options.seed);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0;
    for (std::size_t c = 0; c < classes; ++c) total += resp[c][i] = 1.0 - rng.uniform();
    for (std::size_t c = 0; c < classes; ++c) resp[c][i] /= total;
  }

  auto m_step = [&](const MixtureModel* previous) {
    MixtureModel mm;
    for (std::size_t c = 0; c < classes; ++c) {
      double mass = 0;
      for (double r : resp[c]) mass += r;
      mm.weights.push_back(mass / static_cast<double>(n));
      auto candidate = sf_fit_weighted(log, resp[c], schema, options.max_t, options.alpha);
      mm.components.push_back(previous ? guarded_update(previous->components[c], candidate, log, resp[c])
                                       : std::move(candidate));
    }
    return mm;
  };

  EmResult result;
  result.model = m_step(nullptr);
  result.loglik_trace.push_back(mixture_loglik(result.model, log));
  for (int iter = 0; iter < options.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      auto terms = component_terms(result.model, log[i]);
      double norm = log_sum_exp(terms);
      for (std::size_t c = 0; c < classes; ++c)
        resp[c][i] = norm == kNegInf ? 1.0 / static_cast<double>(classes) : std::exp(terms[c] - norm);
    }
    result.model = m_step(&result.model);
    double loglik = mixture_loglik(result.model, log);
    double previous = result.loglik_trace.back();
    result.loglik_trace.push_back(loglik);
    result.iterations = iter + 1;
    if (loglik - previous < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RecommendResult recommend(const LogDensity& logp, const Schema& schema, int max_t, const Constraint& constraint,
                          int topk) {
  if (topk < 1) fail(ErrorKind::UsageError, "topk must be at least 1");
  std::set<std::size_t> required_tables;
  std::map<std::size_t, std::set<std::size_t>> required_columns;
  for (const auto& name : constraint.tables) {
    auto t = schema.table_index(to_lower(name));
    if (!t) fail(ErrorKind::UnsatisfiableConstraint, "unknown table '" + name + "'");
    required_tables.insert(*t);
  }
  for (const auto& ref : constraint.columns) {
    auto t = schema.table_index(to_lower(ref.table));
    auto c = t ? schema.column_index(*t, to_lower(ref.column)) : std::nullopt;
    if (!c) fail(ErrorKind::UnsatisfiableConstraint, "unknown column '" + ref.str() + "'");
    required_tables.insert(*t);
    required_columns[*t].insert(*c);
  }
  if (static_cast<int>(required_tables.size()) > max_t)
    fail(ErrorKind::UnsatisfiableConstraint, "constraint needs " + std::to_string(required_tables.size()) +
                                                 " tables, max is " + std::to_string(max_t));

  std::vector<Recommendation> matches;
  std::vector<double> logs;
  for (auto& q : enumerate_sfqueries(schema, max_t)) {
    bool ok = std::all_of(required_tables.begin(), required_tables.end(), [&](auto t) { return q.columns.contains(t); });
    for (const auto& [t, cols] : required_columns) {
      if (!ok) break;
      const auto& have = q.columns.at(t);
      ok = std::includes(have.begin(), have.end(), cols.begin(), cols.end());
    }
    if (!ok) continue;
    logs.push_back(logp(q));
    matches.push_back({q, to_sql(q, schema), 0.0});
  }

  RecommendResult result;
  double norm = log_sum_exp(logs);
  if (norm == kNegInf) {
    result.warning = "every completion of the constraint has zero probability";
    return result;
  }
  for (std::size_t i = 0; i < matches.size(); ++i) matches[i].probability = std::exp(logs[i] - norm);
  std::sort(matches.begin(), matches.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.sql < b.sql;
  });
  if (matches.size() > static_cast<std::size_t>(topk)) matches.resize(static_cast<std::size_t>(topk));
  result.items = std::move(matches);
  return result;
}

RecommendResult recommend(const SelectFromModel& model, const Constraint& constraint, int topk) {
  return recommend([&](const SFQuery& q) { return sf_logp(model, q); }, model.schema, model.max_t, constraint, topk);
}

RecommendResult recommend(const MixtureModel& mm, const Constraint& constraint, int topk) {
  mm.check();
  const auto& first = mm.components.front();
  return recommend([&](const SFQuery& q) { return mixture_logp(mm, q); }, first.schema, first.max_t, constraint, topk);
}

}  // namespace qspace
