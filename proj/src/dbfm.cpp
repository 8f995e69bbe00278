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

#include "qspace/dbfm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qspace/error.hpp"
#include "qspace/linalg.hpp"
#include "qspace/parser.hpp"
#include "qspace/random.hpp"

namespace qspace {

Eigen::Index DbfmSpace::dim() const {
  if (const auto* p = std::get_if<Projection>(&compression)) return p->output_dim();
  if (const auto* c = std::get_if<PrototypeColumns>(&compression))
    return static_cast<Eigen::Index>(c->columns.size());
  return raw_dim();
}

namespace {

Eigen::VectorXd compress(const DbfmSpace& space, const Eigen::VectorXd& raw) {
  if (const auto* p = std::get_if<Projection>(&space.compression)) return pca_apply(*p, raw);
  if (const auto* c = std::get_if<PrototypeColumns>(&space.compression)) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(c->columns.size()));
    for (std::size_t k = 0; k < c->columns.size(); ++k) out(static_cast<Eigen::Index>(k)) = raw(c->columns[k]);
    return out;
  }
  return raw;
}

}  // namespace

Eigen::MatrixXd DbfmSpace::vectors() const {
  if (std::holds_alternative<std::monostate>(compression)) return raw;
  Eigen::MatrixXd out(raw.rows(), dim());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) out.row(i) = compress(*this, raw.row(i).transpose()).transpose();
  return out;
}

DbfmSpace dbfm_build(const std::vector<QueryIR>& log, const std::vector<DissimilarityMatrix>& matrices) {
  if (log.empty()) fail(ErrorKind::EmptyLog, "DBFM needs a non-empty reference log");
  if (matrices.empty()) fail(ErrorKind::ShapeMismatch, "DBFM needs at least one dissimilarity matrix");
  const auto n = static_cast<Eigen::Index>(log.size());
  DbfmSpace space;
  space.reference = log;
  space.raw.resize(n, n * static_cast<Eigen::Index>(matrices.size()));
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    const auto& values = matrices[m].values;
    if (values.rows() != n || values.cols() != n)
      fail(ErrorKind::ShapeMismatch, "matrix " + std::to_string(m) + " is " + std::to_string(values.rows()) + "x" +
                                         std::to_string(values.cols()) + ", log has " + std::to_string(n) +
                                         " queries");
    space.raw.middleCols(static_cast<Eigen::Index>(m) * n, n) = values;
    space.measures.push_back(matrices[m].source);
  }
  return space;
}

Eigen::VectorXd dbfm_raw_map(const DbfmSpace& space, const QueryIR& q) {
  const auto n = static_cast<Eigen::Index>(space.reference.size());
  Eigen::VectorXd out(space.raw_dim());
  for (std::size_t m = 0; m < space.measures.size(); ++m) {
    if (!space.measures[m])
      fail(ErrorKind::UsageError, "stacked matrix " + std::to_string(m) + " has no measure for out-of-sample mapping");
    out.segment(static_cast<Eigen::Index>(m) * n, n) = space.measures[m]->row(q, space.reference);
  }
  return out;
}

Eigen::VectorXd dbfm_map(const DbfmSpace& space, const QueryIR& q) { return compress(space, dbfm_raw_map(space, q)); }

DbfmSpace dbfm_compress_pca(const DbfmSpace& space, Eigen::Index target_dim) {
  DbfmSpace out = space;
  out.compression = pca_fit(space.raw, target_dim);
  return out;
}

std::vector<Eigen::Index> kmedoid_columns(const Eigen::MatrixXd& data, Eigen::Index k, std::uint64_t seed) {
  const Eigen::Index r = data.cols();
  if (k < 1) fail(ErrorKind::UsageError, "k must be at least 1");
  if (k > r) fail(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(r) + " columns");

  Eigen::MatrixXd dist(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    dist(i, i) = 0;
    for (Eigen::Index j = i + 1; j < r; ++j) dist(i, j) = dist(j, i) = (data.col(i) - data.col(j)).norm();
  }

  // Farthest-first seeding.
  Rng rng(seed);
  std::vector<Eigen::Index> medoids{static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(r)))};
  std::vector<bool> chosen(static_cast<std::size_t>(r), false);
  chosen[static_cast<std::size_t>(medoids.front())] = true;
  Eigen::VectorXd nearest = dist.col(medoids.front());
  while (static_cast<Eigen::Index>(medoids.size()) < k) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < r; ++j)
      if (!chosen[static_cast<std::size_t>(j)] && (best < 0 || nearest(j) > nearest(best))) best = j;
    medoids.push_back(best);
    chosen[static_cast<std::size_t>(best)] = true;
    nearest = nearest.cwiseMin(dist.col(best));
  }

  // Alternate assignment and medoid update until stable.
  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(r));
  for (int iter = 0; iter < 100; ++iter) {
    for (Eigen::Index j = 0; j < r; ++j) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < medoids.size(); ++c)
        if (dist(j, medoids[c]) < dist(j, medoids[best])) best = c;
      assignment[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(best);
    }
    bool changed = false;
    for (std::size_t c = 0; c < medoids.size(); ++c) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index j = 0; j < r; ++j)
        if (assignment[static_cast<std::size_t>(j)] == static_cast<Eigen::Index>(c)) members.push_back(j);
      if (members.empty()) continue;
      Eigen::Index best = medoids[c];
      double best_cost = std::numeric_limits<double>::infinity();
      for (auto cand : members) {
        double cost = 0;
        for (auto other : members) cost += dist(cand, other);
        if (cost < best_cost - 1e-12 || (std::abs(cost - best_cost) <= 1e-12 && cand < best)) {
          best_cost = cost;
          best = cand;
        }
      }
      // Keep the current medoid unless the candidate is strictly cheaper.
      double current_cost = 0;
      for (auto other : members) current_cost += dist(medoids[c], other);
      if (best != medoids[c] && best_cost < current_cost - 1e-12) {
        medoids[c] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  std::sort(medoids.begin(), medoids.end());
  return medoids;
}

DbfmSpace prototype_select(const DbfmSpace& space, Eigen::Index k, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(space.reference.size());
  if (k > n) fail(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds the " + std::to_string(n) +
                                            " reference queries");
  DbfmSpace out = space;
  out.compression = PrototypeColumns{kmedoid_columns(space.raw, k, seed)};
  return out;
}

MdsResult mds(const Eigen::MatrixXd& d, Eigen::Index target_dim) {
  const Eigen::Index n = d.rows();
  if (d.cols() != n) fail(ErrorKind::ShapeMismatch, "MDS needs a square matrix");
  if (target_dim < 1 || target_dim > n - 1)
    fail(ErrorKind::DimensionTooLarge, "target dimension " + std::to_string(target_dim) + " outside [1, " +
                                           std::to_string(n - 1) + "]");
  Eigen::MatrixXd b = -0.5 * double_center(d.array().square().matrix());
  auto eig = symmetric_eigen(b);
  MdsResult out;
  out.eigenvalues = eig.values;
  out.coordinates.resize(n, target_dim);
  for (Eigen::Index k = 0; k < target_dim; ++k)
    out.coordinates.col(k) = eig.vectors.col(k) * std::sqrt(std::max(0.0, eig.values(k)));
  double largest = eig.values(0);
  double smallest = eig.values(n - 1);
  out.distortion = (smallest < 0 && largest > 0) ? -smallest / largest : 0.0;
  return out;
}

MdsResult mds(const DissimilarityMatrix& matrix, Eigen::Index target_dim) { return mds(matrix.values, target_dim); }

nlohmann::ordered_json to_json(const DbfmSpace& space, const Schema& schema) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["schema"] = schema.to_json();
  doc["reference"] = json::array();
  for (const auto& q : space.reference) doc["reference"].push_back(emit(q));
  doc["measures"] = json::array();
  for (const auto& m : space.measures) doc["measures"].push_back(m ? m->descriptor() : json(nullptr));
  json compression;
  if (const auto* p = std::get_if<Projection>(&space.compression)) {
    compression["kind"] = "pca";
    compression["mean"] = std::vector<double>(p->mean.data(), p->mean.data() + p->mean.size());
    compression["eigenvalues"] = std::vector<double>(p->eigenvalues.data(), p->eigenvalues.data() + p->eigenvalues.size());
    compression["total_variance"] = p->total_variance;
    compression["components"] = json::array();
    for (Eigen::Index k = 0; k < p->components.cols(); ++k) {
      Eigen::VectorXd col = p->components.col(k);
      compression["components"].push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
  } else if (const auto* c = std::get_if<PrototypeColumns>(&space.compression)) {
    compression["kind"] = "prototypes";
    compression["columns"] = c->columns;
  } else {
    compression["kind"] = "none";
  }
  doc["compression"] = std::move(compression);
  return doc;
}

DbfmSpace dbfm_from_json(const nlohmann::ordered_json& doc) {
  try {
    Schema schema = Schema::from_json(doc.at("schema"));
    std::vector<QueryIR> reference;
    for (const auto& sql : doc.at("reference")) reference.push_back(parse(sql.get<std::string>(), schema));
    std::vector<DissimilarityMatrix> matrices;
    for (const auto& descriptor : doc.at("measures")) {
      if (descriptor.is_null()) fail(ErrorKind::UsageError, "stored DBFM space lacks a measure descriptor");
      matrices.push_back(matrix(reference, make_measure(descriptor)));
    }
    DbfmSpace space = dbfm_build(reference, matrices);
    const auto& compression = doc.at("compression");
    auto kind = compression.at("kind").get<std::string>();
    if (kind == "pca") {
      Projection p;
      auto mean = compression.at("mean").get<std::vector<double>>();
      auto values = compression.at("eigenvalues").get<std::vector<double>>();
      p.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      p.eigenvalues = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
      p.total_variance = compression.at("total_variance").get<double>();
      const auto& comps = compression.at("components");
      p.components.resize(p.mean.size(), static_cast<Eigen::Index>(comps.size()));
      for (std::size_t k = 0; k < comps.size(); ++k) {
        auto col = comps[k].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(col.size()) != p.mean.size())
          fail(ErrorKind::ShapeMismatch, "stored PCA component has the wrong length");
        p.components.col(static_cast<Eigen::Index>(k)) =
            Eigen::Map<Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(col.size()));
      }
      space.compression = std::move(p);
    } else if (kind == "prototypes") {
      space.compression = PrototypeColumns{compression.at("columns").get<std::vector<Eigen::Index>>()};
    } else if (kind != "none") {
      fail(ErrorKind::UsageError, "unknown compression '" + kind + "'");
    }
    return space;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::UsageError, std::string("invalid DBFM space JSON: ") + e.what());
  }
}

}  // namespace qspace
