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

#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "qspace/bayes.hpp"
#include "qspace/bridge.hpp"
#include "qspace/csv.hpp"
#include "qspace/dbfm.hpp"
#include "qspace/density.hpp"
#include "qspace/dissim.hpp"
#include "qspace/encode.hpp"
#include "qspace/kernel.hpp"
#include "qspace/learners.hpp"
#include "qspace/log_io.hpp"
#include "qspace/mixture.hpp"
#include "qspace/pca.hpp"

namespace qspace::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Records inputs and outputs of one command and writes its manifest.
class Run {
 public:
  Run(std::string command, std::string out_dir) : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

  void record_flags(const CLI::App& app) {
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_name();
      if (opt->count() == 0 || name == "--out" || name == "--help") continue;
      const auto& results = opt->results();
      flags_[name] = results.size() == 1 ? json(results.front()) : json(results);
    }
  }

  void set_seed(std::uint64_t seed) { seed_ = seed; }

  std::string input(const std::string& path) {
    std::string content = read_file(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(content)}});
    return content;
  }

  void write(const std::string& name, const std::string& content) {
    if (out_dir_.empty()) fail(ErrorKind::UsageError, "--out is required");
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create " + out_dir_ + ": " + ec.message());
    write_file_atomic((fs::path(out_dir_) / name).string(), content);
    outputs_.push_back(name);
  }

  void finish() {
    json manifest;
    manifest["command"] = command_;
    manifest["flags"] = flags_;
    manifest["seed"] = seed_;
    manifest["inputs"] = inputs_;
    manifest["outputs"] = outputs_;
    manifest["tool_version"] = std::string(kToolVersion);
    outputs_.push_back("manifest.json");
    write("manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string out_dir_;
  json flags_ = json::object();
  std::uint64_t seed_ = 0;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
};

struct Common {
  std::string log;
  std::string schema;
  std::string out;
  std::string format = "auto";
  std::uint64_t seed = 0;
};

struct Inputs {
  Schema schema;
  std::vector<LogRecord> records;
  std::vector<QueryIR> queries;
  std::vector<std::size_t> indices;
};

LogFormat log_format(const std::string& name) {
  if (name == "auto") return LogFormat::Auto;
  if (name == "plain") return LogFormat::Plain;
  if (name == "tsv") return LogFormat::Tsv;
  fail(ErrorKind::UsageError, "unknown log format '" + name + "'");
}

Schema load_schema(Run& run, const std::string& path) {
  std::string text = run.input(path);
  try {
    return Schema::from_json(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, path + ": " + e.what());
  }
}

Inputs load_inputs(Run& run, const Common& c, std::optional<Schema> schema = std::nullopt) {
  if (c.log.empty()) fail(ErrorKind::UsageError, "--log is required");
  Inputs in;
  if (!c.schema.empty()) {
    Schema given = load_schema(run, c.schema);
    if (schema && !(given == *schema)) fail(ErrorKind::SchemaError, "the schema file does not match the model schema");
    in.schema = std::move(given);
  } else if (schema) {
    in.schema = *schema;
  } else {
    fail(ErrorKind::UsageError, "--schema is required");
  }
  std::istringstream text(run.input(c.log));
  in.records = read_log(text, in.schema, log_format(c.format));
  in.queries = parsed_queries(in.records);
  in.indices = parsed_indices(in.records);
  return in;
}

std::string index_map_csv(const std::vector<std::size_t>& indices) {
  std::string out = "row,index\n";
  for (std::size_t r = 0; r < indices.size(); ++r) out += std::to_string(r) + "," + std::to_string(indices[r]) + "\n";
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header = {}) {
  std::ostringstream out;
  if (header.empty())
    write_matrix_csv(out, m);
  else
    write_matrix_csv(out, m, header);
  return out.str();
}

double parse_real(const std::string& text, const std::string& what) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    fail(ErrorKind::UsageError, what + ": '" + text + "' is not a number");
  return value;
}

std::optional<double> parse_auto_real(const std::string& text, const std::string& what) {
  if (text == "auto" || text == "AUTO") return std::nullopt;
  return parse_real(text, what);
}

std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& cell : split_csv_line(text)) out.push_back(parse_real(cell, what));
  return out;
}

// ---------------------------------------------------------------------------
// Shared helpers for measures and kernels.

struct MeasureOptions {
  std::vector<std::string> measures{"fragment"};
  std::vector<double> weights;
  std::string role_weights;
  int ngram = 3;
};

std::vector<MeasurePtr> make_measures(const MeasureOptions& o) {
  std::vector<MeasurePtr> out;
  for (const auto& name : o.measures) {
    if (name == "fragment") {
      RoleWeights w = uniform_role_weights();
      if (!o.role_weights.empty()) {
        auto values = parse_real_list(o.role_weights, "--role-weights");
        if (values.size() != kRoleCount) fail(ErrorKind::InvalidWeights, "--role-weights needs six values");
        std::copy(values.begin(), values.end(), w.begin());
      }
      out.push_back(std::make_shared<FragmentMeasure>(w));
    } else if (name == "ngram") {
      if (o.ngram < 1) fail(ErrorKind::UsageError, "--ngram must be at least 1");
      out.push_back(std::make_shared<NgramMeasure>(o.ngram));
    } else {
      fail(ErrorKind::UsageError, "unknown measure '" + name + "'");
    }
  }
  return out;
}

std::vector<DissimilarityMatrix> build_matrices(const std::vector<QueryIR>& log, const std::vector<MeasurePtr>& measures) {
  std::vector<DissimilarityMatrix> out;
  for (const auto& m : measures) out.push_back(matrix(log, m));
  return out;
}

DissimilarityMatrix combined_matrix(const std::vector<QueryIR>& log, const MeasureOptions& o) {
  auto matrices = build_matrices(log, make_measures(o));
  if (matrices.size() == 1 && o.weights.empty()) return matrices.front();
  std::vector<double> weights = o.weights;
  if (weights.empty()) weights.assign(matrices.size(), 1.0 / static_cast<double>(matrices.size()));
  return concat(matrices, weights);
}

void add_measure_options(CLI::App* sub, MeasureOptions& o) {
  sub->add_option("--measure", o.measures, "fragment | ngram (repeatable)")->capture_default_str();
  sub->add_option("--weights", o.weights, "combination weights, one per measure");
  sub->add_option("--role-weights", o.role_weights, "six comma-separated fragment role weights");
  sub->add_option("--ngram", o.ngram, "character n-gram length")->capture_default_str();
}

// Gaussian kernel of a dissimilarity matrix, clipped when it fails the
// Mercer check. A zero median falls back to sigma = 1 when allowed.
KernelMatrix corrected_gaussian(const DissimilarityMatrix& d, std::optional<double> sigma, bool fallback) {
  KernelMatrix raw;
  try {
    raw = gaussian_from_dissim(d, sigma);
  } catch (const Error& e) {
    if (!fallback || e.kind() != ErrorKind::DegenerateScale) throw;
    raw = gaussian_from_dissim(d, 1.0);
  }
  if (mercer_check(raw).psd) return certify(raw);
  return spectral_clip(raw);
}

json mercer_json(const KernelMatrix& k) {
  MercerReport r = mercer_check(k);
  json doc;
  doc["n"] = k.size();
  doc["psd"] = r.psd;
  doc["min_eigenvalue"] = r.min_eigenvalue;
  doc["certified"] = k.psd_certified();
  return doc;
}

KernelMatrix load_kernel(Run& run, const std::string& path) {
  std::istringstream in(run.input(path));
  return KernelMatrix(read_matrix_csv(in));
}

Eigen::MatrixXd load_matrix(Run& run, const std::string& path) {
  std::istringstream in(run.input(path));
  return read_matrix_csv(in);
}

// ---------------------------------------------------------------------------
// Generative-model helpers.

struct SfLog {
  std::vector<SFQuery> queries;
  std::vector<std::size_t> indices;
};

SfLog select_from_log(const Inputs& in) {
  SfLog out;
  for (const auto& r : in.records) {
    if (!r.ir) continue;
    if (auto q = to_sfquery(*r.ir, in.schema)) {
      out.queries.push_back(std::move(*q));
      out.indices.push_back(r.index);
    }
  }
  return out;
}

MixtureModel load_model(Run& run, const std::string& path) {
  if (path.empty()) fail(ErrorKind::UsageError, "--model is required");
  json doc;
  try {
    doc = json::parse(run.input(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::IoError, path + ": " + e.what());
  }
  const std::string kind = doc.value("kind", "");
  if (kind == "select_from") return MixtureModel{{1.0}, {select_from_model_from_json(doc)}};
  if (kind == "mixture") return mixture_model_from_json(doc);
  fail(ErrorKind::DegenerateModel, path + ": unknown model kind '" + kind + "'");
}

std::string probability_matrix_csv(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& indices) {
  std::string out = "index";
  if (!rows.empty())
    for (std::size_t c = 0; c < rows.front().size(); ++c) out += ",p" + std::to_string(c);
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += std::to_string(indices[i]);
    for (double p : rows[i]) out += "," + format_real(p);
    out += "\n";
  }
  return out;
}

std::string labels_csv(const std::vector<int>& labels, const std::vector<std::size_t>& indices) {
  std::string out = "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(indices[i]) + "," + std::to_string(labels[i]) + "\n";
  return out;
}

std::vector<std::size_t> identity_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

struct FitOptions {
  int components = 1;
  int max_t = 0;  // 0 selects the schema default
  double alpha = 1.0;
  int max_iter = 200;
  double tol = 1e-7;
};

void add_fit_options(CLI::App* sub, FitOptions& o) {
  sub->add_option("--components", o.components, "mixture components")->capture_default_str();
  sub->add_option("--max-t", o.max_t, "largest table-set size (default min(4, tables))");
  sub->add_option("--alpha", o.alpha, "additive smoothing")->capture_default_str();
  sub->add_option("--max-iter", o.max_iter, "EM iteration cap")->capture_default_str();
  sub->add_option("--tol", o.tol, "EM log-likelihood tolerance")->capture_default_str();
}

EmResult fit_mixture(const SfLog& log, const Schema& schema, const FitOptions& o, std::uint64_t seed) {
  EmOptions em;
  em.components = o.components;
  em.max_t = o.max_t > 0 ? o.max_t : default_max_t(schema);
  em.alpha = o.alpha;
  em.seed = seed;
  em.max_iter = o.max_iter;
  em.tol = o.tol;
  if (o.components < 1) fail(ErrorKind::UsageError, "--components must be at least 1");
  if (o.components == 1) {
    EmResult r;
    r.model = MixtureModel{{1.0}, {sf_fit(log.queries, schema, em.max_t, em.alpha)}};
    r.loglik_trace = {mixture_loglik(r.model, log.queries)};
    r.converged = true;
    return r;
  }
  return mixture_fit_em(log.queries, schema, em);
}

json model_json(const MixtureModel& mm) { return mm.size() == 1 ? to_json(mm.components.front()) : to_json(mm); }

json trace_json(const EmResult& r) {
  json doc;
  doc["loglik_trace"] = r.loglik_trace;
  doc["iterations"] = r.iterations;
  doc["converged"] = r.converged;
  return doc;
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_parse(Run& run, const Common& c) {
  Inputs in = load_inputs(run, c);
  std::string lines;
  std::map<std::string, std::size_t> tallies;
  std::size_t failed = 0;
  for (const auto& r : in.records) {
    json row;
    row["index"] = r.index;
    row["line"] = r.line;
    row["sql"] = r.sql;
    if (r.ir) {
      row["status"] = "ok";
      row["canonical"] = emit(*r.ir);
      row["ir"] = to_json(*r.ir);
    } else {
      ++failed;
      row["status"] = "error";
      row["error"] = {{"kind", std::string(to_string(r.failure->kind))}, {"message", r.failure->message}};
      ++tallies[std::string(to_string(r.failure->kind))];
    }
    if (!r.metadata.empty()) row["metadata"] = r.metadata;
    lines += row.dump() + "\n";
  }
  json summary;
  summary["records"] = in.records.size();
  summary["parsed"] = in.records.size() - failed;
  summary["failed"] = failed;
  summary["errors"] = tallies;
  run.write("ir.jsonl", lines);
  run.write("summary.json", summary.dump(2) + "\n");
  run.finish();
  return failed == 0 ? 0 : 2;
}

int cmd_encode(Run& run, const Common& c, int pca_dim) {
  Inputs in = load_inputs(run, c);
  auto space = build_space(in.queries, in.schema);
  std::vector<FeatureVector> vectors;
  for (const auto& q : in.queries) vectors.push_back(encode(q, space));
  Eigen::MatrixXd dense = dense_matrix(vectors);
  run.write("vectors.csv", matrix_csv(dense, space->slot_names()));
  run.write("space.json", space->to_json().dump(2) + "\n");
  if (pca_dim > 0) {
    Projection p = pca_fit(dense, pca_dim);
    std::vector<std::string> header;
    for (int k = 0; k < pca_dim; ++k) header.push_back("pc" + std::to_string(k + 1));
    run.write("pca.csv", matrix_csv(pca_apply_rows(p, dense), header));
    json info;
    info["eigenvalues"] = std::vector<double>(p.eigenvalues.data(), p.eigenvalues.data() + p.eigenvalues.size());
    info["total_variance"] = p.total_variance;
    run.write("pca.json", info.dump(2) + "\n");
  }
  run.write("index_map.csv", index_map_csv(in.indices));
  run.finish();
  return 0;
}

int cmd_dissim(Run& run, const Common& c, const MeasureOptions& mo) {
  Inputs in = load_inputs(run, c);
  DissimilarityMatrix d = combined_matrix(in.queries, mo);
  run.write("dissim.csv", matrix_csv(d.values));
  run.write("index_map.csv", index_map_csv(in.indices));
  run.finish();
  return 0;
}

int cmd_dbfm(Run& run, const Common& c, const MeasureOptions& mo, const std::string& compress, int dim) {
  Inputs in = load_inputs(run, c);
  DbfmSpace space = dbfm_build(in.queries, build_matrices(in.queries, make_measures(mo)));
  if (compress == "pca") {
    if (dim < 1) fail(ErrorKind::UsageError, "--dim is required with --compress pca");
    space = dbfm_compress_pca(space, dim);
  } else if (compress == "prototypes") {
    if (dim < 1) fail(ErrorKind::UsageError, "--dim is required with --compress prototypes");
    space = prototype_select(space, dim, c.seed);
  } else if (compress != "none") {
    fail(ErrorKind::UsageError, "unknown compression '" + compress + "'");
  }
  run.write("vectors.csv", matrix_csv(space.vectors()));
  run.write("dbfm.json", to_json(space, in.schema).dump(2) + "\n");
  run.write("index_map.csv", index_map_csv(in.indices));
  run.finish();
  return 0;
}

int cmd_mds(Run& run, const Common& c, const MeasureOptions& mo, const std::string& matrix_path, int dim) {
  if (dim < 1) fail(ErrorKind::UsageError, "--dim is required");
  Eigen::MatrixXd d;
  std::vector<std::size_t> indices;
  if (!matrix_path.empty()) {
    d = load_matrix(run, matrix_path);
    indices = identity_indices(static_cast<std::size_t>(d.rows()));
  } else {
    Inputs in = load_inputs(run, c);
    d = combined_matrix(in.queries, mo).values;
    indices = in.indices;
  }
  MdsResult r = mds(d, dim);
  run.write("coords.csv", matrix_csv(r.coordinates));
  json info;
  info["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  info["distortion"] = r.distortion;
  run.write("mds.json", info.dump(2) + "\n");
  run.write("index_map.csv", index_map_csv(indices));
  run.finish();
  return 0;
}

struct KernelOptions {
  std::string action;
  std::string type = "gaussian";
  std::string sigma = "auto";
  std::string matrix;
  std::string kernel;
};

int cmd_kernel(Run& run, const Common& c, const MeasureOptions& mo, const KernelOptions& ko, std::ostream& out) {
  KernelMatrix k;
  std::vector<std::size_t> indices;
  if (ko.action == "build") {
    if (ko.type == "linear") {
      Inputs in = load_inputs(run, c);
      auto space = build_space(in.queries, in.schema);
      std::vector<FeatureVector> vectors;
      for (const auto& q : in.queries) vectors.push_back(encode(q, space));
      k = linear_kernel(vectors);
      indices = in.indices;
    } else if (ko.type == "gaussian") {
      DissimilarityMatrix d;
      if (!ko.matrix.empty()) {
        d = from_values(load_matrix(run, ko.matrix));
        indices = identity_indices(static_cast<std::size_t>(d.size()));
      } else {
        Inputs in = load_inputs(run, c);
        d = combined_matrix(in.queries, mo);
        indices = in.indices;
      }
      k = gaussian_from_dissim(d, parse_auto_real(ko.sigma, "--sigma"));
    } else {
      fail(ErrorKind::UsageError, "unknown kernel type '" + ko.type + "'");
    }
  } else {
    if (ko.kernel.empty()) fail(ErrorKind::UsageError, "--kernel is required for " + ko.action);
    k = load_kernel(run, ko.kernel);
    indices = identity_indices(static_cast<std::size_t>(k.size()));
    if (ko.action == "clip")
      k = spectral_clip(k);
    else if (ko.action == "shift")
      k = spectral_shift(k);
    else if (ko.action != "check")
      fail(ErrorKind::UsageError, "unknown kernel action '" + ko.action + "'");
  }
  json report = mercer_json(k);
  out << report.dump() << "\n";
  if (ko.action != "check") {
    run.write("kernel.csv", matrix_csv(k.values()));
    run.write("index_map.csv", index_map_csv(indices));
  }
  run.write("mercer.json", report.dump(2) + "\n");
  run.finish();
  return 0;
}

int cmd_cluster(Run& run, const Common& c, const MeasureOptions& mo, const std::string& method, int clusters,
                const std::string& kernel_path, const std::string& sigma, const FitOptions& fo) {
  if (method == "kernel-kmeans") {
    if (clusters < 1) fail(ErrorKind::UsageError, "--k is required");
    KernelMatrix k;
    std::vector<std::size_t> indices;
    if (!kernel_path.empty()) {
      k = certify(load_kernel(run, kernel_path));
      indices = identity_indices(static_cast<std::size_t>(k.size()));
    } else {
      Inputs in = load_inputs(run, c);
      k = corrected_gaussian(combined_matrix(in.queries, mo), parse_auto_real(sigma, "--sigma"), false);
      indices = in.indices;
    }
    auto r = kernel_kmeans(k, clusters, c.seed);
    run.write("labels.csv", labels_csv(r.labels, indices));
    json trace;
    trace["objective_trace"] = r.objective_trace;
    trace["iterations"] = r.iterations;
    trace["reseeded_clusters"] = r.reseeded_clusters;
    trace["converged"] = r.converged;
    run.write("trace.json", trace.dump(2) + "\n");
    run.finish();
    return 0;
  }
  if (method == "mixture") {
    Inputs in = load_inputs(run, c);
    SfLog log = select_from_log(in);
    FitOptions options = fo;
    if (clusters > 0) options.components = clusters;
    EmResult r = fit_mixture(log, in.schema, options, c.seed);
    std::vector<int> labels;
    std::vector<std::vector<double>> posteriors;
    for (const auto& q : log.queries) {
      auto post = mixture_posterior(r.model, q);
      labels.push_back(static_cast<int>(std::max_element(post.begin(), post.end()) - post.begin()));
      posteriors.push_back(std::move(post));
    }
    run.write("labels.csv", labels_csv(labels, log.indices));
    run.write("posterior.csv", probability_matrix_csv(posteriors, log.indices));
    run.write("model.json", model_json(r.model).dump(2) + "\n");
    run.write("trace.json", trace_json(r).dump(2) + "\n");
    run.finish();
    return 0;
  }
  fail(ErrorKind::UsageError, "unknown clustering method '" + method + "'");
}

int cmd_fit(Run& run, const Common& c, const FitOptions& fo) {
  Inputs in = load_inputs(run, c);
  SfLog log = select_from_log(in);
  EmResult r = fit_mixture(log, in.schema, fo, c.seed);
  run.write("model.json", model_json(r.model).dump(2) + "\n");
  run.write("trace.json", trace_json(r).dump(2) + "\n");
  run.write("index_map.csv", index_map_csv(log.indices));
  run.finish();
  return 0;
}

int cmd_logp(Run& run, const Common& c, const std::string& model_path) {
  MixtureModel mm = load_model(run, model_path);
  Inputs in = load_inputs(run, c, mm.components.front().schema);
  SfLog log = select_from_log(in);
  std::string csv = "index,logp\n";
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < log.queries.size(); ++i) {
    try {
      validate(log.queries[i], mm.components.front().schema, mm.components.front().max_t);
    } catch (const Error&) {
      continue;
    }
    kept.push_back(log.indices[i]);
    csv += std::to_string(log.indices[i]) + "," + format_real(mixture_logp(mm, log.queries[i])) + "\n";
  }
  run.write("logp.csv", csv);
  run.write("index_map.csv", index_map_csv(kept));
  run.finish();
  return 0;
}

int cmd_sample(Run& run, const Common& c, const std::string& model_path, int count) {
  if (count < 0) fail(ErrorKind::UsageError, "--count must be non-negative");
  MixtureModel mm = load_model(run, model_path);
  Rng rng(c.seed);
  std::string lines;
  const Schema& schema = mm.components.front().schema;
  for (int i = 0; i < count; ++i) lines += to_sql(mixture_sample(mm, rng), schema) + "\n";
  run.write("samples.sql", lines);
  run.finish();
  return 0;
}

int cmd_recommend(Run& run, const std::string& model_path, const std::vector<std::string>& tables,
                  const std::vector<std::string>& columns, int topk, std::ostream& out) {
  MixtureModel mm = load_model(run, model_path);
  Constraint constraint;
  for (const auto& t : tables) constraint.tables.push_back(to_lower(t));
  for (const auto& ref : columns) {
    auto dot = ref.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size())
      fail(ErrorKind::UsageError, "--column expects table.column, got '" + ref + "'");
    constraint.columns.push_back({to_lower(ref.substr(0, dot)), to_lower(ref.substr(dot + 1))});
  }
  if (topk < 1) fail(ErrorKind::UsageError, "--topk must be at least 1");
  RecommendResult r = recommend(mm, constraint, topk);
  std::string csv = "rank,probability,sql\n";
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    csv += std::to_string(i + 1) + "," + format_real(r.items[i].probability) + "," + csv_escape(r.items[i].sql) + "\n";
    out << format_real(r.items[i].probability) << "\t" << r.items[i].sql << "\n";
  }
  json summary;
  summary["count"] = r.items.size();
  summary["warning"] = r.warning ? json(*r.warning) : json(nullptr);
  run.write("recommendations.csv", csv);
  run.write("summary.json", summary.dump(2) + "\n");
  run.finish();
  return 0;
}

int cmd_fisher(Run& run, const Common& c, const std::string& model_path, const std::string& kind) {
  MixtureModel mm = load_model(run, model_path);
  Inputs in = load_inputs(run, c, mm.components.front().schema);
  SfLog log = select_from_log(in);
  KernelMatrix k;
  if (kind == "fisher") {
    if (mm.size() != 1) fail(ErrorKind::UsageError, "the Fisher kernel needs a single-component model");
    const auto& model = mm.components.front();
    Eigen::MatrixXd features = fisher_matrix(model, log.queries);
    run.write("features.csv", matrix_csv(features, fisher_layout(model)));
    k = fisher_kernel(model, log.queries);
  } else if (kind == "posterior") {
    k = posterior_kernel(mm, log.queries);
  } else {
    fail(ErrorKind::UsageError, "unknown kernel kind '" + kind + "'");
  }
  run.write("kernel.csv", matrix_csv(k.values()));
  run.write("mercer.json", mercer_json(k).dump(2) + "\n");
  run.write("index_map.csv", index_map_csv(log.indices));
  run.finish();
  return 0;
}

std::pair<int, int> parse_grid(const std::string& text) {
  auto x = text.find_first_of("xX");
  if (x == std::string::npos) fail(ErrorKind::UsageError, "--grid expects WxH");
  int w = static_cast<int>(parse_real(text.substr(0, x), "--grid"));
  int h = static_cast<int>(parse_real(text.substr(x + 1), "--grid"));
  if (w < 2 || h < 2) fail(ErrorKind::UsageError, "--grid needs W, H >= 2");
  return {w, h};
}

int cmd_density(Run& run, const Common& c, const std::string& method, const std::string& grid,
                const std::string& bandwidth, const std::string& sigma, const FitOptions& fo) {
  auto [width, height] = parse_grid(grid);
  Inputs in = load_inputs(run, c);
  Eigen::MatrixXd points;
  std::vector<std::size_t> indices;
  if (method == "dbfm-kpca") {
    if (in.queries.empty()) fail(ErrorKind::EmptyLog, "no parsed queries");
    MeasureOptions mo;
    KernelMatrix k = corrected_gaussian(combined_matrix(in.queries, mo), parse_auto_real(sigma, "--sigma"), true);
    const auto n = static_cast<Eigen::Index>(in.queries.size());
    points = Eigen::MatrixXd::Zero(n, 2);
    Eigen::Index m = std::min<Eigen::Index>(2, n);
    points.leftCols(m) = kernel_pca(k, m).coordinates;
    indices = in.indices;
  } else if (method == "mixture") {
    SfLog log = select_from_log(in);
    FitOptions options = fo;
    options.components = 3;
    EmResult r = fit_mixture(log, in.schema, options, c.seed);
    points.resize(static_cast<Eigen::Index>(log.queries.size()), 2);
    for (std::size_t i = 0; i < log.queries.size(); ++i) {
      auto p = mixture_posterior(r.model, log.queries[i]);
      points(static_cast<Eigen::Index>(i), 0) = p[1] + 0.5 * p[2];
      points(static_cast<Eigen::Index>(i), 1) = std::sqrt(3.0) / 2.0 * p[2];
    }
    indices = log.indices;
  } else {
    fail(ErrorKind::UsageError, "unknown density method '" + method + "'");
  }
  DensityGrid g = kde_grid(points, width, height, parse_auto_real(bandwidth, "--bandwidth"));
  std::string csv = "x,y,density\n";
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i)
      csv += format_real(g.x_center(i)) + "," + format_real(g.y_center(j)) + "," + format_real(g.density(j, i)) + "\n";
  std::string pts = "index,x,y\n";
  for (Eigen::Index r = 0; r < points.rows(); ++r)
    pts += std::to_string(indices[static_cast<std::size_t>(r)]) + "," + format_real(points(r, 0)) + "," +
           format_real(points(r, 1)) + "\n";
  json summary;
  summary["points"] = points.rows();
  summary["bandwidth"] = {g.bandwidth.x, g.bandwidth.y};
  summary["bounds"] = {g.x_min, g.x_max, g.y_min, g.y_max};
  summary["mass"] = g.mass();
  summary["local_maxima"] = count_local_maxima(g);
  run.write("density.csv", csv);
  run.write("points.csv", pts);
  run.write("summary.json", summary.dump(2) + "\n");
  run.finish();
  return 0;
}

struct PredictOptions {
  std::string target;
  std::string method = "knn";
  std::string task = "auto";
  int k = 5;
  double lambda = 1.0;
  std::string kernel = "gaussian";
  std::string sigma = "auto";
};

int cmd_predict(Run& run, const Common& c, const PredictOptions& po) {
  if (po.target.empty()) fail(ErrorKind::UsageError, "--target is required");
  Inputs in = load_inputs(run, c);
  bool present = false;
  std::vector<QueryIR> queries;
  std::vector<std::size_t> indices;
  std::vector<std::string> truth;
  for (const auto& r : in.records) {
    auto it = r.metadata.find(po.target);
    if (it == r.metadata.end()) continue;
    present = true;
    if (!r.ir || it->second.empty()) continue;
    queries.push_back(*r.ir);
    indices.push_back(r.index);
    truth.push_back(it->second);
  }
  if (!present) fail(ErrorKind::MissingMetadata, "no record carries the column '" + po.target + "'");
  if (queries.size() < 2) fail(ErrorKind::EmptyLog, "leave-one-out needs at least two labelled queries");

  std::vector<double> numeric;
  bool all_numeric = true;
  for (const auto& t : truth) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
      all_numeric = false;
      break;
    }
    numeric.push_back(v);
  }
  std::string task = po.task == "auto" ? (all_numeric ? "regress" : "classify") : po.task;
  if (task != "regress" && task != "classify") fail(ErrorKind::UsageError, "unknown task '" + task + "'");
  if (task == "regress" && !all_numeric) fail(ErrorKind::MissingMetadata, "target '" + po.target + "' is not numeric");

  const std::size_t n = queries.size();
  std::vector<std::string> predicted(n);
  std::vector<double> predicted_value(n);
  if (po.method == "knn") {
    Eigen::MatrixXd d = matrix(queries, std::make_shared<FragmentMeasure>()).values;
    int k = std::min<int>(po.k, static_cast<int>(n) - 1);
    if (k < 1) fail(ErrorKind::UsageError, "--k must be at least 1");
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd row(static_cast<Eigen::Index>(n - 1));
      std::vector<double> ys;
      std::vector<std::string> labels;
      Eigen::Index r = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        row(r++) = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (task == "regress")
          ys.push_back(numeric[j]);
        else
          labels.push_back(truth[j]);
      }
      if (task == "regress")
        predicted_value[i] = knn_regress(row, ys, k);
      else
        predicted[i] = knn_classify(row, labels, k);
    }
  } else if (po.method == "krr") {
    if (task != "regress") fail(ErrorKind::UsageError, "kernel ridge regression needs a numeric target");
    KernelMatrix k;
    if (po.kernel == "linear") {
      auto space = build_space(queries, in.schema);
      std::vector<FeatureVector> vectors;
      for (const auto& q : queries) vectors.push_back(encode(q, space));
      k = linear_kernel(vectors);
    } else if (po.kernel == "gaussian") {
      k = corrected_gaussian(matrix(queries, std::make_shared<FragmentMeasure>()), parse_auto_real(po.sigma, "--sigma"),
                             true);
    } else {
      fail(ErrorKind::UsageError, "unknown kernel '" + po.kernel + "'");
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(numeric.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd loo = krr_loo_predictions(k, y, po.lambda);
    for (std::size_t i = 0; i < n; ++i) predicted_value[i] = loo(static_cast<Eigen::Index>(i));
  } else {
    fail(ErrorKind::UsageError, "unknown method '" + po.method + "'");
  }

  std::string csv = "index,truth,prediction\n";
  json report;
  report["task"] = task;
  report["method"] = po.method;
  report["n"] = n;
  if (task == "regress") {
    double mae = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mae += std::abs(predicted_value[i] - numeric[i]);
      csv += std::to_string(indices[i]) + "," + format_real(numeric[i]) + "," + format_real(predicted_value[i]) + "\n";
    }
    report["mae"] = mae / static_cast<double>(n);
  } else {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      hits += predicted[i] == truth[i];
      csv += std::to_string(indices[i]) + "," + csv_escape(truth[i]) + "," + csv_escape(predicted[i]) + "\n";
    }
    report["accuracy"] = static_cast<double>(hits) / static_cast<double>(n);
  }
  run.write("predictions.csv", csv);
  run.write("report.json", report.dump(2) + "\n");
  run.finish();
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool needs_log = true, bool needs_schema = true) {
  auto* log = sub->add_option("--log", c.log, "query log (plain or TSV)");
  auto* schema = sub->add_option("--schema", c.schema, "schema JSON");
  if (needs_log) log->required();
  if (needs_schema) schema->required();
  sub->add_option("--out", c.out, "output directory")->required();
  sub->add_option("--format", c.format, "log format: auto | plain | tsv")->capture_default_str();
}

void add_seed(CLI::App* sub, Common& c) { sub->add_option("--seed", c.seed, "random seed")->capture_default_str(); }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::IoError, "digest computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UsageError:
    case ErrorKind::DimensionTooLarge:
    case ErrorKind::KTooLarge:
    case ErrorKind::InvalidWeights:
    case ErrorKind::InvalidSigma:
    case ErrorKind::UnsatisfiableConstraint:
      return 1;
    case ErrorKind::DegenerateData:
    case ErrorKind::DegenerateScale:
    case ErrorKind::AsymmetricInput:
    case ErrorKind::NotPsd:
    case ErrorKind::SingularSystem:
    case ErrorKind::ZeroProbability:
    case ErrorKind::DegenerateModel:
      return 3;
    default:
      return 2;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical representations of SQL query logs", "qspace"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  MeasureOptions measures;
  FitOptions fit;
  KernelOptions kernel;
  PredictOptions predict;
  int pca_dim = 0, dim = 0, clusters = 0, count = 100, topk = 10;
  std::string compress = "none", matrix_path, method, model_path, grid = "64x64", bandwidth = "auto", sigma = "auto",
              kind = "fisher";
  std::vector<std::string> tables, columns;
  std::function<int(Run&)> action;

  auto* parse = app.add_subcommand("parse", "parse a log and write canonical IRs");
  add_common(parse, common);
  parse->callback([&] { action = [&](Run& r) { return cmd_parse(r, common); }; });

  auto* enc = app.add_subcommand("encode", "dummy-code a log into feature vectors");
  add_common(enc, common);
  enc->add_option("--pca", pca_dim, "also project onto this many principal components");
  enc->callback([&] { action = [&](Run& r) { return cmd_encode(r, common, pca_dim); }; });

  auto* dis = app.add_subcommand("dissim", "pairwise dissimilarity matrix");
  add_common(dis, common);
  add_measure_options(dis, measures);
  dis->callback([&] { action = [&](Run& r) { return cmd_dissim(r, common, measures); }; });

  auto* dbfm = app.add_subcommand("dbfm", "dissimilarity-based feature map");
  add_common(dbfm, common);
  add_seed(dbfm, common);
  add_measure_options(dbfm, measures);
  dbfm->add_option("--compress", compress, "none | pca | prototypes")->capture_default_str();
  dbfm->add_option("--dim", dim, "compressed dimension");
  dbfm->callback([&] { action = [&](Run& r) { return cmd_dbfm(r, common, measures, compress, dim); }; });

  auto* mds_cmd = app.add_subcommand("mds", "classical multidimensional scaling");
  add_common(mds_cmd, common, false, false);
  add_measure_options(mds_cmd, measures);
  mds_cmd->add_option("--matrix", matrix_path, "dissimilarity CSV instead of a log");
  mds_cmd->add_option("--dim", dim, "target dimension")->required();
  mds_cmd->callback([&] { action = [&](Run& r) { return cmd_mds(r, common, measures, matrix_path, dim); }; });

  auto* ker = app.add_subcommand("kernel", "build, check or correct kernel matrices");
  add_common(ker, common, false, false);
  add_measure_options(ker, measures);
  ker->add_option("action", kernel.action, "build | check | clip | shift")->required();
  ker->add_option("--type", kernel.type, "gaussian | linear")->capture_default_str();
  ker->add_option("--sigma", kernel.sigma, "Gaussian bandwidth or auto")->capture_default_str();
  ker->add_option("--matrix", kernel.matrix, "dissimilarity CSV for build");
  ker->add_option("--kernel", kernel.kernel, "kernel CSV for check, clip and shift");
  ker->callback([&] { action = [&](Run& r) { return cmd_kernel(r, common, measures, kernel, out); }; });

  auto* clu = app.add_subcommand("cluster", "kernel k-means or mixture clustering");
  add_common(clu, common, false, false);
  add_seed(clu, common);
  add_measure_options(clu, measures);
  add_fit_options(clu, fit);
  clu->add_option("--method", method, "kernel-kmeans | mixture")->required();
  clu->add_option("--k", clusters, "number of clusters");
  clu->add_option("--kernel", matrix_path, "kernel CSV for kernel-kmeans");
  clu->add_option("--sigma", sigma, "Gaussian bandwidth or auto")->capture_default_str();
  clu->callback([&] {
    action = [&](Run& r) { return cmd_cluster(r, common, measures, method, clusters, matrix_path, sigma, fit); };
  });

  auto* fit_cmd = app.add_subcommand("fit", "fit a SELECT-FROM model or mixture");
  add_common(fit_cmd, common);
  add_seed(fit_cmd, common);
  add_fit_options(fit_cmd, fit);
  fit_cmd->callback([&] { action = [&](Run& r) { return cmd_fit(r, common, fit); }; });

  auto* logp = app.add_subcommand("logp", "log-probability of each logged query");
  add_common(logp, common, true, false);
  logp->add_option("--model", model_path, "model JSON")->required();
  logp->callback([&] { action = [&](Run& r) { return cmd_logp(r, common, model_path); }; });

  auto* sample = app.add_subcommand("sample", "draw queries from a model");
  sample->add_option("--model", model_path, "model JSON")->required();
  sample->add_option("--out", common.out, "output directory")->required();
  sample->add_option("--count", count, "number of samples")->capture_default_str();
  add_seed(sample, common);
  sample->callback([&] { action = [&](Run& r) { return cmd_sample(r, common, model_path, count); }; });

  auto* rec = app.add_subcommand("recommend", "most probable completions of a partial query");
  rec->add_option("--model", model_path, "model JSON")->required();
  rec->add_option("--out", common.out, "output directory")->required();
  rec->add_option("--table", tables, "required table (repeatable)");
  rec->add_option("--column", columns, "required table.column (repeatable)");
  rec->add_option("--topk", topk, "number of results")->capture_default_str();
  rec->callback([&] { action = [&](Run& r) { return cmd_recommend(r, model_path, tables, columns, topk, out); }; });

  auto* fis = app.add_subcommand("fisher", "Fisher or posterior kernel of a log under a model");
  add_common(fis, common, true, false);
  fis->add_option("--model", model_path, "model JSON")->required();
  fis->add_option("--kind", kind, "fisher | posterior")->capture_default_str();
  fis->callback([&] { action = [&](Run& r) { return cmd_fisher(r, common, model_path, kind); }; });

  auto* den = app.add_subcommand("density", "2-D density grid of the log");
  add_common(den, common);
  add_seed(den, common);
  add_fit_options(den, fit);
  den->add_option("--method", method, "dbfm-kpca | mixture")->required();
  den->add_option("--grid", grid, "grid size WxH")->capture_default_str();
  den->add_option("--bandwidth", bandwidth, "KDE bandwidth or auto")->capture_default_str();
  den->add_option("--sigma", sigma, "Gaussian kernel bandwidth or auto")->capture_default_str();
  den->callback([&] { action = [&](Run& r) { return cmd_density(r, common, method, grid, bandwidth, sigma, fit); }; });

  auto* pre = app.add_subcommand("predict", "leave-one-out prediction of a metadata column");
  add_common(pre, common);
  pre->add_option("--target", predict.target, "metadata column")->required();
  pre->add_option("--method", predict.method, "knn | krr")->capture_default_str();
  pre->add_option("--task", predict.task, "auto | regress | classify")->capture_default_str();
  pre->add_option("--k", predict.k, "neighbours")->capture_default_str();
  pre->add_option("--lambda", predict.lambda, "ridge penalty")->capture_default_str();
  pre->add_option("--kernel", predict.kernel, "gaussian | linear")->capture_default_str();
  pre->add_option("--sigma", predict.sigma, "Gaussian bandwidth or auto")->capture_default_str();
  pre->callback([&] { action = [&](Run& r) { return cmd_predict(r, common, predict); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  Run run(chosen->get_name(), common.out);
  run.record_flags(*chosen);
  run.set_seed(common.seed);
  try {
    return action(run);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qspace::cli
