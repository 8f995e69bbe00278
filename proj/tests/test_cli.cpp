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


#include <cmath>
#include <filesystem>

#include <Eigen/Dense>

#include "doctest.h"
#include "qspace/csv.hpp"
#include "qspace/encode.hpp"
#include "qspace/log_io.hpp"
#include "qspace/parser.hpp"
#include "support/cli.hpp"
#include "support/corpus.hpp"

using namespace qspace;
using qspace::testing::invoke;
using qspace::testing::read_json;
using qspace::testing::TempDir;

namespace {

std::string lines(const std::vector<std::string>& rows) {
  std::string out;
  for (const auto& r : rows) out += r + "\n";
  return out;
}

struct Workspace {
  TempDir dir;
  std::string schema = dir.write("schema.json", qspace::testing::schema_json(qspace::testing::toy_schema()));

  std::string log(const std::string& content) const { return dir.write("log.txt", content); }
  std::string out(const std::string& name) const { return dir.file(name); }
};

// Reads a numeric CSV, dropping its header line when `header` is set.
Eigen::MatrixXd read_csv_body(const std::string& path, bool header = true) {
  std::istringstream in(read_file(path));
  if (header) {
    std::string skipped;
    std::getline(in, skipped);
  }
  return read_matrix_csv(in);
}

}  // namespace

TEST_CASE("parse of an empty log reports zero queries and succeeds") {
  Workspace ws;
  auto r = invoke({"parse", "--log", ws.log(""), "--schema", ws.schema, "--out", ws.out("o")});
  CHECK(r.code == 0);
  auto summary = read_json(ws.out("o") + "/summary.json");
  CHECK(summary["records"] == 0);
  CHECK(summary["failed"] == 0);
  CHECK(std::filesystem::exists(ws.out("o") + "/manifest.json"));
}

TEST_CASE("parse counts valid and unsupported statements and exits nonzero") {
  Workspace ws;
  std::vector<std::string> rows;
  for (int i = 0; i < 10; ++i) rows.push_back("SELECT t1.a FROM t1 WHERE t1.b > " + std::to_string(i));
  rows.push_back("SELECT t1.a FROM t1 WHERE t1.a = 1 OR t1.b = 2");
  rows.push_back("SELECT t1.a FROM t1 WHERE t1.a IN (SELECT t2.c FROM t2)");
  auto r = invoke({"parse", "--log", ws.log(lines(rows)), "--schema", ws.schema, "--out", ws.out("o")});
  CHECK(r.code != 0);
  auto summary = read_json(ws.out("o") + "/summary.json");
  CHECK(summary["parsed"] == 10);
  CHECK(summary["failed"] == 2);
  CHECK(summary["errors"]["UnsupportedFeature"] == 2);
  std::istringstream ir(read_file(ws.out("o") + "/ir.jsonl"));
  std::size_t ok = 0, total = 0;
  for (std::string line; std::getline(ir, line); ++total)
    ok += nlohmann::ordered_json::parse(line)["status"] == "ok";
  CHECK(total == 12);
  CHECK(ok == 10);
}

TEST_CASE("parse of the same file twice gives byte-identical outputs") {
  Workspace ws;
  std::string log = ws.log(lines({"SELECT t1.a FROM t1", "SELECT t2.c FROM t2 WHERE t2.d = 'x'", "SELECT nonsense"}));
  invoke({"parse", "--log", log, "--schema", ws.schema, "--out", ws.out("a")});
  invoke({"parse", "--log", log, "--schema", ws.schema, "--out", ws.out("b")});
  auto a = qspace::testing::directory_digests(ws.out("a"));
  CHECK(a.size() == 3);
  CHECK(a == qspace::testing::directory_digests(ws.out("b")));
}

TEST_CASE("manifest lists flags, inputs with digests and outputs") {
  Workspace ws;
  std::string log = ws.log(lines({"SELECT t1.a FROM t1", "SELECT t1.b FROM t1"}));
  REQUIRE(invoke({"dissim", "--log", log, "--schema", ws.schema, "--out", ws.out("o")}).code == 0);
  auto manifest = read_json(ws.out("o") + "/manifest.json");
  CHECK(manifest["command"] == "dissim");
  CHECK(manifest["flags"]["--log"] == log);
  CHECK_FALSE(manifest["flags"].contains("--out"));
  CHECK(manifest["inputs"].size() == 2);
  CHECK(manifest["inputs"][1]["sha256"] == qspace::cli::sha256_hex(read_file(log)));
  CHECK(manifest["tool_version"] == std::string(qspace::cli::kToolVersion));
}

TEST_CASE("unparseable lines are excluded from matrices and recorded in the index map") {
  Workspace ws;
  std::string log = ws.log(lines({"SELECT t1.a FROM t1", "SELECT garbage FROM", "SELECT t2.c FROM t2"}));
  REQUIRE(invoke({"dissim", "--log", log, "--schema", ws.schema, "--out", ws.out("o")}).code == 0);
  Eigen::MatrixXd d = read_csv_body(ws.out("o") + "/dissim.csv", false);
  CHECK(d.rows() == 2);
  CHECK(read_file(ws.out("o") + "/index_map.csv") == "row,index\n0,0\n1,2\n");
}

TEST_CASE("sha256 matches a known digest") {
  CHECK(qspace::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("usage errors exit with code 1") {
  Workspace ws;
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"frobnicate"}).code == 1);
  CHECK(invoke({"parse", "--schema", ws.schema, "--out", ws.out("o")}).code == 1);
  std::string log = ws.log(lines({"SELECT t1.a FROM t1"}));
  CHECK(invoke({"density", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--method", "dbfm-kpca",
                "--grid", "1x5"})
            .code == 1);
  CHECK(invoke({"dissim", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--measure", "cosine"}).code == 1);
}

TEST_CASE("numerical failures exit with code 3") {
  Workspace ws;
  std::string kernel = ws.dir.write("k.csv", "1,2\n0,1\n");
  CHECK(invoke({"kernel", "clip", "--kernel", kernel, "--out", ws.out("o")}).code == 3);
}

TEST_CASE("an unreadable schema is a data error") {
  Workspace ws;
  std::string log = ws.log(lines({"SELECT t1.a FROM t1"}));
  CHECK(invoke({"parse", "--log", log, "--schema", ws.out("missing.json"), "--out", ws.out("o")}).code == 2);
}

TEST_CASE("predict without the target column fails with MissingMetadata") {
  Workspace ws;
  std::string log = ws.log("sql\tduration_ms\nSELECT t1.a FROM t1\t3\nSELECT t1.b FROM t1\t4\n");
  auto r = invoke({"predict", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--target", "row_count"});
  CHECK(r.code != 0);
  CHECK(r.err.find("MissingMetadata") != std::string::npos);
}

TEST_CASE("KRR leave-one-out MAE on a constant target matches a direct solve with the linear kernel") {
  Workspace ws;
  std::vector<std::string> sql = {"SELECT t1.a FROM t1",
                                  "SELECT t1.a, t1.b FROM t1 WHERE t1.a > 2",
                                  "SELECT t2.c FROM t2 WHERE t2.d = 'x'",
                                  "SELECT t1.a, t2.c FROM t1, t2 WHERE t1.a = t2.c",
                                  "SELECT t2.d FROM t2 WHERE t2.c < 9",
                                  "SELECT t1.b FROM t1 WHERE t1.b >= 4"};
  std::string tsv = "sql\tduration_ms\n";
  for (const auto& s : sql) tsv += s + "\t7\n";
  std::string log = ws.log(tsv);
  for (double lambda : {0.1, 1.0, 10.0}) {
    auto r = invoke({"predict", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--target", "duration_ms",
                     "--method", "krr", "--kernel", "linear", "--lambda", format_real(lambda)});
    REQUIRE(r.code == 0);

    std::vector<QueryIR> queries;
    for (const auto& s : sql) queries.push_back(parse(s, qspace::testing::toy_schema()));
    auto space = build_space(queries, qspace::testing::toy_schema());
    const auto n = static_cast<Eigen::Index>(queries.size());
    Eigen::MatrixXd e(n, static_cast<Eigen::Index>(space->dimension()));
    for (Eigen::Index i = 0; i < n; ++i) e.row(i) = encode(queries[static_cast<std::size_t>(i)], space).dense();
    Eigen::MatrixXd k = e * e.transpose();

    double mae = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<Eigen::Index> rest;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) rest.push_back(j);
      const auto m = static_cast<Eigen::Index>(rest.size());
      Eigen::MatrixXd a(m, m);
      Eigen::VectorXd cross(m);
      for (Eigen::Index p = 0; p < m; ++p) {
        cross(p) = k(i, rest[p]);
        for (Eigen::Index q = 0; q < m; ++q) a(p, q) = k(rest[p], rest[q]);
      }
      a += lambda * Eigen::MatrixXd::Identity(m, m);
      Eigen::VectorXd alpha = a.fullPivLu().solve(Eigen::VectorXd::Constant(m, 7.0));
      mae += std::abs(cross.dot(alpha) - 7.0);
    }
    mae /= static_cast<double>(n);
    auto report = read_json(ws.out("o") + "/report.json");
    CHECK(report["n"] == sql.size());
    CHECK(report["mae"].get<double>() == doctest::Approx(mae).epsilon(1e-9));
  }
}

TEST_CASE("kNN leave-one-out is exact on duplicated queries with equal targets") {
  Workspace ws;
  std::string tsv = "sql\trow_count\n";
  for (int i = 0; i < 3; ++i) tsv += "SELECT t1.a FROM t1 WHERE t1.a > 5\t40\n";
  for (int i = 0; i < 3; ++i) tsv += "SELECT t2.c FROM t2\t900\n";
  tsv += "SELECT t1.b FROM t1\t11\n";
  std::string log = ws.log(tsv);
  for (const std::string k : {"1", "2"}) {
    REQUIRE(invoke({"predict", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--target", "row_count",
                    "--method", "knn", "--k", k})
                .code == 0);
    Eigen::MatrixXd p = read_csv_body(ws.out("o") + "/predictions.csv");
    REQUIRE(p.rows() == 7);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(p(i, 1) == p(i, 2));
  }
}

TEST_CASE("kNN classification reports accuracy for categorical targets") {
  Workspace ws;
  std::string tsv = "sql\tstatus\n";
  for (int i = 0; i < 3; ++i) tsv += "SELECT t1.a FROM t1 WHERE t1.a > " + std::to_string(i) + "\tok\n";
  for (int i = 0; i < 3; ++i) tsv += "SELECT t2.c FROM t2 WHERE t2.c < " + std::to_string(i) + "\tfailed\n";
  std::string log = ws.log(tsv);
  REQUIRE(invoke({"predict", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--target", "status", "--k",
                  "1"})
              .code == 0);
  auto report = read_json(ws.out("o") + "/report.json");
  CHECK(report["task"] == "classify");
  CHECK(report["accuracy"].get<double>() == 1.0);
}

TEST_CASE("density of identical queries has a single peak") {
  Workspace ws;
  std::vector<std::string> rows(12, "SELECT t1.a, t1.b FROM t1 WHERE t1.a > 3");
  std::string log = ws.log(lines(rows));
  for (const std::string method : {"dbfm-kpca", "mixture"}) {
    REQUIRE(invoke({"density", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--method", method, "--grid",
                    "21x21"})
                .code == 0);
    auto summary = read_json(ws.out("o") + "/summary.json");
    CHECK(summary["local_maxima"] == 1);
    CHECK(summary["mass"].get<double>() <= 1.0 + 1e-9);
    CHECK(summary["mass"].get<double>() > 0.9);
    Eigen::MatrixXd grid = read_csv_body(ws.out("o") + "/density.csv");
    CHECK(grid.rows() == 21 * 21);
    CHECK(grid.col(2).minCoeff() >= 0.0);
  }
}

TEST_CASE("density of two separated clusters has two local maxima") {
  Workspace ws;
  std::vector<std::string> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back("SELECT t1.a, t1.b FROM t1 WHERE t1.a > " + std::to_string(i));
    rows.push_back("SELECT t2.c FROM t2 WHERE t2.c < " + std::to_string(i));
  }
  std::string log = ws.log(lines(rows));
  REQUIRE(invoke({"density", "--log", log, "--schema", ws.schema, "--out", ws.out("o"), "--method", "dbfm-kpca",
                  "--grid", "40x40"})
              .code == 0);
  auto summary = read_json(ws.out("o") + "/summary.json");
  CHECK(summary["local_maxima"] == 2);
  CHECK(summary["points"] == 40);
}

TEST_CASE("density is reproducible for a fixed seed") {
  Workspace ws;
  std::vector<std::string> rows;
  for (int i = 0; i < 15; ++i) {
    rows.push_back("SELECT t1.a FROM t1 WHERE t1.a > " + std::to_string(i));
    rows.push_back("SELECT t1.a, t2.c FROM t1, t2 WHERE t1.a = t2.c");
    rows.push_back("SELECT t2.d FROM t2");
  }
  std::string log = ws.log(lines(rows));
  for (const std::string method : {"dbfm-kpca", "mixture"}) {
    for (const std::string dir : {"a", "b"})
      REQUIRE(invoke({"density", "--log", log, "--schema", ws.schema, "--out", ws.out(method + dir), "--method", method,
                      "--grid", "16x12", "--seed", "9"})
                  .code == 0);
    CHECK(read_file(ws.out(method + "a") + "/density.csv") == read_file(ws.out(method + "b") + "/density.csv"));
  }
}

TEST_CASE("fit, logp, sample and recommend agree on a fitted model") {
  Workspace ws;
  std::vector<std::string> rows;
  for (int i = 0; i < 6; ++i) rows.push_back("SELECT t1.a FROM t1");
  for (int i = 0; i < 2; ++i) rows.push_back("SELECT t2.c FROM t2");
  std::string log = ws.log(lines(rows));
  REQUIRE(invoke({"fit", "--log", log, "--schema", ws.schema, "--out", ws.out("fit"), "--alpha", "0"}).code == 0);
  std::string model = ws.out("fit") + "/model.json";
  CHECK(read_json(model)["kind"] == "select_from");

  REQUIRE(invoke({"logp", "--log", log, "--model", model, "--out", ws.out("lp")}).code == 0);
  Eigen::MatrixXd logp = read_csv_body(ws.out("lp") + "/logp.csv");
  CHECK(std::exp(logp(0, 1)) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::exp(logp(7, 1)) == doctest::Approx(0.25).epsilon(1e-12));

  REQUIRE(invoke({"sample", "--model", model, "--out", ws.out("s"), "--count", "50", "--seed", "3"}).code == 0);
  std::istringstream samples(read_file(ws.out("s") + "/samples.sql"));
  std::size_t count = 0;
  for (std::string line; std::getline(samples, line); ++count)
    CHECK((line == "SELECT t1.a FROM t1" || line == "SELECT t2.c FROM t2"));
  CHECK(count == 50);

  auto r = invoke({"recommend", "--model", model, "--out", ws.out("r"), "--column", "t2.c", "--topk", "3"});
  REQUIRE(r.code == 0);
  CHECK(read_file(ws.out("r") + "/recommendations.csv").find("SELECT t2.c FROM t2") != std::string::npos);
}

TEST_CASE("mixture clustering writes aligned labels and posteriors") {
  Workspace ws;
  std::vector<std::string> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(i % 2 ? "SELECT t1.a, t1.b FROM t1" : "SELECT t2.c, t2.d FROM t2");
  rows.push_back("DELETE FROM t1");
  std::string log = ws.log(lines(rows));
  REQUIRE(invoke({"cluster", "--method", "mixture", "--k", "2", "--log", log, "--schema", ws.schema, "--out",
                  ws.out("o"), "--seed", "5"})
              .code == 0);
  Eigen::MatrixXd post = read_csv_body(ws.out("o") + "/posterior.csv");
  CHECK(post.rows() == 10);
  for (Eigen::Index i = 0; i < post.rows(); ++i) CHECK(post(i, 1) + post(i, 2) == doctest::Approx(1.0));
  CHECK(read_json(ws.out("o") + "/model.json")["kind"] == "mixture");
}

TEST_CASE("kernel check, clip and shift follow the spectral corrections") {
  Workspace ws;
  std::string k = ws.dir.write("k.csv", "1,2\n2,1\n");
  auto check = invoke({"kernel", "check", "--kernel", k, "--out", ws.out("c")});
  REQUIRE(check.code == 0);
  CHECK(read_json(ws.out("c") + "/mercer.json")["psd"] == false);
  REQUIRE(invoke({"kernel", "clip", "--kernel", k, "--out", ws.out("clip")}).code == 0);
  REQUIRE(invoke({"kernel", "shift", "--kernel", k, "--out", ws.out("shift")}).code == 0);
  Eigen::MatrixXd clip = read_csv_body(ws.out("clip") + "/kernel.csv", false);
  Eigen::MatrixXd shift = read_csv_body(ws.out("shift") + "/kernel.csv", false);
  CHECK((clip - Eigen::MatrixXd::Constant(2, 2, 1.5)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((shift - Eigen::MatrixXd::Constant(2, 2, 2.0)).cwiseAbs().maxCoeff() < 1e-9);
}
