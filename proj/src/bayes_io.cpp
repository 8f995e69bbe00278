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

#include "qspace/bayes.hpp"
#include "qspace/error.hpp"
#include "qspace/mixture.hpp"

namespace qspace {

nlohmann::ordered_json to_json(const SelectFromModel& model) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["kind"] = "select_from";
  doc["schema"] = model.schema.to_json();
  doc["alpha"] = model.alpha;
  doc["max_t"] = model.max_t;
  doc["pi_tables"] = model.pi_tables;
  doc["pi_T"] = model.pi_t;
  json columns = json::object();
  json widths = json::object();
  for (std::size_t t = 0; t < model.schema.table_count(); ++t) {
    const auto& name = model.schema.tables()[t].name;
    columns[name] = model.pi_columns[t];
    widths[name] = model.pi_n[t];
  }
  doc["pi_columns"] = std::move(columns);
  doc["pi_N"] = std::move(widths);
  return doc;
}

SelectFromModel select_from_model_from_json(const nlohmann::ordered_json& doc) {
  try {
    SelectFromModel model;
    model.schema = Schema::from_json(doc.at("schema"));
    model.alpha = doc.at("alpha").get<double>();
    model.max_t = doc.at("max_t").get<int>();
    model.pi_tables = doc.at("pi_tables").get<std::vector<double>>();
    model.pi_t = doc.at("pi_T").get<std::vector<double>>();
    for (const auto& table : model.schema.tables()) {
      model.pi_columns.push_back(doc.at("pi_columns").at(table.name).get<std::vector<double>>());
      model.pi_n.push_back(doc.at("pi_N").at(table.name).get<std::vector<double>>());
    }
    model.check();
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::DegenerateModel, std::string("invalid model JSON: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const MixtureModel& mm) {
  nlohmann::ordered_json doc;
  doc["kind"] = "mixture";
  doc["weights"] = mm.weights;
  doc["components"] = nlohmann::ordered_json::array();
  for (const auto& c : mm.components) doc["components"].push_back(to_json(c));
  return doc;
}

MixtureModel mixture_model_from_json(const nlohmann::ordered_json& doc) {
  try {
    MixtureModel mm;
    mm.weights = doc.at("weights").get<std::vector<double>>();
    for (const auto& c : doc.at("components")) mm.components.push_back(select_from_model_from_json(c));
    mm.check();
    return mm;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::DegenerateModel, std::string("invalid mixture JSON: ") + e.what());
  }
}

}  // namespace qspace
