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

#include "qspace/encode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "qspace/error.hpp"

namespace qspace {
namespace {

constexpr double kBinaryTolerance = 1e-9;

std::optional<CompareOp> op_from_string(std::string_view text) {
  for (auto op : {CompareOp::Eq, CompareOp::Lt, CompareOp::Gt, CompareOp::Le, CompareOp::Ge,
                  CompareOp::Ne, CompareOp::Like})
    if (to_string(op) == text) return op;
  return std::nullopt;
}

std::optional<ColumnRef> ref_from_string(std::string_view text) {
  auto dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) return std::nullopt;
  return ColumnRef{std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

std::optional<Aggregate> aggregate_from_string(std::string_view text) {
  for (auto agg : {Aggregate::Count, Aggregate::Sum, Aggregate::Avg, Aggregate::Min, Aggregate::Max})
    if (to_string(agg) == text) return agg;
  return std::nullopt;
}

[[noreturn]] void malformed(const std::string& message) { fail(ErrorKind::MalformedVector, message); }

bool collapse_keeps_max(CompareOp op) { return op == CompareOp::Gt || op == CompareOp::Ge; }
bool collapse_keeps_min(CompareOp op) { return op == CompareOp::Lt || op == CompareOp::Le; }

}  // namespace

double ContinuousSlot::normalize(double constant) const {
  if (max == min) return 0.5;
  return (constant - min) / (max - min);
}

double ContinuousSlot::denormalize(double value) const {
  double constant = max == min ? min : min + value * (max - min);
  // Snap onto an observed constant when the difference is rounding noise.
  auto it = std::lower_bound(observed.begin(), observed.end(), constant);
  double tolerance = 1e-9 * std::max(1.0, max - min);
  std::optional<double> best;
  for (auto cand : {it, it == observed.begin() ? it : std::prev(it)}) {
    if (cand == observed.end()) continue;
    if (std::abs(*cand - constant) <= tolerance &&
        (!best || std::abs(*cand - constant) < std::abs(*best - constant)))
      best = *cand;
  }
  return best.value_or(constant);
}

FeatureSpace::FeatureSpace(Schema schema, std::vector<std::string> binary_slots,
                           std::vector<ContinuousSlot> continuous_slots)
    : schema_(std::move(schema)),
      binary_(std::move(binary_slots)),
      continuous_(std::move(continuous_slots)) {
  std::sort(binary_.begin(), binary_.end());
  binary_.erase(std::unique(binary_.begin(), binary_.end()), binary_.end());
  std::sort(continuous_.begin(), continuous_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.column, a.op) < std::tie(b.column, b.op);
  });
  for (std::size_t i = 1; i < continuous_.size(); ++i)
    if (continuous_[i].column == continuous_[i - 1].column && continuous_[i].op == continuous_[i - 1].op)
      fail(ErrorKind::SchemaError, "duplicate continuous slot " + continuous_[i].column.str());
  for (auto& slot : continuous_) {
    if (!(slot.min <= slot.max)) fail(ErrorKind::SchemaError, "continuous slot with min > max");
    std::sort(slot.observed.begin(), slot.observed.end());
    slot.observed.erase(std::unique(slot.observed.begin(), slot.observed.end()), slot.observed.end());
  }
  for (std::size_t i = 0; i < binary_.size(); ++i) binary_lookup_.emplace(binary_[i], i);
}

std::optional<std::size_t> FeatureSpace::binary_index(const std::string& fragment) const {
  auto it = binary_lookup_.find(fragment);
  if (it == binary_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> FeatureSpace::continuous_index(const ColumnRef& column, CompareOp op) const {
  auto it = std::lower_bound(continuous_.begin(), continuous_.end(), std::tie(column, op),
                             [](const ContinuousSlot& slot, const auto& key) {
                               return std::tie(slot.column, slot.op) < key;
                             });
  if (it == continuous_.end() || it->column != column || it->op != op) return std::nullopt;
  return static_cast<std::size_t>(it - continuous_.begin());
}

std::vector<std::string> FeatureSpace::slot_names() const {
  std::vector<std::string> names = binary_;
  for (const auto& slot : continuous_) {
    std::string key = "NUM:" + pred_fragment_body(slot.column, slot.op);
    names.push_back(key + ":present");
    names.push_back(key + ":value");
  }
  return names;
}

bool FeatureSpace::operator==(const FeatureSpace& other) const {
  if (!(schema_ == other.schema_) || binary_ != other.binary_ ||
      continuous_.size() != other.continuous_.size())
    return false;
  for (std::size_t i = 0; i < continuous_.size(); ++i) {
    const auto& a = continuous_[i];
    const auto& b = other.continuous_[i];
    if (a.column != b.column || a.op != b.op || a.min != b.min || a.max != b.max ||
        a.observed != b.observed)
      return false;
  }
  return true;
}

nlohmann::ordered_json FeatureSpace::to_json() const {
  nlohmann::ordered_json doc;
  doc["schema"] = schema_.to_json();
  doc["binary_slots"] = binary_;
  doc["continuous_slots"] = nlohmann::ordered_json::array();
  for (const auto& slot : continuous_) {
    doc["continuous_slots"].push_back({{"table", slot.column.table},
                                       {"column", slot.column.column},
                                       {"op", to_string(slot.op)},
                                       {"min", slot.min},
                                       {"max", slot.max},
                                       {"observed", slot.observed}});
  }
  return doc;
}

FeatureSpacePtr FeatureSpace::from_json(const nlohmann::ordered_json& doc) {
  try {
    Schema schema = Schema::from_json(doc.at("schema"));
    auto binary = doc.at("binary_slots").get<std::vector<std::string>>();
    std::vector<ContinuousSlot> continuous;
    for (const auto& entry : doc.at("continuous_slots")) {
      auto op = op_from_string(entry.at("op").get<std::string>());
      if (!op) fail(ErrorKind::SchemaError, "unknown operator in feature space");
      continuous.push_back({{entry.at("table").get<std::string>(), entry.at("column").get<std::string>()},
                            *op,
                            entry.at("min").get<double>(),
                            entry.at("max").get<double>(),
                            entry.at("observed").get<std::vector<double>>()});
    }
    return std::make_shared<const FeatureSpace>(std::move(schema), std::move(binary), std::move(continuous));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("invalid feature space JSON: ") + e.what());
  }
}

Eigen::VectorXd FeatureVector::dense() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->dimension()));
  for (const auto& [index, value] : entries) out(static_cast<Eigen::Index>(index)) = value;
  return out;
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  if (a.space != b.space && !(*a.space == *b.space))
    fail(ErrorKind::SpaceMismatch, "vectors belong to different feature spaces");
  double sum = 0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

std::string text_slot(const ColumnRef& column, CompareOp op, const std::string& value) {
  return "TEXT:" + pred_fragment_body(column, op) + ":" + value;
}

FeatureSpacePtr build_space(const std::vector<QueryIR>& log, const Schema& schema) {
  if (log.empty()) fail(ErrorKind::EmptyLog, "cannot build a feature space from an empty log");
  std::set<std::string> binary;
  std::map<std::pair<ColumnRef, CompareOp>, ContinuousSlot> continuous;
  for (const auto& ir : log) {
    binary.merge(fragments(ir));
    for (const auto& pred : ir.pred_set) {
      if (const auto* number = std::get_if<double>(&pred.value)) {
        auto [it, inserted] = continuous.try_emplace({pred.column, pred.op},
                                                     ContinuousSlot{pred.column, pred.op, *number, *number, {}});
        auto& slot = it->second;
        slot.min = std::min(slot.min, *number);
        slot.max = std::max(slot.max, *number);
        slot.observed.push_back(*number);
      } else {
        binary.insert(text_slot(pred.column, pred.op, std::get<std::string>(pred.value)));
      }
    }
  }
  std::vector<ContinuousSlot> slots;
  for (auto& [key, slot] : continuous) slots.push_back(std::move(slot));
  return std::make_shared<const FeatureSpace>(schema, std::vector<std::string>(binary.begin(), binary.end()),
                                              std::move(slots));
}

FeatureVector encode(const QueryIR& ir, const FeatureSpacePtr& space) {
  FeatureVector v{space, {}};
  auto set_binary = [&](const std::string& slot) {
    auto index = space->binary_index(slot);
    if (!index) fail(ErrorKind::OutOfVocabulary, slot);
    v.entries[*index] = 1.0;
  };
  for (const auto& frag : fragments(ir)) set_binary(frag);

  std::map<std::size_t, double> chosen;
  for (const auto& pred : ir.pred_set) {
    const auto* number = std::get_if<double>(&pred.value);
    if (!number) {
      set_binary(text_slot(pred.column, pred.op, std::get<std::string>(pred.value)));
      continue;
    }
    auto slot = space->continuous_index(pred.column, pred.op);
    if (!slot) fail(ErrorKind::OutOfVocabulary, "NUM:" + pred_fragment_body(pred.column, pred.op));
    auto [it, inserted] = chosen.try_emplace(*slot, *number);
    if (!inserted) {
      if (collapse_keeps_max(pred.op)) it->second = std::max(it->second, *number);
      else if (collapse_keeps_min(pred.op)) it->second = std::min(it->second, *number);
      else it->second = *number;  // sets iterate in canonical order
    }
  }
  for (const auto& [slot_index, constant] : chosen) {
    const auto& slot = space->continuous_slots()[slot_index];
    if (constant < slot.min || constant > slot.max)
      fail(ErrorKind::OutOfVocabulary, "constant " + format_number(constant) + " outside observed range of " +
                                           pred_fragment_body(slot.column, slot.op));
    v.entries[space->presence_index(slot_index)] = 1.0;
    v.entries[space->value_index(slot_index)] = slot.normalize(constant);
  }
  return v;
}

QueryIR decode(const FeatureVector& v) {
  const auto& space = *v.space;
  const std::size_t binary_count = space.binary_slots().size();
  auto as_bit = [](std::size_t index, double value) {
    if (std::abs(value) <= kBinaryTolerance) return false;
    if (std::abs(value - 1.0) <= kBinaryTolerance) return true;
    fail(ErrorKind::NonBinaryValue, "slot " + std::to_string(index) + " holds " + format_number(value));
  };

  QueryIR ir;
  std::set<std::pair<ColumnRef, CompareOp>> pred_keys;
  std::set<std::pair<ColumnRef, CompareOp>> realized;
  std::map<std::size_t, double> values;
  std::set<std::size_t> present;

  for (const auto& [index, value] : v.entries) {
    if (index >= space.dimension()) malformed("index " + std::to_string(index) + " beyond dimension");
    if (index >= binary_count) {
      std::size_t slot = (index - binary_count) / 2;
      bool is_value = (index - binary_count) % 2 == 1;
      if (is_value) {
        if (!(value >= -kBinaryTolerance && value <= 1.0 + kBinaryTolerance))
          malformed("normalized value outside [0,1] in slot " + std::to_string(index));
        values[slot] = std::clamp(value, 0.0, 1.0);
      } else if (as_bit(index, value)) {
        present.insert(slot);
      }
      continue;
    }
    if (!as_bit(index, value)) continue;
    const std::string& frag = space.binary_slots()[index];
    auto colon = frag.find(':');
    std::string role = frag.substr(0, colon);
    std::string body = colon == std::string::npos ? "" : frag.substr(colon + 1);
    if (role == "FROM") {
      ir.from_set.insert(body);
    } else if (role == "SEL") {
      if (body == "*") {
        ir.select_set.insert(SelectItem::all());
      } else if (auto open = body.find('('); open != std::string::npos && body.back() == ')') {
        auto agg = aggregate_from_string(body.substr(0, open));
        std::string inner = body.substr(open + 1, body.size() - open - 2);
        if (!agg) malformed("unknown aggregate in " + frag);
        if (inner == "*") {
          ir.select_set.insert({*agg, true, {}});
        } else {
          auto ref = ref_from_string(inner);
          if (!ref) malformed("bad column in " + frag);
          ir.select_set.insert({*agg, false, *ref});
        }
      } else {
        auto ref = ref_from_string(body);
        if (!ref) malformed("bad column in " + frag);
        ir.select_set.insert(SelectItem::plain(*ref));
      }
    } else if (role == "JOIN") {
      auto eq = body.find('=');
      auto left = eq == std::string::npos ? std::nullopt : ref_from_string(body.substr(0, eq));
      auto right = eq == std::string::npos ? std::nullopt : ref_from_string(body.substr(eq + 1));
      if (!left || !right) malformed("bad join " + frag);
      ir.join_set.insert(JoinPair::make(*left, *right));
    } else if (role == "PRED") {
      auto sep = body.find(':');
      auto ref = sep == std::string::npos ? std::nullopt : ref_from_string(body.substr(0, sep));
      auto op = sep == std::string::npos ? std::nullopt : op_from_string(body.substr(sep + 1));
      if (!ref || !op) malformed("bad predicate " + frag);
      pred_keys.insert({*ref, *op});
    } else if (role == "TEXT") {
      auto first = body.find(':');
      auto second = first == std::string::npos ? first : body.find(':', first + 1);
      if (second == std::string::npos) malformed("bad text slot " + frag);
      auto ref = ref_from_string(body.substr(0, first));
      auto op = op_from_string(body.substr(first + 1, second - first - 1));
      if (!ref || !op) malformed("bad text slot " + frag);
      ir.pred_set.insert({*ref, *op, Constant{body.substr(second + 1)}});
      realized.insert({*ref, *op});
    } else if (role == "GROUP" || role == "ORDER") {
      auto ref = ref_from_string(body);
      if (!ref) malformed("bad column in " + frag);
      (role == "GROUP" ? ir.group_set : ir.order_set).insert(*ref);
    } else {
      malformed("unknown fragment role in " + frag);
    }
  }

  for (auto slot : present) {
    const auto& cs = space.continuous_slots()[slot];
    auto it = values.find(slot);
    double value = it == values.end() ? 0.0 : it->second;
    ir.pred_set.insert({cs.column, cs.op, Constant{cs.denormalize(value)}});
    realized.insert({cs.column, cs.op});
  }
  for (const auto& [slot, value] : values)
    if (!present.contains(slot) && std::abs(value) > kBinaryTolerance)
      malformed("value without presence bit for " + pred_fragment_body(space.continuous_slots()[slot].column,
                                                                         space.continuous_slots()[slot].op));
  if (pred_keys != realized) malformed("predicate fragments and predicate values disagree");

  try {
    validate(ir, space.schema());
  } catch (const Error& e) {
    malformed(e.detail());
  }
  return ir;
}

Eigen::MatrixXd dense_matrix(const std::vector<FeatureVector>& vectors) {
  if (vectors.empty()) return Eigen::MatrixXd(0, 0);
  const auto& space = vectors.front().space;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vectors.size()),
                                            static_cast<Eigen::Index>(space->dimension()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].space != space && !(*vectors[i].space == *space))
      fail(ErrorKind::SpaceMismatch, "vectors belong to different feature spaces");
    for (const auto& [index, value] : vectors[i].entries)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(index)) = value;
  }
  return m;
}

}  // namespace qspace
