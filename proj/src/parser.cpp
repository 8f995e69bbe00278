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

#include "qspace/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qspace/error.hpp"

namespace qspace {
namespace {

enum class TokenKind { Word, Number, String, Symbol, End };

struct Token {
  TokenKind kind;
  std::string text;  // lower-cased for words
  std::size_t pos;
};

std::vector<Token> lex(std::string_view sql) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto at = [&](std::size_t k) { return k < n ? sql[k] : '\0'; };
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(sql[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(c) || c == '_') {
      while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) ++i;
      tokens.push_back({TokenKind::Word, to_lower(sql.substr(start, i - start)), start});
    } else if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(at(i + 1))))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      if (at(i) == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      }
      if (at(i) == 'e' || at(i) == 'E') {
        std::size_t k = i + 1;
        if (at(k) == '+' || at(k) == '-') ++k;
        if (!std::isdigit(static_cast<unsigned char>(at(k))))
          throw SyntaxError(i, "malformed exponent");
        i = k;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
      }
      if (std::isalpha(static_cast<unsigned char>(at(i))) || at(i) == '_')
        throw SyntaxError(i, "unexpected character after number");
      tokens.push_back({TokenKind::Number, std::string(sql.substr(start, i - start)), start});
    } else if (c == '\'') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < n) {
        if (sql[i] == '\'') {
          if (at(i + 1) == '\'') {
            text += '\'';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        text += sql[i++];
      }
      if (!closed) throw SyntaxError(start, "unterminated string literal");
      tokens.push_back({TokenKind::String, std::move(text), start});
    } else if (c == '"' || c == '`') {
      throw SyntaxError(start, "quoted identifiers are not supported");
    } else {
      std::string sym(1, static_cast<char>(c));
      char next = at(i + 1);
      if ((c == '<' && (next == '=' || next == '>')) || (c == '>' && next == '=') ||
          (c == '!' && next == '=')) {
        sym += next;
      }
      static const std::set<std::string> kSymbols = {",", ".", "(", ")", "*", ";", "=", "<",
                                                     ">", "<=", ">=", "<>", "!=", "-", "+"};
      if (!kSymbols.contains(sym)) throw SyntaxError(start, "unexpected character '" + sym + "'");
      i += sym.size();
      tokens.push_back({TokenKind::Symbol, std::move(sym), start});
    }
  }
  tokens.push_back({TokenKind::End, "", n});
  return tokens;
}

// Words that name constructs outside the dialect, mapped to the feature name
// reported in UnsupportedFeature.
const std::map<std::string, std::string>& unsupported_words() {
  static const std::map<std::string, std::string> words = {
      {"union", "UNION"},         {"intersect", "INTERSECT"}, {"except", "EXCEPT"},
      {"minus", "MINUS"},         {"or", "OR"},               {"not", "NOT"},
      {"having", "HAVING"},       {"exists", "EXISTS"},       {"in", "IN"},
      {"between", "BETWEEN"},     {"is", "IS"},               {"over", "window function"},
      {"partition", "window function"},                       {"case", "CASE"},
      {"with", "WITH"},           {"distinct", "DISTINCT"},   {"left", "outer join"},
      {"right", "outer join"},    {"full", "outer join"},     {"outer", "outer join"},
      {"cross", "CROSS JOIN"},    {"natural", "NATURAL JOIN"}, {"using", "USING"},
      {"offset", "OFFSET"},       {"desc", "DESC"},           {"insert", "DML (INSERT)"},
      {"update", "DML (UPDATE)"}, {"delete", "DML (DELETE)"}, {"create", "DDL (CREATE)"},
      {"drop", "DDL (DROP)"},     {"alter", "DDL (ALTER)"},   {"as", "alias"},
  };
  return words;
}

const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = [] {
    std::set<std::string> w = {"select", "from", "where", "and",   "group", "by",  "order",
                               "limit",  "join", "inner", "on",    "asc",   "like"};
    for (const auto& [word, _] : unsupported_words()) w.insert(word);
    return w;
  }();
  return words;
}

std::optional<Aggregate> aggregate_of(const std::string& word) {
  if (word == "count") return Aggregate::Count;
  if (word == "sum") return Aggregate::Sum;
  if (word == "avg") return Aggregate::Avg;
  if (word == "min") return Aggregate::Min;
  if (word == "max") return Aggregate::Max;
  return std::nullopt;
}

struct RawRef {
  std::optional<std::string> table;
  std::string column;
  std::size_t pos;
};

struct RawItem {
  Aggregate aggregate = Aggregate::None;
  bool star = false;
  RawRef ref;
};

struct RawOperand {
  std::optional<RawRef> ref;
  std::optional<Constant> constant;
  std::size_t pos;
};

struct RawCondition {
  RawOperand lhs;
  CompareOp op;
  RawOperand rhs;
  std::size_t pos;
};

class Parser {
 public:
  Parser(std::string_view sql, const Schema& schema) : tokens_(lex(sql)), schema_(schema) {}

  QueryIR run() {
    prescan();
    expect_word("select");
    parse_select_list();
    expect_word("from");
    parse_from();
    if (accept_word("where")) parse_conditions();
    if (accept_word("group")) {
      expect_word("by");
      parse_ref_list(groups_, false);
    }
    if (accept_word("order")) {
      expect_word("by");
      parse_ref_list(orders_, true);
    }
    if (accept_word("limit")) {
      if (peek().kind != TokenKind::Number) throw SyntaxError(peek().pos, "LIMIT expects a number");
      advance();
    }
    accept_symbol(";");
    if (peek().kind != TokenKind::End)
      throw SyntaxError(peek().pos, "unexpected token '" + peek().text + "'");
    return resolve();
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(cursor_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[cursor_ < tokens_.size() - 1 ? cursor_++ : cursor_]; }

  bool is_word(const Token& t, std::string_view w) const {
    return t.kind == TokenKind::Word && t.text == w;
  }
  bool is_symbol(const Token& t, std::string_view s) const {
    return t.kind == TokenKind::Symbol && t.text == s;
  }
  bool accept_word(std::string_view w) {
    if (!is_word(peek(), w)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!is_symbol(peek(), s)) return false;
    advance();
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w))
      throw SyntaxError(peek().pos, "expected " + to_upper(w) + " but found '" + describe(peek()) + "'");
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s))
      throw SyntaxError(peek().pos, "expected '" + std::string(s) + "' but found '" + describe(peek()) + "'");
  }
  static std::string to_upper(std::string_view w) {
    std::string out(w);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }
  static std::string describe(const Token& t) {
    return t.kind == TokenKind::End ? "end of input" : t.text;
  }

  void prescan() {
    const auto& words = unsupported_words();
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const auto& t = tokens_[i];
      if (t.kind != TokenKind::Word) continue;
      if (auto it = words.find(t.text); it != words.end())
        fail(ErrorKind::UnsupportedFeature, it->second);
      if (t.text == "select" && i > 0) fail(ErrorKind::UnsupportedFeature, "subquery");
    }
  }

  std::string identifier(const char* what) {
    const auto& t = peek();
    if (t.kind != TokenKind::Word || reserved_words().contains(t.text))
      throw SyntaxError(t.pos, std::string("expected ") + what + " but found '" + describe(t) + "'");
    advance();
    return t.text;
  }

  RawRef parse_ref() {
    std::size_t pos = peek().pos;
    std::string first = identifier("column name");
    if (accept_symbol(".")) {
      if (is_symbol(peek(), "*")) throw SyntaxError(peek().pos, "qualified '*' is not supported");
      return {first, identifier("column name"), pos};
    }
    return {std::nullopt, first, pos};
  }

  void reject_alias() {
    const auto& t = peek();
    if (t.kind == TokenKind::Word && !reserved_words().contains(t.text))
      fail(ErrorKind::UnsupportedFeature, "alias");
  }

  void parse_select_list() {
    do {
      if (accept_symbol("*")) {
        items_.push_back({Aggregate::None, true, {}});
        continue;
      }
      const auto& t = peek();
      if (t.kind == TokenKind::Word && is_symbol(peek(1), "(")) {
        auto agg = aggregate_of(t.text);
        if (!agg) fail(ErrorKind::UnsupportedFeature, "function " + to_upper(t.text));
        advance();
        advance();
        RawItem item{*agg, false, {}};
        if (is_symbol(peek(), "*")) {
          if (*agg != Aggregate::Count)
            throw SyntaxError(peek().pos, "only COUNT accepts '*'");
          advance();
          item.star = true;
        } else {
          item.ref = parse_ref();
        }
        expect_symbol(")");
        items_.push_back(std::move(item));
      } else {
        items_.push_back({Aggregate::None, false, parse_ref()});
      }
      reject_alias();
    } while (accept_symbol(","));
  }

  void parse_table() {
    if (is_symbol(peek(), "(")) fail(ErrorKind::UnsupportedFeature, "subquery");
    std::size_t pos = peek().pos;
    std::string name = identifier("table name");
    reject_alias();
    if (!schema_.table_index(name)) fail(ErrorKind::UnknownIdentifier, "table '" + name + "'");
    if (!tables_.insert(name).second) fail(ErrorKind::UnsupportedFeature, "self-join of '" + name + "'");
    (void)pos;
  }

  void parse_from() {
    parse_table();
    while (true) {
      if (accept_symbol(",")) {
        parse_table();
      } else if (is_word(peek(), "join") || is_word(peek(), "inner")) {
        accept_word("inner");
        expect_word("join");
        parse_table();
        expect_word("on");
        parse_conditions();
      } else {
        break;
      }
    }
  }

  RawOperand parse_operand() {
    const auto& t = peek();
    std::size_t pos = t.pos;
    if (t.kind == TokenKind::Number) {
      advance();
      return {std::nullopt, parse_number(t.text, pos, false), pos};
    }
    if (is_symbol(t, "-") || is_symbol(t, "+")) {
      bool negative = t.text == "-";
      advance();
      const auto& num = peek();
      if (num.kind != TokenKind::Number) throw SyntaxError(num.pos, "expected a number after sign");
      advance();
      return {std::nullopt, parse_number(num.text, pos, negative), pos};
    }
    if (t.kind == TokenKind::String) {
      advance();
      return {std::nullopt, Constant{t.text}, pos};
    }
    if (is_symbol(t, "(")) fail(ErrorKind::UnsupportedFeature, "parenthesized expression");
    return {parse_ref(), std::nullopt, pos};
  }

  static Constant parse_number(const std::string& text, std::size_t pos, bool negative) {
    double value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value))
      throw SyntaxError(pos, "numeric literal out of range");
    return Constant{negative ? -value : value};
  }

  std::optional<CompareOp> parse_op() {
    const auto& t = peek();
    std::optional<CompareOp> op;
    if (t.kind == TokenKind::Symbol) {
      if (t.text == "=") op = CompareOp::Eq;
      else if (t.text == "<") op = CompareOp::Lt;
      else if (t.text == ">") op = CompareOp::Gt;
      else if (t.text == "<=") op = CompareOp::Le;
      else if (t.text == ">=") op = CompareOp::Ge;
      else if (t.text == "<>" || t.text == "!=") op = CompareOp::Ne;
    } else if (is_word(t, "like")) {
      op = CompareOp::Like;
    }
    if (op) advance();
    return op;
  }

  void parse_condition() {
    if (accept_symbol("(")) {
      parse_condition_list();
      expect_symbol(")");
      return;
    }
    std::size_t pos = peek().pos;
    RawOperand lhs = parse_operand();
    auto op = parse_op();
    if (!op) throw SyntaxError(peek().pos, "expected a comparison operator");
    RawOperand rhs = parse_operand();
    conditions_.push_back({std::move(lhs), *op, std::move(rhs), pos});
  }

  void parse_condition_list() {
    do {
      parse_condition();
    } while (accept_word("and"));
  }

  void parse_conditions() { parse_condition_list(); }

  void parse_ref_list(std::vector<RawRef>& out, bool allow_asc) {
    do {
      out.push_back(parse_ref());
      if (allow_asc) accept_word("asc");
    } while (accept_symbol(","));
  }

  ColumnRef resolve_ref(const RawRef& raw) const {
    if (raw.table) {
      if (!tables_.contains(*raw.table))
        fail(ErrorKind::UnknownIdentifier, "table '" + *raw.table + "' is not in FROM");
      if (!schema_.has_column(*raw.table, raw.column))
        fail(ErrorKind::UnknownIdentifier, "column '" + *raw.table + "." + raw.column + "'");
      return {*raw.table, raw.column};
    }
    std::vector<std::string> owners;
    for (const auto& table : tables_)
      if (schema_.has_column(table, raw.column)) owners.push_back(table);
    if (owners.empty()) fail(ErrorKind::UnknownIdentifier, "column '" + raw.column + "'");
    if (owners.size() > 1)
      fail(ErrorKind::AmbiguousColumn,
           "column '" + raw.column + "' is owned by " + owners[0] + " and " + owners[1]);
    return {owners.front(), raw.column};
  }

  QueryIR resolve() const {
    QueryIR ir;
    ir.from_set = tables_;
    for (const auto& item : items_) {
      SelectItem resolved{item.aggregate, item.star, {}};
      if (!item.star) resolved.column = resolve_ref(item.ref);
      ir.select_set.insert(std::move(resolved));
    }
    for (const auto& cond : conditions_) {
      if (cond.lhs.ref && cond.rhs.ref) {
        ColumnRef a = resolve_ref(*cond.lhs.ref);
        ColumnRef b = resolve_ref(*cond.rhs.ref);
        if (cond.op != CompareOp::Eq) fail(ErrorKind::UnsupportedFeature, "non-equi join");
        if (a == b) fail(ErrorKind::UnsupportedFeature, "self-comparison of " + a.str());
        ir.join_set.insert(JoinPair::make(std::move(a), std::move(b)));
      } else if (cond.lhs.ref || cond.rhs.ref) {
        bool ref_left = cond.lhs.ref.has_value();
        const RawOperand& column_side = ref_left ? cond.lhs : cond.rhs;
        const RawOperand& constant_side = ref_left ? cond.rhs : cond.lhs;
        CompareOp op = ref_left ? cond.op : flip(cond.op);
        if (op == CompareOp::Like && !ref_left)
          throw SyntaxError(cond.pos, "LIKE expects a column on its left");
        ir.pred_set.insert({resolve_ref(*column_side.ref), op, *constant_side.constant});
      } else {
        fail(ErrorKind::UnsupportedFeature, "constant-only predicate");
      }
    }
    for (const auto& g : groups_) ir.group_set.insert(resolve_ref(g));
    for (const auto& o : orders_) ir.order_set.insert(resolve_ref(o));
    validate(ir, schema_);
    return ir;
  }

  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
  const Schema& schema_;

  std::set<std::string> tables_;
  std::vector<RawItem> items_;
  std::vector<RawCondition> conditions_;
  std::vector<RawRef> groups_;
  std::vector<RawRef> orders_;
};

}  // namespace

QueryIR parse(std::string_view sql, const Schema& schema) {
  std::size_t first = sql.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw SyntaxError(0, "empty statement");
  return Parser(sql, schema).run();
}

}  // namespace qspace
