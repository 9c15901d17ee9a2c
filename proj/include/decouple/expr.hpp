#pragma once

#include "decouple/core.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

namespace decouple::expr {

/// Parse failure with a 1-based source position.
class ParseFailure : public Error {
 public:
  ParseFailure(int line, int column, const std::string& msg, ErrorCode code = ErrorCode::SyntaxError)
      : Error(code,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

enum class Op {
  Num, Var, Ref, Vec, Call, Neg, Not, Add, Sub, Mul, Div, Pow,
  Lt, Le, Gt, Ge, Eq, Ne, And, Or, If,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Num;
  double value = 0.0;  // Num
  int index = 0;       // Var
  std::string name;    // Ref, Call
  std::vector<NodePtr> args;
  int line = 1, column = 1;
};

namespace detail {

struct Token {
  enum Kind { Number, Ident, Sym, End } kind = End;
  std::string text;
  double number = 0.0;
  int line = 1, column = 1;
};

inline std::vector<Token> lex(const std::string& src, int line0, int col0) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = line0, col = col0;
  auto adv = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                         std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t used = 0;
      t.kind = Token::Number;
      t.number = std::stod(src.substr(i), &used);
      t.text = src.substr(i, used);
      adv(used);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Token::Ident;
      t.text = src.substr(i, j - i);
      adv(j - i);
    } else {
      static const char* two[] = {"<=", ">=", "==", "!="};
      t.kind = Token::Sym;
      t.text = std::string(1, c);
      for (const char* s : two)
        if (src.compare(i, 2, s) == 0) t.text = s;
      if (std::string("+-*/^(),[]<>").find(c) == std::string::npos && t.text.size() == 1)
        throw ParseFailure(line, col, std::string("unexpected character '") + c + "'");
      adv(t.text.size());
    }
    out.push_back(t);
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const std::map<std::string, NodePtr>* defs)
      : toks_(std::move(toks)), defs_(defs) {}

  NodePtr parse_all() {
    auto e = expr();
    if (peek().kind != Token::End) fail(peek(), "unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseFailure(t.line, t.column, msg);
  }
  bool is_sym(const char* s) const { return peek().kind == Token::Sym && peek().text == s; }
  bool is_word(const char* s) const { return peek().kind == Token::Ident && peek().text == s; }
  void expect_sym(const char* s) {
    if (!is_sym(s)) fail(peek(), std::string("expected '") + s + "'");
    take();
  }
  static NodePtr make(Op op, const Token& at, std::vector<NodePtr> args = {}) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->line = at.line;
    n->column = at.column;
    n->args = std::move(args);
    return n;
  }

  NodePtr expr() {
    if (is_word("if")) {
      Token at = take();
      auto c = expr();
      if (!is_word("then")) fail(peek(), "expected 'then'");
      take();
      auto a = expr();
      if (!is_word("else")) fail(peek(), "expected 'else'");
      take();
      auto b = expr();
      return make(Op::If, at, {c, a, b});
    }
    return disjunction();
  }
  NodePtr disjunction() {
    auto l = conjunction();
    while (is_word("or")) {
      Token at = take();
      l = make(Op::Or, at, {l, conjunction()});
    }
    return l;
  }
  NodePtr conjunction() {
    auto l = comparison();
    while (is_word("and")) {
      Token at = take();
      l = make(Op::And, at, {l, comparison()});
    }
    return l;
  }
  NodePtr comparison() {
    auto l = additive();
    static const std::pair<const char*, Op> ops[] = {{"<", Op::Lt}, {"<=", Op::Le}, {">", Op::Gt},
                                                     {">=", Op::Ge}, {"==", Op::Eq}, {"!=", Op::Ne}};
    for (auto [s, op] : ops)
      if (is_sym(s)) {
        Token at = take();
        return make(op, at, {l, additive()});
      }
    return l;
  }
  NodePtr additive() {
    auto l = multiplicative();
    while (is_sym("+") || is_sym("-")) {
      Token at = take();
      l = make(at.text == "+" ? Op::Add : Op::Sub, at, {l, multiplicative()});
    }
    return l;
  }
  NodePtr multiplicative() {
    auto l = unary();
    while (is_sym("*") || is_sym("/")) {
      Token at = take();
      l = make(at.text == "*" ? Op::Mul : Op::Div, at, {l, unary()});
    }
    return l;
  }
  NodePtr unary() {
    if (is_sym("-")) {
      Token at = take();
      return make(Op::Neg, at, {unary()});
    }
    if (is_word("not")) {
      Token at = take();
      return make(Op::Not, at, {unary()});
    }
    auto b = primary();
    if (is_sym("^")) {
      Token at = take();
      return make(Op::Pow, at, {b, unary()});
    }
    return b;
  }
  NodePtr primary() {
    const Token t = peek();
    if (t.kind == Token::Number) {
      take();
      auto n = make(Op::Num, t);
      std::const_pointer_cast<Node>(n)->value = t.number;
      return n;
    }
    if (is_sym("(")) {
      take();
      auto e = expr();
      expect_sym(")");
      return e;
    }
    if (is_sym("[")) {
      take();
      std::vector<NodePtr> items;
      if (!is_sym("]")) {
        items.push_back(expr());
        while (is_sym(",")) {
          take();
          items.push_back(expr());
        }
      }
      expect_sym("]");
      return make(Op::Vec, t, std::move(items));
    }
    if (t.kind == Token::Ident) {
      for (const char* k : {"if", "then", "else", "and", "or", "not"})
        if (t.text == k) fail(t, "unexpected '" + t.text + "'");
      take();
      if (is_sym("(")) {
        take();
        std::vector<NodePtr> args;
        if (!is_sym(")")) {
          args.push_back(expr());
          while (is_sym(",")) {
            take();
            args.push_back(expr());
          }
        }
        expect_sym(")");
        auto n = make(Op::Call, t, std::move(args));
        std::const_pointer_cast<Node>(n)->name = t.text;
        return n;
      }
      if (t.text == "inf") {
        auto n = make(Op::Num, t);
        std::const_pointer_cast<Node>(n)->value = kInf;
        return n;
      }
      if (auto v = variable_index(t.text)) {
        auto n = make(Op::Var, t);
        std::const_pointer_cast<Node>(n)->index = *v;
        return n;
      }
      if (defs_ && defs_->count(t.text)) {
        auto n = make(Op::Ref, t, {defs_->at(t.text)});
        std::const_pointer_cast<Node>(n)->name = t.text;
        return n;
      }
      auto n = make(Op::Ref, t);
      std::const_pointer_cast<Node>(n)->name = t.text;
      return n;
    }
    fail(t, t.kind == Token::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  std::optional<int> variable_index(const std::string& s) const {
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    if (s.size() > 1 && s.size() < 8 && s[0] == 'x' && std::all_of(s.begin() + 1, s.end(), ::isdigit)) {
      int k = std::stoi(s.substr(1));
      if (k >= 1) return k - 1;
    }
    return std::nullopt;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const std::map<std::string, NodePtr>* defs_;
};

}  // namespace detail

/// Parses an expression. Names found in defs become references to those definitions;
/// x, y, z and x1..xn are coordinates.
inline NodePtr parse(const std::string& src, const std::map<std::string, NodePtr>* defs = nullptr,
                     int line = 1, int column = 1) {
  return detail::Parser(detail::lex(src, line, column), defs).parse_all();
}

/// Checks that the tree is a scalar expression over known functions and resolved names.
inline void validate_scalar(const NodePtr& n, int dim) {
  switch (n->op) {
    case Op::Vec: throw ParseFailure(n->line, n->column, "vector not allowed here");
    case Op::Var:
      if (n->index >= dim) throw ParseFailure(n->line, n->column, "coordinate beyond dimension", ErrorCode::DimensionMismatch);
      break;
    case Op::Ref:
      if (n->args.empty()) throw ParseFailure(n->line, n->column, "unknown name '" + n->name + "'", ErrorCode::UndefinedSymbol);
      return;
    case Op::Call: {
      static const std::map<std::string, std::pair<int, int>> arity{
          {"abs", {1, 1}}, {"sqrt", {1, 1}}, {"exp", {1, 1}}, {"log", {1, 1}}, {"sin", {1, 1}},
          {"cos", {1, 1}}, {"min", {1, 64}}, {"max", {1, 64}}};
      auto it = arity.find(n->name);
      if (it == arity.end()) throw ParseFailure(n->line, n->column, "unknown function '" + n->name + "'", ErrorCode::UndefinedSymbol);
      int k = static_cast<int>(n->args.size());
      if (k < it->second.first || k > it->second.second)
        throw ParseFailure(n->line, n->column, "wrong number of arguments to '" + n->name + "'");
      break;
    }
    default: break;
  }
  for (const auto& a : n->args) validate_scalar(a, dim);
}

inline double eval(const Node& n, const Point& x) {
  auto a = [&](int i) { return eval(*n.args[i], x); };
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::Var: return x[n.index];
    case Op::Ref: return a(0);
    case Op::Neg: return -a(0);
    case Op::Not: return a(0) == 0.0 ? 1.0 : 0.0;
    case Op::Add: return a(0) + a(1);
    case Op::Sub: return a(0) - a(1);
    case Op::Mul: return a(0) * a(1);
    case Op::Div: return a(0) / a(1);
    case Op::Pow: return std::pow(a(0), a(1));
    case Op::Lt: return a(0) < a(1);
    case Op::Le: return a(0) <= a(1);
    case Op::Gt: return a(0) > a(1);
    case Op::Ge: return a(0) >= a(1);
    case Op::Eq: return a(0) == a(1);
    case Op::Ne: return a(0) != a(1);
    case Op::And: return (a(0) != 0.0 && a(1) != 0.0) ? 1.0 : 0.0;
    case Op::Or: return (a(0) != 0.0 || a(1) != 0.0) ? 1.0 : 0.0;
    case Op::If: return a(0) != 0.0 ? a(1) : a(2);
    case Op::Call: {
      const auto& f = n.name;
      if (f == "abs") return std::abs(a(0));
      if (f == "sqrt") return std::sqrt(a(0));
      if (f == "exp") return std::exp(a(0));
      if (f == "log") return std::log(a(0));
      if (f == "sin") return std::sin(a(0));
      if (f == "cos") return std::cos(a(0));
      double r = a(0);
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        double v = eval(*n.args[i], x);
        r = f == "min" ? std::min(r, v) : std::max(r, v);
      }
      return r;
    }
    case Op::Vec: break;
  }
  throw ParseFailure(n.line, n.column, "cannot evaluate a vector");
}

inline std::string format_number(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "(-inf)";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (v < 0) s = "(" + s + ")";
  return s;
}

/// Fully parenthesized text that parses back to an equivalent tree.
inline std::string print(const Node& n) {
  auto p = [&](int i) { return print(*n.args[i]); };
  auto bin = [&](const char* op) { return "(" + p(0) + " " + op + " " + p(1) + ")"; };
  switch (n.op) {
    case Op::Num: return format_number(n.value);
    case Op::Var: return "x" + std::to_string(n.index + 1);
    case Op::Ref: return n.name;
    case Op::Neg: return "(-" + p(0) + ")";
    case Op::Not: return "(not " + p(0) + ")";
    case Op::Add: return bin("+");
    case Op::Sub: return bin("-");
    case Op::Mul: return bin("*");
    case Op::Div: return bin("/");
    case Op::Pow: return bin("^");
    case Op::Lt: return bin("<");
    case Op::Le: return bin("<=");
    case Op::Gt: return bin(">");
    case Op::Ge: return bin(">=");
    case Op::Eq: return bin("==");
    case Op::Ne: return bin("!=");
    case Op::And: return bin("and");
    case Op::Or: return bin("or");
    case Op::If: return "(if " + p(0) + " then " + p(1) + " else " + p(2) + ")";
    case Op::Vec:
    case Op::Call: {
      std::string s = n.op == Op::Vec ? "[" : n.name + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) s += (i ? ", " : "") + p(static_cast<int>(i));
      return s + (n.op == Op::Vec ? "]" : ")");
    }
  }
  return "";
}

}  // namespace decouple::expr
