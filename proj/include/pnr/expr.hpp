#pragma once

// Tensor-entry mini-language: rational expressions in coordinates x1..xn.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ('-')? atom ('^' integer)?
//   atom   := number | ident | '(' expr ')'
//
// ident is x1..xn or a declared named constant; constants are inlined at parse time.

#include "pnr/errors.hpp"
#include "pnr/jet.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pnr {

using ConstantTable = std::map<std::string, double, std::less<>>;

class Expr {
 public:
  enum class Kind { Constant, Variable, Negate, Add, Subtract, Multiply, Divide, Power };

  struct Node {
    Kind kind;
    double constant = 0.0;
    int variable = -1;  // 0-based coordinate index
    int exponent = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double c) { return Expr(make(Node{Kind::Constant, c})); }
  static Expr variable(int index) { return Expr(make(Node{Kind::Variable, 0.0, index})); }

  static Expr parse(std::string_view source, int dimension, const ConstantTable& constants = {});

  friend Expr operator+(const Expr& a, const Expr& b) { return binary(Kind::Add, a, b); }
  friend Expr operator-(const Expr& a, const Expr& b) { return binary(Kind::Subtract, a, b); }
  friend Expr operator*(const Expr& a, const Expr& b) { return binary(Kind::Multiply, a, b); }
  friend Expr operator/(const Expr& a, const Expr& b) { return binary(Kind::Divide, a, b); }
  friend Expr operator-(const Expr& a) { return Expr(make(Node{Kind::Negate, 0.0, -1, 0, a.root_})); }
  friend Expr pow(const Expr& a, int p) { return Expr(make(Node{Kind::Power, 0.0, -1, p, a.root_})); }

  double evaluate(std::span<const double> x) const { return eval_value(*root_, x); }

  /// Forward-mode jet of the requested order at x. Throws DomainError on division by zero.
  Jet2 jet(std::span<const double> x, int order = 2) const {
    return eval_jet(*root_, x, static_cast<int>(x.size()), order);
  }

  /// Source text in the mini-language; parses back to an identical tree.
  std::string to_string() const { return print(*root_); }

  bool is_zero() const { return root_->kind == Kind::Constant && root_->constant == 0.0; }
  bool is_constant() const { return root_->kind == Kind::Constant; }

  /// Largest 0-based variable index referenced, or -1.
  int max_variable() const { return max_var(*root_); }

  const Node& root() const { return *root_; }

 private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  static std::shared_ptr<const Node> make(Node n) { return std::make_shared<const Node>(std::move(n)); }
  static Expr binary(Kind k, const Expr& a, const Expr& b) {
    return Expr(make(Node{k, 0.0, -1, 0, a.root_, b.root_}));
  }

  static double eval_value(const Node& n, std::span<const double> x) {
    switch (n.kind) {
      case Kind::Constant: return n.constant;
      case Kind::Variable: return x[n.variable];
      case Kind::Negate: return -eval_value(*n.lhs, x);
      case Kind::Add: return eval_value(*n.lhs, x) + eval_value(*n.rhs, x);
      case Kind::Subtract: return eval_value(*n.lhs, x) - eval_value(*n.rhs, x);
      case Kind::Multiply: return eval_value(*n.lhs, x) * eval_value(*n.rhs, x);
      case Kind::Divide: {
        const double d = eval_value(*n.rhs, x);
        if (d == 0.0) throw DomainError("division by zero in (" + print(*n.rhs) + ")");
        return eval_value(*n.lhs, x) / d;
      }
      case Kind::Power: {
        const double b = eval_value(*n.lhs, x);
        double r = 1.0;
        for (int i = 0; i < n.exponent; ++i) r *= b;
        return r;
      }
    }
    return 0.0;
  }

  static Jet2 eval_jet(const Node& n, std::span<const double> x, int dim, int order) {
    switch (n.kind) {
      case Kind::Constant: return Jet2::constant(n.constant, dim, order);
      case Kind::Variable: return Jet2::variable(n.variable, x[n.variable], dim, order);
      case Kind::Negate: return -eval_jet(*n.lhs, x, dim, order);
      case Kind::Add: return eval_jet(*n.lhs, x, dim, order) + eval_jet(*n.rhs, x, dim, order);
      case Kind::Subtract: return eval_jet(*n.lhs, x, dim, order) - eval_jet(*n.rhs, x, dim, order);
      case Kind::Multiply: return eval_jet(*n.lhs, x, dim, order) * eval_jet(*n.rhs, x, dim, order);
      case Kind::Divide: {
        Jet2 d = eval_jet(*n.rhs, x, dim, order);
        if (d.value == 0.0) throw DomainError("division by zero in (" + print(*n.rhs) + ")");
        return eval_jet(*n.lhs, x, dim, order) * reciprocal(d);
      }
      case Kind::Power: return pnr::pow(eval_jet(*n.lhs, x, dim, order), n.exponent);
    }
    return Jet2::constant(0.0, dim, order);
  }

  static int max_var(const Node& n) {
    int m = n.kind == Kind::Variable ? n.variable : -1;
    if (n.lhs) m = std::max(m, max_var(*n.lhs));
    if (n.rhs) m = std::max(m, max_var(*n.rhs));
    return m;
  }

  // Printing levels: 1 = expr, 2 = term, 3 = factor, 4 = atom.
  static int level(const Node& n) {
    switch (n.kind) {
      case Kind::Add:
      case Kind::Subtract: return 1;
      case Kind::Multiply:
      case Kind::Divide: return 2;
      case Kind::Negate:
      case Kind::Power: return 3;
      case Kind::Constant: return n.constant < 0.0 || std::signbit(n.constant) ? 3 : 4;
      case Kind::Variable: return 4;
    }
    return 4;
  }

  static std::string wrap(const Node& n, int min_level) {
    std::string s = print(n);
    return level(n) >= min_level ? s : "(" + s + ")";
  }

  static std::string print(const Node& n) {
    switch (n.kind) {
      case Kind::Constant: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", std::fabs(n.constant));
        std::string s = buf;
        return std::signbit(n.constant) ? "-" + s : s;
      }
      case Kind::Variable: return "x" + std::to_string(n.variable + 1);
      case Kind::Negate: {
        // '-' binds an atom or a power of an atom.
        const Node& o = *n.lhs;
        const bool bare = level(o) == 4 || (o.kind == Kind::Power && level(*o.lhs) == 4);
        return "-" + (bare ? print(o) : "(" + print(o) + ")");
      }
      case Kind::Add: return wrap(*n.lhs, 1) + " + " + wrap(*n.rhs, 2);
      case Kind::Subtract: return wrap(*n.lhs, 1) + " - " + wrap(*n.rhs, 2);
      case Kind::Multiply: return wrap(*n.lhs, 2) + "*" + wrap(*n.rhs, 3);
      case Kind::Divide: return wrap(*n.lhs, 2) + "/" + wrap(*n.rhs, 3);
      case Kind::Power: return wrap(*n.lhs, 4) + "^" + std::to_string(n.exponent);
    }
    return {};
  }

  std::shared_ptr<const Node> root_;

  friend class ExprParser;
};

/// Recursive-descent parser for the grammar at the top of this header.
class ExprParser {
 public:
  ExprParser(std::string_view src, int dimension, const ConstantTable& constants)
      : src_(src), dim_(dimension), constants_(constants) {}

  Expr parse() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_, {"number", "identifier", "'('", "'-'"});
    Expr e = expr();
    skip();
    if (pos_ < src_.size()) throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_,
                                             {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
    return e;
  }

 private:
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  Expr expr() {
    Expr lhs = term();
    while (true) {
      if (peek('+')) {
        ++pos_;
        lhs = lhs + term();
      } else if (peek('-')) {
        ++pos_;
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    while (true) {
      if (peek('*')) {
        ++pos_;
        lhs = lhs * factor();
      } else if (peek('/')) {
        ++pos_;
        lhs = lhs / factor();
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    bool negate = false;
    if (peek('-')) {
      ++pos_;
      negate = true;
    }
    Expr base = atom();
    if (peek('^')) {
      ++pos_;
      skip();
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (start == pos_) throw ParseError("missing exponent", pos_, {"integer"});
      const std::string digits(src_.substr(start, pos_ - start));
      if (digits.size() > 4) throw ParseError("exponent too large", start, {"integer <= 9999"});
      base = pow(base, std::stoi(digits));
    }
    return negate ? -base : base;
  }

  Expr atom() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_, {"number", "identifier", "'('"});
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!peek(')')) throw ParseError("unbalanced parenthesis", pos_, {"')'"});
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_, {"number", "identifier", "'('"});
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t count = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) throw ParseError("malformed number", start, {"digit"});
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) throw ParseError("malformed exponent", pos_, {"digit"});
    }
    return Expr::constant(std::stod(std::string(src_.substr(start, pos_ - start))));
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name.size() >= 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
      bool all_digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        all_digits = all_digits && std::isdigit(static_cast<unsigned char>(name[i]));
      if (all_digits) {
        if (name.size() > 4) throw UnknownIdentifierError(std::string(name), start);
        const int index = std::stoi(std::string(name.substr(1)));
        if (index > dim_) throw UnknownIdentifierError(std::string(name), start);
        return Expr::variable(index - 1);
      }
    }
    if (auto it = constants_.find(name); it != constants_.end()) return Expr::constant(it->second);
    throw UnknownIdentifierError(std::string(name), start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int dim_;
  const ConstantTable& constants_;
};

inline Expr Expr::parse(std::string_view source, int dimension, const ConstantTable& constants) {
  return ExprParser(source, dimension, constants).parse();
}

/// Order-2 jet of `e` at `x`; Hessian returned exactly symmetric.
inline Jet2 eval_jet2(const Expr& e, std::span<const double> x) {
  Jet2 j = e.jet(x, 2);
  j.hessian = (0.5 * (j.hessian + j.hessian.transpose())).eval();
  return j;
}

}  // namespace pnr
