// SPDX-License-Identifier: Apache-2.0
//
// Recursive descent parser for
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' integer)?
//   base   := number | ident | '(' expr ')' | func '(' expr ')' | '-' base
#include <cctype>
#include <charconv>

#include "imtk/expr.hpp"

namespace imtk {

namespace {

using K = Expr::Kind;

class Parser {
 public:
  Parser(std::string_view s, int dim) : s_(s), dim_(dim) {}

  Expr run() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected character");
    return e;
  }

 private:
  std::string_view s_;
  int dim_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& what) const { error_at(what, pos_); }
  [[noreturn]] void error_at(const std::string& what, std::size_t at) const {
    throw ParseError("syntax error at offset " + std::to_string(at) + ": " + what, at);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos_;
        e = Expr::raw(K::Sum, e, term());
      } else if (c == '-') {
        ++pos_;
        e = Expr::raw(K::Sum, e, Expr::raw(K::Negation, term()));
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      char c = peek();
      if (c == '*') {
        ++pos_;
        e = Expr::raw(K::Product, e, factor());
      } else if (c == '/') {
        ++pos_;
        e = Expr::raw(K::Quotient, e, factor());
      } else {
        return e;
      }
    }
  }

  Expr factor() {
    Expr b = base();
    if (peek() == '^') {
      ++pos_;
      skip();
      std::size_t start = pos_;
      bool neg = false;
      if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
        neg = s_[pos_] == '-';
        ++pos_;
      }
      std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) error_at("expected integer exponent", start);
      int n = 0;
      auto r = std::from_chars(s_.data() + digits, s_.data() + pos_, n);
      if (r.ec != std::errc()) error_at("exponent out of range", start);
      b = Expr::raw(K::Power, b, Expr(), neg ? -n : n);
    }
    return b;
  }

  Expr base() {
    char c = peek();
    const std::size_t start = pos_;
    if (c == '-') {
      ++pos_;
      return Expr::raw(K::Negation, base());
    }
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (peek() != ')') error("expected ')'");
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string_view id = s_.substr(start, pos_ - start);
      if (id == "sin" || id == "cos" || id == "exp" || id == "log") {
        if (peek() != '(') error("expected '(' after function name");
        ++pos_;
        Expr arg = expr();
        if (peek() != ')') error("expected ')'");
        ++pos_;
        K k = id == "sin" ? K::Sin : id == "cos" ? K::Cos : id == "exp" ? K::Exp : K::Log;
        return Expr::raw(k, arg);
      }
      return coordinate(id, start);
    }
    if (c == '\0') error("unexpected end of input");
    error("expected operand");
  }

  Expr coordinate(std::string_view id, std::size_t start) {
    bool ok = id.size() >= 2 && id[0] == 'x' && id[1] >= '1' && id[1] <= '9';
    for (std::size_t k = 1; ok && k < id.size(); ++k)
      ok = std::isdigit(static_cast<unsigned char>(id[k])) != 0;
    if (!ok) {
      throw ParseError("unknown identifier '" + std::string(id) + "' at offset " +
                           std::to_string(start),
                       start);
    }
    int idx = 0;
    auto r = std::from_chars(id.data() + 1, id.data() + id.size(), idx);
    if (r.ec != std::errc() || idx > dim_) {
      throw ParseError("coordinate index out of range: '" + std::string(id) +
                           "' in a chart of dimension " + std::to_string(dim_),
                       start);
    }
    return Expr::coordinate(idx - 1);
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      std::size_t d = pos_;
      digits();
      if (pos_ == d) pos_ = save;
    }
    double v = 0.0;
    auto r = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (r.ec != std::errc() || r.ptr != s_.data() + pos_) error_at("malformed number", start);
    return Expr::constant(v);
  }
};

}  // namespace

Expr parse(std::string_view text, int dim) { return Parser(text, dim).run(); }

}  // namespace imtk
