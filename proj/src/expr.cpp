// SPDX-License-Identifier: Apache-2.0
#include "imtk/expr.hpp"

#include <charconv>
#include <cmath>
#include <unordered_map>

namespace imtk {

namespace detail {
struct Node {
  Node() : a(NullTag{}), b(NullTag{}) {}
  Expr::Kind kind = Expr::Kind::Constant;
  double value = 0.0;
  int ival = 0;
  Expr a, b;
  std::shared_ptr<const SampledFunction> fn;
};
}  // namespace detail

using detail::Node;
using K = Expr::Kind;

namespace {

constexpr double kPole = 1e-12;

const std::shared_ptr<const Node>& zero_node() {
  static const auto z = std::make_shared<const Node>();
  return z;
}

int arity_of(K k) {
  switch (k) {
    case K::Constant:
    case K::Coordinate:
    case K::Sampled:
      return 0;
    case K::Sum:
    case K::Product:
    case K::Quotient:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}

Expr::Expr(double c) : Expr(constant(c)) {}

Expr Expr::constant(double c) {
  if (c == 0.0) return Expr();
  auto n = std::make_shared<Node>();
  n->kind = K::Constant;
  n->value = c;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::coordinate(int index) {
  if (index < 0) throw std::invalid_argument("negative coordinate index");
  auto n = std::make_shared<Node>();
  n->kind = K::Coordinate;
  n->ival = index;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::sampled(std::shared_ptr<const SampledFunction> f) {
  auto n = std::make_shared<Node>();
  n->kind = K::Sampled;
  n->fn = std::move(f);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::raw(Kind kind, const Expr& a, const Expr& b, int exponent) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->a = a;
  n->b = b;
  n->ival = exponent;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
int Expr::index() const { return node_->ival; }
int Expr::exponent() const { return node_->ival; }
std::size_t Expr::arity() const { return static_cast<std::size_t>(arity_of(node_->kind)); }
const Expr& Expr::child(std::size_t i) const { return i == 0 ? node_->a : node_->b; }
const SampledFunction& Expr::sampled_function() const { return *node_->fn; }
std::shared_ptr<const SampledFunction> Expr::sampled_ptr() const { return node_->fn; }

// ---------------------------------------------------------------- folding

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  if (a.kind() == K::Negation) return a.child(0);
  return Expr::raw(K::Negation, a);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::raw(K::Sum, a, b);
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expr::raw(K::Product, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_constant(1.0)) return a;
  if (a.is_zero()) return Expr();
  if (a.is_constant() && b.is_constant() && b.value() != 0.0)
    return Expr::constant(a.value() / b.value());
  return Expr::raw(K::Quotient, a, b);
}

Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }

Expr pow(const Expr& base, int n) {
  if (n == 0) return Expr::constant(1.0);
  if (n == 1) return base;
  if (base.is_constant() && (n > 0 || base.value() != 0.0))
    return Expr::constant(std::pow(base.value(), n));
  return Expr::raw(K::Power, base, Expr(), n);
}

Expr sin(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::sin(a.value()));
  return Expr::raw(K::Sin, a);
}

Expr cos(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::cos(a.value()));
  return Expr::raw(K::Cos, a);
}

Expr exp(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::exp(a.value()));
  return Expr::raw(K::Exp, a);
}

Expr log(const Expr& a) {
  if (a.is_constant() && a.value() > 0.0) return Expr::constant(std::log(a.value()));
  return Expr::raw(K::Log, a);
}

namespace {

Expr rebuild(const Expr& e, const Expr& a, const Expr& b) {
  switch (e.kind()) {
    case K::Sum: return a + b;
    case K::Product: return a * b;
    case K::Quotient: return a / b;
    case K::Power: return pow(a, e.exponent());
    case K::Negation: return -a;
    case K::Sin: return sin(a);
    case K::Cos: return cos(a);
    case K::Exp: return exp(a);
    case K::Log: return log(a);
    default: return e;
  }
}

template <class F>
Expr memo_map(const Expr& e, std::unordered_map<const void*, Expr>& memo, F&& leaf) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  Expr out;
  if (e.arity() == 0) {
    out = leaf(e);
  } else {
    Expr a = memo_map(e.child(0), memo, leaf);
    Expr b = e.arity() == 2 ? memo_map(e.child(1), memo, leaf) : Expr();
    out = rebuild(e, a, b);
  }
  memo.emplace(e.id(), out);
  return out;
}

}  // namespace

Expr fold(const Expr& e) {
  std::unordered_map<const void*, Expr> memo;
  return memo_map(e, memo, [](const Expr& x) { return x; });
}

Expr substitute(const Expr& e, std::span<const Expr> replacement) {
  std::unordered_map<const void*, Expr> memo;
  return memo_map(e, memo, [&](const Expr& x) {
    if (x.kind() == K::Coordinate) {
      if (static_cast<std::size_t>(x.index()) >= replacement.size())
        throw std::out_of_range("substitute: coordinate without replacement");
      return replacement[static_cast<std::size_t>(x.index())];
    }
    if (x.kind() == K::Sampled)
      throw std::invalid_argument("substitute: sampled leaves cannot be composed");
    return x;
  });
}

// ---------------------------------------------------------- differentiation

namespace {

Expr sampled_partial(const Expr& e, int i) {
  auto parent = e.sampled_ptr();
  auto d = std::make_shared<SampledFunction>();
  d->name = "d" + std::to_string(i + 1) + "(" + parent->name + ")";
  d->step = parent->step;
  d->fn = [parent, i](std::span<const double> p) {
    std::vector<double> q(p.begin(), p.end());
    const double h = parent->step;
    const double x0 = q[static_cast<std::size_t>(i)];
    auto at = [&](double t) {
      q[static_cast<std::size_t>(i)] = x0 + t * h;
      return parent->fn(q);
    };
    // fourth order central stencil
    return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
  };
  return Expr::sampled(std::move(d));
}

Expr diff(const Expr& e, int i, std::unordered_map<const void*, Expr>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  Expr out;
  switch (e.kind()) {
    case K::Constant: out = Expr(); break;
    case K::Coordinate: out = e.index() == i ? Expr(1.0) : Expr(); break;
    case K::Sampled: out = sampled_partial(e, i); break;
    case K::Sum: out = diff(e.child(0), i, memo) + diff(e.child(1), i, memo); break;
    case K::Negation: out = -diff(e.child(0), i, memo); break;
    case K::Product: {
      const Expr& a = e.child(0);
      const Expr& b = e.child(1);
      out = diff(a, i, memo) * b + a * diff(b, i, memo);
      break;
    }
    case K::Quotient: {
      const Expr& a = e.child(0);
      const Expr& b = e.child(1);
      Expr da = diff(a, i, memo);
      Expr db = diff(b, i, memo);
      if (db.is_zero()) {
        out = da / b;
      } else {
        out = (da * b - a * db) / pow(b, 2);
      }
      break;
    }
    case K::Power: {
      const int n = e.exponent();
      out = Expr(static_cast<double>(n)) * pow(e.child(0), n - 1) * diff(e.child(0), i, memo);
      break;
    }
    case K::Sin: out = cos(e.child(0)) * diff(e.child(0), i, memo); break;
    case K::Cos: out = -(sin(e.child(0)) * diff(e.child(0), i, memo)); break;
    case K::Exp: out = e * diff(e.child(0), i, memo); break;
    case K::Log: out = diff(e.child(0), i, memo) / e.child(0); break;
  }
  memo.emplace(e.id(), out);
  return out;
}

}  // namespace

Expr differentiate(const Expr& e, int i) {
  std::unordered_map<const void*, Expr> memo;
  return diff(e, i, memo);
}

// ------------------------------------------------------------- inspection

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case K::Constant: return a.value() == b.value();
    case K::Coordinate: return a.index() == b.index();
    case K::Sampled: return a.sampled_ptr() == b.sampled_ptr();
    case K::Power:
      return a.exponent() == b.exponent() && structurally_equal(a.child(0), b.child(0));
    default:
      break;
  }
  for (std::size_t k = 0; k < a.arity(); ++k)
    if (!structurally_equal(a.child(k), b.child(k))) return false;
  return true;
}

namespace {
template <class F>
void visit_unique(const Expr& e, std::unordered_map<const void*, bool>& seen, F&& f) {
  if (!seen.emplace(e.id(), true).second) return;
  for (std::size_t k = 0; k < e.arity(); ++k) visit_unique(e.child(k), seen, f);
  f(e);
}
}  // namespace

int max_coordinate(const Expr& e) {
  int m = -1;
  std::unordered_map<const void*, bool> seen;
  visit_unique(e, seen, [&](const Expr& x) {
    if (x.kind() == K::Coordinate) m = std::max(m, x.index());
  });
  return m;
}

std::size_t node_count(const Expr& e) {
  std::unordered_map<const void*, bool> seen;
  std::size_t n = 0;
  visit_unique(e, seen, [&](const Expr&) { ++n; });
  return n;
}

// ---------------------------------------------------------------- printing

namespace {

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool negative_looking(const Expr& e) {
  return e.kind() == K::Negation || (e.is_constant() && e.value() < 0.0);
}

// 1 sum, 2 product, 3 unary minus, 4 power, 5 atom
int precedence(const Expr& e) {
  if (negative_looking(e)) return 3;
  switch (e.kind()) {
    case K::Sum: return 1;
    case K::Product:
    case K::Quotient: return 2;
    case K::Power: return 4;
    default: return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_min(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

// operand of a unary minus, or base of a power: needs a `base`
void print_base(const Expr& e, std::string& out) {
  const int p = precedence(e);
  if (p == 5 || p == 3) {
    print(e, out);
  } else {
    out += '(';
    print(e, out);
    out += ')';
  }
}

void print_negated(const Expr& e, std::string& out) {
  // e is negative looking; print its absolute part as a base
  out += '-';
  if (e.is_constant()) {
    out += number(-e.value());
  } else {
    print_base(e.child(0), out);
  }
}

const char* func_name(K k) {
  switch (k) {
    case K::Sin: return "sin";
    case K::Cos: return "cos";
    case K::Exp: return "exp";
    case K::Log: return "log";
    default: return "?";
  }
}

void print(const Expr& e, std::string& out) {
  if (negative_looking(e)) {
    print_negated(e, out);
    return;
  }
  switch (e.kind()) {
    case K::Constant: out += number(e.value()); return;
    case K::Coordinate: out += 'x'; out += std::to_string(e.index() + 1); return;
    case K::Sampled: out += '<'; out += e.sampled_function().name; out += '>'; return;
    case K::Sum: {
      print(e.child(0), out);
      const Expr& b = e.child(1);
      if (negative_looking(b)) {
        out += " - ";
        if (b.is_constant()) {
          out += number(-b.value());
        } else {
          print_min(b.child(0), 2, out);
        }
      } else {
        out += " + ";
        print_min(b, 2, out);
      }
      return;
    }
    case K::Product:
    case K::Quotient:
      print_min(e.child(0), 2, out);
      out += e.kind() == K::Product ? '*' : '/';
      print_min(e.child(1), 3, out);
      return;
    case K::Power:
      print_base(e.child(0), out);
      out += '^';
      out += std::to_string(e.exponent());
      return;
    case K::Sin:
    case K::Cos:
    case K::Exp:
    case K::Log:
      out += func_name(e.kind());
      out += '(';
      print(e.child(0), out);
      out += ')';
      return;
    case K::Negation: return;  // handled above
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string s;
  print(e, s);
  return s;
}

// ------------------------------------------------------------- evaluation

ExprProgram::ExprProgram(std::span<const Expr> roots) {
  std::unordered_map<const void*, int> slot;
  // iterative post-order to survive deep left-leaning sums
  for (const Expr& root : roots) {
    std::vector<std::pair<Expr, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (slot.count(e.id())) continue;
      if (!expanded && e.arity() > 0) {
        stack.push_back({e, true});
        for (std::size_t k = e.arity(); k-- > 0;)
          if (!slot.count(e.child(k).id())) stack.push_back({e.child(k), false});
        continue;
      }
      Instr ins;
      ins.kind = e.kind();
      switch (e.kind()) {
        case K::Constant: ins.value = e.value(); break;
        case K::Coordinate: ins.ival = e.index(); break;
        case K::Power: ins.ival = e.exponent(); break;
        case K::Sampled: ins.fn = &e.sampled_function(); break;
        default: break;
      }
      if (e.arity() >= 1) ins.a = slot.at(e.child(0).id());
      if (e.arity() == 2) ins.b = slot.at(e.child(1).id());
      slot.emplace(e.id(), static_cast<int>(code_.size()));
      code_.push_back(ins);
      keep_.push_back(e);
    }
    outputs_.push_back(slot.at(root.id()));
  }
  regs_.resize(code_.size());
}

void ExprProgram::fail(std::size_t instr, const std::string& why) const {
  std::string sub = to_string(keep_[instr]);
  if (sub.size() > 240) sub = sub.substr(0, 240) + "...";
  throw EvalError(why + " in " + sub, sub);
}

void ExprProgram::evaluate(std::span<const double> point, std::span<double> out) const {
  double* r = regs_.data();
  for (std::size_t k = 0; k < code_.size(); ++k) {
    const Instr& in = code_[k];
    switch (in.kind) {
      case K::Constant: r[k] = in.value; break;
      case K::Coordinate:
        if (static_cast<std::size_t>(in.ival) >= point.size())
          throw std::out_of_range("evaluate: point has too few coordinates");
        r[k] = point[static_cast<std::size_t>(in.ival)];
        break;
      case K::Sampled: r[k] = in.fn->fn(point); break;
      case K::Sum: r[k] = r[in.a] + r[in.b]; break;
      case K::Product: r[k] = r[in.a] * r[in.b]; break;
      case K::Quotient:
        if (std::abs(r[in.b]) < kPole) fail(k, "pole: denominator vanishes");
        r[k] = r[in.a] / r[in.b];
        break;
      case K::Power:
        if (in.ival < 0 && std::abs(r[in.a]) < kPole) fail(k, "pole: negative power of zero");
        r[k] = std::pow(r[in.a], in.ival);
        break;
      case K::Negation: r[k] = -r[in.a]; break;
      case K::Sin: r[k] = std::sin(r[in.a]); break;
      case K::Cos: r[k] = std::cos(r[in.a]); break;
      case K::Exp: r[k] = std::exp(r[in.a]); break;
      case K::Log:
        if (!(r[in.a] > 0.0)) fail(k, "pole: log of a non-positive value");
        r[k] = std::log(r[in.a]);
        break;
    }
  }
  for (std::size_t j = 0; j < outputs_.size(); ++j) out[j] = r[outputs_[j]];
}

std::vector<double> ExprProgram::evaluate(std::span<const double> point) const {
  std::vector<double> out(outputs_.size());
  evaluate(point, out);
  return out;
}

double evaluate(const Expr& e, std::span<const double> point) {
  ExprProgram p(std::span<const Expr>(&e, 1));
  return p.evaluate(point)[0];
}

}  // namespace imtk
