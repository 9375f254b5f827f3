// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace imtk {

/// Raised when an expression string cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised on a pole (vanishing denominator, log of a non-positive value).
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::string subtree)
      : std::runtime_error(what), subtree_(std::move(subtree)) {}
  const std::string& subtree() const { return subtree_; }

 private:
  std::string subtree_;
};

/// Opaque numeric leaf: a function of the chart point with no closed form.
struct SampledFunction {
  std::string name;
  std::function<double(std::span<const double>)> fn;
  double step = 1e-4;  ///< step of the central stencil used for derivatives
};

namespace detail {
struct Node;
struct NullTag {};
}

/// Immutable expression tree in the chart coordinates.
///
/// Subtrees are shared, so a tree produced by differentiation is a DAG.
/// Coordinates are 0-indexed here and 1-indexed in the text syntax.
class Expr {
 public:
  enum class Kind : std::uint8_t {
    Constant,
    Coordinate,
    Sum,
    Product,
    Quotient,
    Power,
    Negation,
    Sin,
    Cos,
    Exp,
    Log,
    Sampled
  };

  Expr();  // the constant 0
  Expr(double c);  // NOLINT: implicit constants keep formulas readable

  static Expr constant(double c);
  static Expr coordinate(int index);
  static Expr sampled(std::shared_ptr<const SampledFunction> f);
  /// Builds a node without any folding (the parser uses this).
  static Expr raw(Kind kind, const Expr& a, const Expr& b = Expr(), int exponent = 0);

  Kind kind() const;
  double value() const;     ///< Constant only
  int index() const;        ///< Coordinate only
  int exponent() const;     ///< Power only
  std::size_t arity() const;
  const Expr& child(std::size_t i) const;
  const SampledFunction& sampled_function() const;
  std::shared_ptr<const SampledFunction> sampled_ptr() const;

  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_constant(double c) const { return is_constant() && value() == c; }
  bool is_zero() const { return is_constant(0.0); }

  /// Identity of the shared node, used for memoization.
  const void* id() const { return node_.get(); }

 private:
  friend struct detail::Node;
  explicit Expr(detail::NullTag) {}
  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::Node> node_;
};

// Folding constructors: constant folding and neutral elements only.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr pow(const Expr& base, int n);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);

/// Rebuilds the tree bottom-up through the folding constructors.
Expr fold(const Expr& e);

/// Partial derivative in coordinate `i` (0-indexed), folded.
Expr differentiate(const Expr& e, int i);

/// Replaces coordinate j by `replacement[j]`.
Expr substitute(const Expr& e, std::span<const Expr> replacement);

bool structurally_equal(const Expr& a, const Expr& b);

/// Largest coordinate index occurring in e, or -1.
int max_coordinate(const Expr& e);

/// Number of distinct nodes of the DAG.
std::size_t node_count(const Expr& e);

std::string to_string(const Expr& e);

/// Parses the text syntax; coordinate indices must lie below `dim`.
Expr parse(std::string_view text, int dim);

double evaluate(const Expr& e, std::span<const double> point);

/// A batch of expressions flattened into a straight-line program.
///
/// Shared subtrees are evaluated once per point.
class ExprProgram {
 public:
  ExprProgram() = default;
  explicit ExprProgram(std::span<const Expr> roots);

  std::size_t size() const { return outputs_.size(); }
  void evaluate(std::span<const double> point, std::span<double> out) const;
  std::vector<double> evaluate(std::span<const double> point) const;

 private:
  struct Instr {
    Expr::Kind kind;
    int a = -1;
    int b = -1;
    int ival = 0;
    double value = 0.0;
    const SampledFunction* fn = nullptr;
  };
  std::vector<Instr> code_;
  std::vector<int> outputs_;
  std::vector<Expr> keep_;  // keeps nodes alive for error messages
  mutable std::vector<double> regs_;
  void fail(std::size_t instr, const std::string& why) const;
};

}  // namespace imtk
