// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "imtk/chart.hpp"
#include "imtk/expr.hpp"
#include "imtk/linalg.hpp"
#include "imtk/report.hpp"

namespace imtk {

/// Trivial vector bundle over a chart, with standard frame e_1..e_r.
struct Bundle {
  Chart chart;
  int rank = 1;
  std::string label;
};

/// Frame coefficients of a section.
using Section = std::vector<Expr>;
/// Components in the coordinate fields d/dx_i.
using VectorField = std::vector<Expr>;

Section operator+(const Section& a, const Section& b);
Section operator-(const Section& a, const Section& b);
Section operator*(const Expr& f, const Section& s);
Section zero_section(int rank);
Section frame_section(int rank, int a);

/// X(f) = sum_i X^i d_i f
Expr derive(const VectorField& x, const Expr& f);
Section derive(const VectorField& x, const Section& s);
/// Bracket of vector fields in coordinates.
VectorField vf_bracket(const VectorField& x, const VectorField& y);

/// Polynomial of total degree <= `degree` with coefficients uniform in [-1, 1].
Expr random_polynomial(int dim, int degree, std::mt19937_64& rng);
Section random_section(int rank, int dim, std::mt19937_64& rng, int degree = 2);

/// Strictly increasing k-tuples from {0..n-1} in lexicographic order.
const std::vector<std::vector<int>>& increasing_tuples(int n, int k);

/// Sign of the permutation sorting `idx`; 0 when an index repeats.
int sort_sign(std::vector<int>& idx);

/// Bundle-valued k-form with components on increasing index tuples.
class CoeffForm {
 public:
  CoeffForm() = default;
  CoeffForm(int dim, int rank, int degree);

  static CoeffForm from_section(int dim, const Section& s);
  /// Scalar 1-form from its n components.
  static CoeffForm one_form(const std::vector<Expr>& comps);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int degree() const { return degree_; }
  std::size_t tuple_count() const { return tuples_->size(); }
  const std::vector<int>& tuple(std::size_t t) const { return (*tuples_)[t]; }
  std::size_t tuple_index(std::span<const int> increasing) const;

  Expr& at(std::size_t t, int a) { return comps_[t * static_cast<std::size_t>(rank_) + static_cast<std::size_t>(a)]; }
  const Expr& at(std::size_t t, int a) const {
    return comps_[t * static_cast<std::size_t>(rank_) + static_cast<std::size_t>(a)];
  }
  /// Component on coordinate slots in any order; antisymmetry gives the sign.
  Expr component(std::span<const int> slots, int a) const;
  Section value(std::span<const int> slots) const;
  /// The section of a degree-0 form.
  Section as_section() const;
  const std::vector<Expr>& components() const { return comps_; }

  /// Numeric value on explicit tangent vectors.
  std::vector<double> evaluate(std::span<const double> point,
                               const std::vector<std::vector<double>>& vectors) const;

 private:
  int dim_ = 0;
  int rank_ = 0;
  int degree_ = 0;
  const std::vector<std::vector<int>>* tuples_ = nullptr;
  std::vector<Expr> comps_;
};

CoeffForm operator+(const CoeffForm& a, const CoeffForm& b);
CoeffForm operator-(const CoeffForm& a, const CoeffForm& b);
CoeffForm operator*(const Expr& f, const CoeffForm& w);
/// Applies a rank'×rank matrix to the values.
CoeffForm apply(const ExprMatrix& m, const CoeffForm& w);

/// Contraction with a vector field in the first slot.
CoeffForm interior(const VectorField& x, const CoeffForm& w);
/// Wedge of a scalar form (rank 1) with a bundle-valued form.
CoeffForm wedge(const CoeffForm& scalar, const CoeffForm& w);
/// Componentwise de Rham differential.
CoeffForm exterior_derivative(const CoeffForm& w);

/// Linear connection through Christoffel matrices: nabla_{d_i} e_a = sum_b (G_i)_{ba} e_b.
class LinearConnection {
 public:
  LinearConnection() = default;
  LinearConnection(int dim, int rank);  ///< trivial connection
  LinearConnection(int dim, int rank, std::vector<ExprMatrix> christoffel);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  const ExprMatrix& christoffel(int i) const { return gamma_[static_cast<std::size_t>(i)]; }
  const std::vector<ExprMatrix>& christoffel() const { return gamma_; }

  /// Connection in the frame e'_a = sum_b P_ba e_b.
  LinearConnection change_frame(const ExprMatrix& p, const ExprMatrix& p_inv) const;

 private:
  int dim_ = 0;
  int rank_ = 0;
  std::vector<ExprMatrix> gamma_;
};

Section covariant_derivative(const LinearConnection& conn, const VectorField& x, const Section& s);

/// d^nabla on bundle-valued forms; requires degree < dim.
CoeffForm exterior_covariant_derivative(const LinearConnection& conn, const CoeffForm& w);

/// Endomorphism-valued 2-form R(d_i, d_j) for i < j.
struct Curvature {
  int dim = 0;
  int rank = 0;
  std::vector<ExprMatrix> r;  ///< indexed like increasing_tuples(dim, 2)

  const ExprMatrix& at(int i, int j) const;  ///< requires i < j
  /// R(d_i, d_j) for any i, j.
  ExprMatrix value(int i, int j) const;
  /// The bundle-valued 2-form R . s
  CoeffForm apply(const Section& s) const;
  bool is_flat(const Chart& chart, double tol = 1e-10, int points = 64) const;
  double max_abs(const Chart& chart, int points = 64) const;
};

Curvature curvature_tensor(const LinearConnection& conn);

/// Fiberwise bracket [e_a, e_b] = sum_c c_ab^c e_c.
class FiberBracket {
 public:
  FiberBracket() = default;
  explicit FiberBracket(int rank);  ///< abelian
  int rank() const { return rank_; }

  /// Sets c_ab^c and c_ba^c = -c_ab^c.
  void set(int a, int b, int c, const Expr& e);
  const Expr& structure(int a, int b, int c) const;

  Section bracket(const Section& x, const Section& y) const;
  /// (ad u)_{ca} = sum_d u^d c_da^c
  ExprMatrix ad(const Section& u) const;
  bool is_abelian() const;
  /// max Jacobiator over frame triples at sampled points
  double jacobi_residual(const Chart& chart, int points = 64) const;

 private:
  int rank_ = 0;
  std::vector<Expr> c_;
};

/// Graded bracket of k- and l-forms: full signed sum over permutations.
CoeffForm fiber_bracket_wedge(const FiberBracket& br, const CoeffForm& b, const CoeffForm& g);

}  // namespace imtk
