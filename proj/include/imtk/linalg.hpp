// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "imtk/chart.hpp"
#include "imtk/expr.hpp"

namespace imtk {

/// Dense row-major matrix of expressions.
struct ExprMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Expr> data;

  ExprMatrix() = default;
  ExprMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c)) {}
  static ExprMatrix identity(int n);

  Expr& operator()(int i, int j) { return data[static_cast<std::size_t>(i * cols + j)]; }
  const Expr& operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i * cols + j)];
  }

  Eigen::MatrixXd evaluate(std::span<const double> p) const;
  ExprMatrix block(int r0, int c0, int nr, int nc) const;
};

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix transpose(const ExprMatrix& a);
ExprMatrix differentiate(const ExprMatrix& a, int i);
ExprMatrix commutator(const ExprMatrix& a, const ExprMatrix& b);

/// Determinant by cofactor expansion; meant for rank <= 5.
Expr determinant(const ExprMatrix& a);
/// Inverse through the adjugate; meant for rank <= 5.
ExprMatrix inverse(const ExprMatrix& a);

/// max over samples of the entrywise distance between a and b.
double max_difference(const Chart& chart, const ExprMatrix& a, const ExprMatrix& b,
                      int points = 32, std::uint64_t seed = 7);

/// Orthonormal basis (columns) of the numerical kernel of m.
///
/// A singular value counts as zero when it is below `threshold`.
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& m, double threshold = 1e-9);
int numeric_rank(const Eigen::MatrixXd& m, double threshold = 1e-9);

}  // namespace imtk
