// SPDX-License-Identifier: Apache-2.0
#include "imtk/linalg.hpp"

#include "imtk/report.hpp"

namespace imtk {

ExprMatrix ExprMatrix::identity(int n) {
  ExprMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = Expr(1.0);
  return m;
}

Eigen::MatrixXd ExprMatrix::evaluate(std::span<const double> p) const {
  ExprProgram prog(data);
  auto v = prog.evaluate(p);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
  return m;
}

ExprMatrix ExprMatrix::block(int r0, int c0, int nr, int nc) const {
  ExprMatrix b(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.cols != b.rows) throw DimensionError("matrix product: inner sizes differ");
  ExprMatrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      Expr s;
      for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("matrix sum: shapes differ");
  ExprMatrix c(a.rows, a.cols);
  for (std::size_t k = 0; k < a.data.size(); ++k) c.data[k] = a.data[k] + b.data[k];
  return c;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("matrix difference: shapes differ");
  ExprMatrix c(a.rows, a.cols);
  for (std::size_t k = 0; k < a.data.size(); ++k) c.data[k] = a.data[k] - b.data[k];
  return c;
}

ExprMatrix transpose(const ExprMatrix& a) {
  ExprMatrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

ExprMatrix differentiate(const ExprMatrix& a, int i) {
  ExprMatrix d(a.rows, a.cols);
  for (std::size_t k = 0; k < a.data.size(); ++k) d.data[k] = differentiate(a.data[k], i);
  return d;
}

ExprMatrix commutator(const ExprMatrix& a, const ExprMatrix& b) { return a * b - b * a; }

namespace {
ExprMatrix minor_of(const ExprMatrix& a, int row, int col) {
  ExprMatrix m(a.rows - 1, a.cols - 1);
  for (int i = 0, r = 0; i < a.rows; ++i) {
    if (i == row) continue;
    for (int j = 0, c = 0; j < a.cols; ++j) {
      if (j == col) continue;
      m(r, c++) = a(i, j);
    }
    ++r;
  }
  return m;
}
}  // namespace

Expr determinant(const ExprMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("determinant of a non-square matrix");
  if (a.rows == 0) return Expr(1.0);
  if (a.rows == 1) return a(0, 0);
  if (a.rows == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  Expr det;
  for (int j = 0; j < a.cols; ++j) {
    if (a(0, j).is_zero()) continue;
    Expr term = a(0, j) * determinant(minor_of(a, 0, j));
    det = (j % 2 == 0) ? det + term : det - term;
  }
  return det;
}

ExprMatrix inverse(const ExprMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("inverse of a non-square matrix");
  const int n = a.rows;
  Expr det = determinant(a);
  ExprMatrix inv(n, n);
  if (n == 1) {
    inv(0, 0) = Expr(1.0) / det;
    return inv;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Expr cof = determinant(minor_of(a, j, i));
      inv(i, j) = ((i + j) % 2 == 0 ? cof : -cof) / det;
    }
  return inv;
}

double max_difference(const Chart& chart, const ExprMatrix& a, const ExprMatrix& b, int points,
                      std::uint64_t seed) {
  if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("max_difference: shapes differ");
  std::vector<Expr> all = a.data;
  all.insert(all.end(), b.data.begin(), b.data.end());
  ExprProgram prog(all);
  const std::size_t n = a.data.size();
  double worst = 0.0;
  for_each_sample(chart, SamplePlan{seed, points}, [&](const Point& p) {
    auto v = prog.evaluate(p);
    for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(v[k] - v[n + k]));
  });
  return worst;
}

Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& m, double threshold) {
  const int n = static_cast<int>(m.cols());
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(k) >= threshold) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

int numeric_rank(const Eigen::MatrixXd& m, double threshold) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  int rank = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) >= threshold) ++rank;
  return rank;
}

}  // namespace imtk
