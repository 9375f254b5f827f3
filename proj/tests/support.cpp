// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

namespace testing {

using imtk::Expr;

Expr random_expr(std::mt19937_64& rng, int max_depth, int dim) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> coord(0, dim - 1);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  if (max_depth <= 0 || pick(rng) < 2) {
    if (pick(rng) < 6) return Expr::coordinate(coord(rng));
    return Expr(c(rng));
  }
  auto sub = [&] { return random_expr(rng, max_depth - 1, dim); };
  switch (pick(rng)) {
    case 0: return Expr::raw(Expr::Kind::Sum, sub(), sub());
    case 1: return Expr::raw(Expr::Kind::Product, sub(), sub());
    case 2: {
      Expr d = Expr(1.0 + std::abs(c(rng))) + imtk::pow(sub(), 2);
      return Expr::raw(Expr::Kind::Quotient, sub(), d);
    }
    case 3: return imtk::pow(sub(), 2 + pick(rng) % 2);
    case 4: return Expr::raw(Expr::Kind::Negation, sub());
    case 5: return imtk::sin(sub());
    case 6: return imtk::cos(sub());
    case 7: return imtk::exp(imtk::sin(sub()));
    case 8: return imtk::log(Expr(1.0) + imtk::pow(sub(), 2));
    default: return Expr::raw(Expr::Kind::Sum, sub(), Expr::raw(Expr::Kind::Negation, sub()));
  }
}

double central_difference(const Expr& e, std::vector<double> p, int i, double h) {
  const double x0 = p[static_cast<std::size_t>(i)];
  p[static_cast<std::size_t>(i)] = x0 + h;
  const double fp = imtk::evaluate(e, p);
  p[static_cast<std::size_t>(i)] = x0 - h;
  const double fm = imtk::evaluate(e, p);
  return (fp - fm) / (2 * h);
}

std::vector<double> random_point(std::mt19937_64& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (auto& v : p) v = u(rng);
  return p;
}

imtk::ExprMatrix matrix(int rows, int cols, const std::vector<const char*>& entries, int dim) {
  imtk::ExprMatrix m(rows, cols);
  for (int k = 0; k < rows * cols; ++k) m.data[static_cast<std::size_t>(k)] = imtk::parse(entries[static_cast<std::size_t>(k)], dim);
  return m;
}

}  // namespace testing
