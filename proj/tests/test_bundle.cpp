// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "imtk/bundle.hpp"
#include "support.hpp"

using namespace imtk;

namespace {

// sign of a permutation by counting inversions
int inversion_sign(const std::vector<int>& p) {
  int inv = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) inv += p[i] > p[j];
  return inv % 2 ? -1 : 1;
}

// brute force [b, g](d_I) summing over every permutation of the slots
Section bracket_wedge_oracle(const FiberBracket& br, const CoeffForm& b, const CoeffForm& g,
                             const std::vector<int>& slots) {
  const int k = b.degree();
  std::vector<int> perm(slots.size());
  std::iota(perm.begin(), perm.end(), 0);
  Section acc = zero_section(br.rank());
  do {
    std::vector<int> s1, s2;
    for (int j = 0; j < k; ++j) s1.push_back(slots[perm[j]]);
    for (std::size_t j = k; j < perm.size(); ++j) s2.push_back(slots[perm[j]]);
    Section term = br.bracket(b.value(s1), g.value(s2));
    acc = inversion_sign(perm) > 0 ? acc + term : acc - term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

FiberBracket so3() {
  FiberBracket br(3);
  br.set(0, 1, 2, Expr(1.0));
  br.set(1, 2, 0, Expr(1.0));
  br.set(2, 0, 1, Expr(1.0));
  return br;
}

CoeffForm random_form(std::mt19937_64& rng, int dim, int rank, int degree) {
  CoeffForm w(dim, rank, degree);
  for (std::size_t t = 0; t < w.tuple_count(); ++t)
    for (int a = 0; a < rank; ++a) w.at(t, a) = random_polynomial(dim, 2, rng);
  return w;
}

LinearConnection random_connection(std::mt19937_64& rng, int dim, int rank) {
  std::vector<ExprMatrix> g;
  for (int i = 0; i < dim; ++i) {
    ExprMatrix m(rank, rank);
    for (auto& e : m.data) e = random_polynomial(dim, 2, rng);
    g.push_back(m);
  }
  return LinearConnection(dim, rank, g);
}

double max_abs_diff(const Chart& c, const CoeffForm& a, const CoeffForm& b, int points = 64) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.components().size(); ++k)
    worst = std::max(worst, max_difference(c, a.components()[k], b.components()[k], points, 17 + k));
  return worst;
}

}  // namespace

TEST_CASE("tuple indexing round-trips") {
  for (int n = 1; n <= 6; ++n)
    for (int k = 0; k <= n; ++k) {
      CoeffForm w(n, 1, k);
      for (std::size_t t = 0; t < w.tuple_count(); ++t) CHECK(w.tuple_index(w.tuple(t)) == t);
    }
  CoeffForm w(3, 1, 2);
  w.at(w.tuple_index(std::vector<int>{0, 2}), 0) = Expr(5.0);
  CHECK(w.component(std::vector<int>{2, 0}, 0).is_constant(-5.0));
  CHECK(w.component(std::vector<int>{2, 2}, 0).is_zero());
}

TEST_CASE("covariant derivative examples") {
  Chart c(2);
  LinearConnection flat(2, 2);
  Section s{parse("x1", 2), Expr()};
  Section d = covariant_derivative(flat, {Expr(1.0), Expr()}, s);
  CHECK(d[0].is_constant(1.0));
  CHECK(d[1].is_zero());

  LinearConnection conn(2, 1, {testing::matrix(1, 1, {"x2"}, 2), ExprMatrix(1, 1)});
  Section one{Expr(1.0)};
  CHECK(equal_by_sampling(c, covariant_derivative(conn, {Expr(1.0), Expr()}, one)[0], parse("x2", 2)));
  CHECK(covariant_derivative(conn, {Expr(), Expr()}, one)[0].is_zero());
  CHECK_THROWS_AS(covariant_derivative(conn, {Expr(1.0), Expr()}, Section{Expr(), Expr()}), DimensionError);
}

TEST_CASE("exterior covariant derivative examples") {
  Chart c(2);
  LinearConnection flat(2, 1);
  CoeffForm w(2, 1, 1);
  w.at(1, 0) = parse("x1", 2);  // x1 dx2
  CoeffForm dw = exterior_covariant_derivative(flat, w);
  CHECK(dw.at(0, 0).is_constant(1.0));
  CHECK(exterior_covariant_derivative(flat, CoeffForm(2, 1, 1)).at(0, 0).is_zero());
  CHECK_THROWS_AS(exterior_covariant_derivative(flat, CoeffForm(2, 1, 2)), DimensionError);
}

TEST_CASE("curvature of the rank-one example") {
  Chart c(2);
  LinearConnection conn(2, 1, {testing::matrix(1, 1, {"x2"}, 2), ExprMatrix(1, 1)});
  Curvature r = curvature_tensor(conn);
  // hand expansion: d1 G2 - d2 G1 + [G1, G2] = 0 - 1 + 0
  CHECK(equal_by_sampling(c, r.at(0, 1)(0, 0), Expr(-1.0)));
  CHECK_FALSE(r.is_flat(c));
  CHECK(curvature_tensor(LinearConnection(2, 3)).is_flat(c));

  // both curvature paths agree on this example
  Section s{parse("x1*x2 + 1", 2)};
  CoeffForm dd = exterior_covariant_derivative(conn, exterior_covariant_derivative(conn, CoeffForm::from_section(2, s)));
  CHECK(max_abs_diff(c, dd, r.apply(s)) < 1e-12);
}

TEST_CASE("d nabla squared is the curvature") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    const int dim = 2 + trial % 2;
    const int rank = 1 + trial % 3;
    Chart c(dim);
    LinearConnection conn = random_connection(rng, dim, rank);
    Curvature r = curvature_tensor(conn);
    Section s = random_section(rank, dim, rng);
    CoeffForm dd = exterior_covariant_derivative(conn, exterior_covariant_derivative(conn, CoeffForm::from_section(dim, s)));
    CHECK(max_abs_diff(c, dd, r.apply(s), 100) < 1e-9);
  }
}

TEST_CASE("trivial connection gives the de Rham differential") {
  std::mt19937_64 rng(22);
  Chart c(3);
  for (int k = 0; k < 3; ++k) {
    CoeffForm w = random_form(rng, 3, 2, k);
    CoeffForm a = exterior_covariant_derivative(LinearConnection(3, 2), w);
    // oracle: alternating sum over the slots, read through signed components
    CoeffForm b(3, 2, k + 1);
    for (std::size_t t = 0; t < b.tuple_count(); ++t) {
      const auto& tup = b.tuple(t);
      for (int comp = 0; comp < 2; ++comp) {
        Expr acc;
        for (std::size_t j = 0; j < tup.size(); ++j) {
          std::vector<int> rest = tup;
          rest.erase(rest.begin() + static_cast<long>(j));
          Expr term = differentiate(w.component(rest, comp), tup[j]);
          acc = j % 2 ? acc - term : acc + term;
        }
        b.at(t, comp) = acc;
      }
    }
    CHECK(max_abs_diff(c, a, b) < 1e-12);
    CHECK(max_abs_diff(c, a, exterior_derivative(w)) < 1e-12);
  }
}

TEST_CASE("flatness is invariant under permuting coordinates") {
  // gauge of the trivial connection by an invertible P: G_i = P^{-1} d_i P
  Chart c(2);
  ExprMatrix p = testing::matrix(2, 2, {"2 + x1*x2", "x1", "x2^2", "1"}, 2);
  LinearConnection g = LinearConnection(2, 2).change_frame(p, inverse(p));
  CHECK(curvature_tensor(g).is_flat(c));
  std::vector<Expr> swap{Expr::coordinate(1), Expr::coordinate(0)};
  std::vector<ExprMatrix> perm(2, ExprMatrix(2, 2));
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k) perm[1 - i].data[k] = substitute(g.christoffel(i).data[k], swap);
  CHECK(curvature_tensor(LinearConnection(2, 2, perm)).is_flat(c));
}

TEST_CASE("wedge and interior products") {
  Chart c(3);
  CoeffForm dx1 = CoeffForm::one_form({Expr(1.0), Expr(), Expr()});
  CoeffForm dx2 = CoeffForm::one_form({Expr(), Expr(1.0), Expr()});
  CoeffForm w = wedge(dx1, dx2);
  CHECK(w.component(std::vector<int>{0, 1}, 0).is_constant(1.0));
  CHECK(wedge(dx2, dx1).component(std::vector<int>{0, 1}, 0).is_constant(-1.0));
  CoeffForm i = interior({Expr(), Expr(1.0), Expr()}, w);  // i_{d2}(dx1^dx2) = -dx1
  CHECK(i.at(0, 0).is_constant(-1.0));
  auto v = w.evaluate(std::vector<double>{0, 0, 0}, {{1, 2, 0}, {3, 4, 0}});
  CHECK(v[0] == doctest::Approx(1 * 4 - 2 * 3));
}

TEST_CASE("fiber bracket wedge matches the permutation sum") {
  std::mt19937_64 rng(23);
  Chart c(3);
  FiberBracket br = so3();
  for (auto [k, l] : {std::pair{0, 1}, {1, 1}, {1, 2}, {2, 1}, {0, 2}}) {
    CoeffForm b = random_form(rng, 3, 3, k);
    CoeffForm g = random_form(rng, 3, 3, l);
    CoeffForm w = fiber_bracket_wedge(br, b, g);
    for (std::size_t t = 0; t < w.tuple_count(); ++t) {
      Section oracle = bracket_wedge_oracle(br, b, g, w.tuple(t));
      for (int a = 0; a < 3; ++a) CHECK(max_difference(c, w.at(t, a), oracle[a]) < 1e-10);
    }
    // graded antisymmetry
    CoeffForm back = fiber_bracket_wedge(br, g, b);
    const double sign = ((k * l) % 2) ? 1.0 : -1.0;
    CHECK(max_abs_diff(c, w, Expr(sign) * back) < 1e-10);
  }
}

TEST_CASE("fiber bracket wedge special cases") {
  Chart c(2);
  std::mt19937_64 rng(24);
  FiberBracket br = so3();
  CoeffForm a = random_form(rng, 2, 3, 1);
  CoeffForm aa = fiber_bracket_wedge(br, a, a);
  Section twice = Expr(2.0) * br.bracket(a.value(std::vector<int>{0}), a.value(std::vector<int>{1}));
  for (int k = 0; k < 3; ++k) CHECK(max_difference(c, aa.at(0, k), twice[k]) < 1e-10);

  CoeffForm xi = random_form(rng, 2, 3, 0);
  CoeffForm mixed = fiber_bracket_wedge(br, xi, a);
  Section direct = br.bracket(xi.as_section(), a.value(std::vector<int>{1}));
  for (int k = 0; k < 3; ++k) CHECK(max_difference(c, mixed.at(1, k), direct[k]) < 1e-10);

  CoeffForm zero = fiber_bracket_wedge(FiberBracket(3), a, a);
  for (const auto& e : zero.components()) CHECK(e.is_zero());
}

TEST_CASE("Jacobi identity of a fiber bracket") {
  Chart c(2);
  CHECK(so3().jacobi_residual(c) < 1e-9);
  FiberBracket bad(3);
  bad.set(0, 1, 2, Expr(1.0));
  bad.set(1, 2, 0, Expr(1.0));
  bad.set(0, 2, 0, Expr(1.0));
  CHECK(bad.jacobi_residual(c) > 1e-3);
  CHECK_THROWS(bad.set(1, 1, 0, Expr(1.0)));
}
