// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "imtk/chart.hpp"
#include "imtk/expr.hpp"
#include "support.hpp"

using namespace imtk;
using K = Expr::Kind;

TEST_CASE("parse builds the grammar tree") {
  Expr e = parse("x1*sin(x2)+2", 2);
  REQUIRE(e.kind() == K::Sum);
  CHECK(e.child(0).kind() == K::Product);
  CHECK(e.child(0).child(0).kind() == K::Coordinate);
  CHECK(e.child(0).child(0).index() == 0);
  CHECK(e.child(0).child(1).kind() == K::Sin);
  CHECK(e.child(0).child(1).child(0).index() == 1);
  CHECK(e.child(1).is_constant(2.0));

  Expr q = parse("x1^3 / (1 + x2^2)", 2);
  REQUIRE(q.kind() == K::Quotient);
  CHECK(q.child(0).kind() == K::Power);
  CHECK(q.child(0).exponent() == 3);
  CHECK(q.child(1).kind() == K::Sum);
}

TEST_CASE("parse follows precedence and associativity") {
  Expr e = parse("x1 - x2 - x3", 3);
  REQUIRE(e.kind() == K::Sum);
  CHECK(e.child(0).kind() == K::Sum);  // left associative
  CHECK(e.child(1).kind() == K::Negation);

  // the unary minus binds tighter than '^' in this grammar
  Expr p = parse("-x1^2", 1);
  REQUIRE(p.kind() == K::Power);
  CHECK(p.child(0).kind() == K::Negation);

  CHECK(parse("x1^-2", 1).exponent() == -2);
  CHECK(parse("  2.5e-1 * x1 ", 1).child(0).value() == doctest::Approx(0.25));
}

TEST_CASE("parse errors") {
  try {
    parse("x1 +* x2", 2);
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse("x3", 2), ParseError);
  CHECK_THROWS_AS(parse("y1 + 1", 2), ParseError);
  CHECK_THROWS_AS(parse("x0", 2), ParseError);
  CHECK_THROWS_AS(parse("sin x1", 2), ParseError);
  CHECK_THROWS_AS(parse("(x1", 2), ParseError);
  CHECK_THROWS_AS(parse("x1 x2", 2), ParseError);
  CHECK_THROWS_AS(parse("", 2), ParseError);
  CHECK_THROWS_AS(parse("x1^", 2), ParseError);
}

TEST_CASE("differentiate examples") {
  CHECK(to_string(differentiate(parse("x1*sin(x2)", 2), 1)) == "x1*cos(x2)");
  CHECK(to_string(differentiate(parse("7", 1), 0)) == "0");
  CHECK(to_string(differentiate(parse("x1^2/x2", 2), 0)) == "2*x1/x2");
}

TEST_CASE("evaluate examples and poles") {
  std::vector<double> p{2.0, 0.0};
  CHECK(evaluate(parse("x1*sin(x2)+2", 2), p) == 2.0);
  CHECK(evaluate(parse("exp(x1)", 1), std::vector<double>{0.0}) == 1.0);
  try {
    evaluate(parse("x1/x2", 2), std::vector<double>{1.0, 0.0});
    FAIL("expected a pole");
  } catch (const EvalError& e) {
    CHECK(e.subtree() == "x1/x2");
  }
  CHECK_THROWS_AS(evaluate(parse("log(x1 - 1)", 1), std::vector<double>{0.5}), EvalError);
}

TEST_CASE("folding removes neutral elements only") {
  Expr x = Expr::coordinate(0);
  CHECK(structurally_equal(x + Expr(0.0), x));
  CHECK(structurally_equal(Expr(1.0) * x, x));
  CHECK((Expr(2.0) * Expr(3.0)).is_constant(6.0));
  CHECK((x * Expr(0.0)).is_zero());
  CHECK(structurally_equal(pow(x, 1), x));
  CHECK(pow(x, 0).is_constant(1.0));
  CHECK(structurally_equal(-(-x), x));
  // no reassociation
  Expr e = Expr(2.0) * (Expr(3.0) * x);
  CHECK(e.kind() == K::Product);
  CHECK(e.child(1).kind() == K::Product);
}

TEST_CASE("fold is idempotent on random trees") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    Expr e = testing::random_expr(rng, 6, 3);
    Expr f = fold(e);
    CHECK(structurally_equal(fold(f), f));
  }
}

TEST_CASE("print then parse is stable") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 300; ++t) {
    Expr e = fold(testing::random_expr(rng, 6, 3));
    const std::string s = to_string(e);
    Expr back = parse(s, 3);
    CHECK(to_string(back) == s);
    auto p = testing::random_point(rng, 3);
    CHECK(evaluate(back, p) == doctest::Approx(evaluate(e, p)).epsilon(1e-12));
  }
  Expr c = Expr::raw(K::Power, Expr(-2.0), Expr(), 2);
  CHECK(to_string(parse(to_string(c), 1)) == to_string(c));
}

TEST_CASE("derivative agrees with central differences") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> idx(0, 2);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    Expr e = testing::random_expr(rng, 6, 3);
    auto p = testing::random_point(rng, 3);
    const int i = idx(rng);
    const double exact = evaluate(differentiate(e, i), p);
    const double fd = testing::central_difference(e, p, i, 1e-6);
    CHECK(std::abs(exact - fd) <= 1e-5 * (1 + std::abs(exact)));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("differentiation is linear and obeys the product rule") {
  std::mt19937_64 rng(4);
  Chart chart(3);
  for (int t = 0; t < 50; ++t) {
    Expr a = testing::random_expr(rng, 4, 3);
    Expr b = testing::random_expr(rng, 4, 3);
    const double s = 0.7;
    for (int i = 0; i < 3; ++i) {
      Expr lhs = differentiate(Expr(s) * a + b, i);
      Expr rhs = Expr(s) * differentiate(a, i) + differentiate(b, i);
      CHECK(max_difference(chart, lhs, rhs) < 1e-12 * (1 + max_difference(chart, lhs, Expr())));
      Expr prod = differentiate(a * b, i);
      Expr rule = differentiate(a, i) * b + a * differentiate(b, i);
      CHECK(max_difference(chart, prod, rule) < 1e-12 * (1 + max_difference(chart, prod, Expr())));
    }
  }
}

TEST_CASE("differentiate stays inside the chart") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    Expr e = testing::random_expr(rng, 5, 2);
    for (int i = 0; i < 2; ++i) CHECK(max_coordinate(differentiate(e, i)) < 2);
  }
}

TEST_CASE("shared subtrees are evaluated once") {
  // a tower of squares has 2^40 tree nodes but 41 distinct ones
  Expr e = Expr::coordinate(0);
  for (int k = 0; k < 40; ++k) e = Expr::raw(K::Product, e, e);
  CHECK(node_count(e) == 41);
  CHECK(evaluate(e, std::vector<double>{1.0}) == 1.0);
}

TEST_CASE("sampled leaves differentiate numerically") {
  auto f = std::make_shared<SampledFunction>();
  f->name = "f";
  f->fn = [](std::span<const double> p) { return std::sin(p[0]) * p[1]; };
  f->step = 1e-3;
  Expr s = Expr::sampled(f);
  std::vector<double> p{0.3, 0.8};
  CHECK(evaluate(differentiate(s, 0), p) == doctest::Approx(std::cos(0.3) * 0.8).epsilon(1e-10));
  CHECK(evaluate(differentiate(differentiate(s, 0), 1), p) == doctest::Approx(std::cos(0.3)).epsilon(1e-8));
}

TEST_CASE("chart sampling respects bounds and the excluded ball") {
  Chart c(3, {{0.25, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}, true);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 500; ++t) {
    auto p = c.sample(rng);
    CHECK(p[0] >= 0.25);
    CHECK(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) >= 0.1);
  }
  Chart ball(2, true);
  int discarded = for_each_sample(ball, SamplePlan{1, 50}, [](const Point& p) {
    if (std::hypot(p[0], p[1]) < 0.1) FAIL("sampled inside the excluded ball");
  });
  CHECK(discarded == 0);
  CHECK_THROWS(Chart(1, {{1.0, 1.0}}));
}

TEST_CASE("pole rejection resamples") {
  Chart c(1);
  Expr e = parse("1/(x1 - 0.5)", 1);
  ExprProgram prog(std::span<const Expr>(&e, 1));
  int seen = 0;
  for_each_sample(c, SamplePlan{3, 20}, [&](const Point& p) {
    prog.evaluate(p);
    ++seen;
  });
  CHECK(seen == 20);
}

TEST_CASE("equality by sampling") {
  Chart c(2);
  CHECK(equal_by_sampling(c, parse("(x1 + x2)^2", 2), parse("x1^2 + 2*x1*x2 + x2^2", 2)));
  CHECK_FALSE(equal_by_sampling(c, parse("x1", 2), parse("x2", 2)));
}
