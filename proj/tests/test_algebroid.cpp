// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "imtk/algebroid.hpp"
#include "imtk/examples.hpp"
#include "imtk/im_forms.hpp"
#include "support.hpp"

using namespace imtk;

namespace {

LieAlgebroid so3_action() { return action_algebroid(Chart(3), so3_bracket(), rotation_fields()); }

double max_over_samples(const Chart& chart, const SamplePlan& plan, const std::function<double(const Point&)>& f) {
  double worst = 0.0;
  for_each_sample(chart, plan, [&](const Point& p) { worst = std::max(worst, std::abs(f(p))); });
  return worst;
}

}  // namespace

TEST_CASE("bracket of constant sections reproduces the structure constants") {
  LieAlgebroid a = so3_action();
  Section b = a.bracket(frame_section(3, 0), frame_section(3, 1));
  CHECK(b[0].is_zero());
  CHECK(b[1].is_zero());
  CHECK(b[2].is_constant(1.0));
}

TEST_CASE("bracket is antisymmetric on random sections") {
  LieAlgebroid a = so3_action();
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    Section x = random_section(3, 3, rng);
    CHECK(sampled_max_abs(a.chart(), a.bracket(x, x), {}) < 1e-12);
    Section y = random_section(3, 3, rng);
    CHECK(sampled_max_abs(a.chart(), a.bracket(x, y) + a.bracket(y, x), {}) < 1e-12);
  }
}

TEST_CASE("tangent algebroid bracket matches the vector-field commutator") {
  LieAlgebroid tm = tangent_algebroid(Chart(2));
  Section x{Expr(), Expr::coordinate(0)};
  Section y{Expr(1.0), Expr()};
  Section b = tm.bracket(x, y);
  CHECK(b[0].is_zero());
  CHECK(b[1].is_constant(-1.0));

  // numerical commutator of random polynomial fields as the oracle
  std::mt19937_64 rng(9);
  Section u = random_section(2, 2, rng), v = random_section(2, 2, rng);
  Section w = tm.bracket(u, v);
  for (int t = 0; t < 20; ++t) {
    Point p = testing::random_point(rng, 2);
    for (int c = 0; c < 2; ++c) {
      double want = 0.0;
      for (int i = 0; i < 2; ++i)
        want += evaluate(u[i], p) * testing::central_difference(v[c], p, i, 1e-5) -
                evaluate(v[i], p) * testing::central_difference(u[c], p, i, 1e-5);
      CHECK(evaluate(w[c], p) == doctest::Approx(want).epsilon(1e-7));
    }
  }
}

TEST_CASE("rotation action algebroid satisfies the axioms") {
  Report r = check_axioms(so3_action(), nullptr, {});
  CHECK(r.pass());
  CHECK(r.residual("jacobi") < 1e-8);
  CHECK(r.residual("anchor_morphism") < 1e-8);
}

TEST_CASE("radial ideal in the adapted frame passes the ideal clauses") {
  ActionParams p = so3_radial_action();
  LieAlgebroid a = action_algebroid(p.chart, p.algebra, p.fields).change_frame(p.frame, inverse(p.frame));
  IdealBundle ideal(a, 1);
  Report r = check_axioms(a, &ideal, {});
  CHECK(r.pass());
  CHECK(r.residual("ideal_anchor") < 1e-10);
  CHECK(r.residual("ideal_bracket") < 1e-8);
}

TEST_CASE("perturbed structure constants break Jacobi") {
  LieAlgebroid a = so3_action();
  a.set_structure(0, 1, 2, Expr(1.0) + Expr::coordinate(0));
  SamplePlan plan;
  Report r = check_axioms(a, nullptr, plan);
  CHECK_FALSE(r.pass());
  // frame Jacobiator is rho(e_3)(x1) e_3 = x2 e_3
  double oracle = max_over_samples(a.chart(), plan, [](const Point& p) { return p[1]; });
  CHECK(r.residual("jacobi") >= oracle * (1 - 1e-12));
  CHECK(r.residual("jacobi") > 0.5);
  CHECK_FALSE(r.find("anchor_morphism")->pass);
}

TEST_CASE("ideal clause failures are localized") {
  LieAlgebroid a = so3_action();
  IdealBundle ideal(a, 1);
  Report r = check_axioms(a, &ideal, {});
  CHECK(r.find("jacobi")->pass);
  CHECK_FALSE(r.find("ideal_anchor")->pass);
  CHECK_THROWS_AS(canonical_representation(a, ideal), PreconditionError);
}

TEST_CASE("canonical representation") {
  SUBCASE("abelian ideal gives the zero representation") {
    LieAlgebroid a = bundle_of_algebras(Chart(2), FiberBracket(2));
    ARepresentation rep = canonical_representation(a, IdealBundle(a, 2));
    for (const auto& m : rep.coeffs)
      for (const auto& e : m.data) CHECK(e.is_zero());
  }
  SUBCASE("radial ideal representation is flat") {
    ActionParams p = so3_radial_action();
    LieAlgebroid a = action_algebroid(p.chart, p.algebra, p.fields).change_frame(p.frame, inverse(p.frame));
    ARepresentation rep = canonical_representation(a, IdealBundle(a, 1));
    CHECK(rep.flatness_residual({}) < 1e-8);
    bool nonconstant = false;
    for (const auto& m : rep.coeffs) nonconstant = nonconstant || !m(0, 0).is_constant();
    CHECK(nonconstant);
  }
  SUBCASE("full ideal of a Lie algebra bundle is the adjoint representation") {
    FiberBracket g = so3_bracket();
    LieAlgebroid a = bundle_of_algebras(Chart(2), g);
    ARepresentation rep = canonical_representation(a, IdealBundle(a, 3));
    for (int b = 0; b < 3; ++b)
      CHECK(max_difference(a.chart(), rep.coeffs[b], g.ad(frame_section(3, b))) < 1e-14);
    CHECK(rep.flatness_residual({}) < 1e-12);
  }
}

TEST_CASE("Lie derivative of coefficient forms") {
  std::mt19937_64 rng(17);
  SUBCASE("zero anchor and zero representation") {
    LieAlgebroid a = bundle_of_algebras(Chart(2), FiberBracket(2));
    ARepresentation rep{a, 1, {ExprMatrix(1, 1), ExprMatrix(1, 1)}};
    CoeffForm g(2, 1, 1);
    g.at(0, 0) = random_polynomial(2, 2, rng);
    g.at(1, 0) = random_polynomial(2, 2, rng);
    CoeffForm l = lie_derivative_form(random_section(2, 2, rng), rep, g);
    CHECK(sampled_max_abs(a.chart(), l.components(), {}) == 0.0);
  }
  SUBCASE("tangent algebroid matches Cartan's formula") {
    for (int n : {2, 3}) {
      LieAlgebroid tm = tangent_algebroid(Chart(n));
      ARepresentation rep{tm, 1, std::vector<ExprMatrix>(n, ExprMatrix(1, 1))};
      for (int deg = 1; deg < n; ++deg) {
        CoeffForm g(n, 1, deg);
        for (std::size_t t = 0; t < g.tuple_count(); ++t) g.at(t, 0) = random_polynomial(n, 2, rng);
        Section x = random_section(n, n, rng);
        CoeffForm lhs = lie_derivative_form(x, rep, g);
        CoeffForm rhs = interior(x, exterior_derivative(g)) + exterior_derivative(interior(x, g));
        CHECK(sampled_max_abs(tm.chart(), (lhs - rhs).components(), {}) < 1e-10);
      }
    }
  }
  SUBCASE("degree zero collapses to the representation") {
    LieAlgebroid a = so3_action();
    ARepresentation rep = induced_representation(a, LinearConnection(3, 2));
    rep.coeffs[1](0, 1) = Expr::coordinate(2);
    Section s = random_section(2, 3, rng);
    Section al = random_section(3, 3, rng);
    CoeffForm l = lie_derivative_form(al, rep, CoeffForm::from_section(3, s));
    CHECK(sampled_max_abs(a.chart(), l.as_section() - rep.act(al, s), {}) < 1e-12);
  }
}

TEST_CASE("A-invariant connections") {
  SUBCASE("zero anchor, flat connection, zero representation") {
    LieAlgebroid a = bundle_of_algebras(Chart(2), FiberBracket(1));
    ARepresentation rep{a, 2, {ExprMatrix(2, 2)}};
    CHECK(check_A_invariant(LinearConnection(2, 2), rep).pass());
  }
  SUBCASE("tangent algebroid with its own pullback passes iff flat") {
    LieAlgebroid tm = tangent_algebroid(Chart(2));
    LinearConnection curved(2, 1, {testing::matrix(1, 1, {"x2"}, 2), ExprMatrix(1, 1)});
    Report bad = check_A_invariant(curved, induced_representation(tm, curved));
    CHECK(bad.find("A_invariance")->pass);
    CHECK_FALSE(bad.find("curvature_along_anchor")->pass);
    CHECK(bad.residual("curvature_along_anchor") == doctest::Approx(1.0));
    LinearConnection flat(2, 1, {testing::matrix(1, 1, {"x2"}, 2), testing::matrix(1, 1, {"x1"}, 2)});
    CHECK(check_A_invariant(flat, induced_representation(tm, flat)).pass());
  }
  SUBCASE("product with trivial connection and the pulled-back representation") {
    Model m = make_example(product_so3_example());
    LinearConnection triv(2, 3);
    CHECK(check_A_invariant(triv, induced_representation(m.algebroid, triv)).pass());
    // the canonical representation acts by ad on so(3) and is not of the form nabla_rho
    CHECK_FALSE(check_A_invariant(triv, canonical_representation(m.algebroid, *m.ideal)).pass());
  }
}

TEST_CASE("basic curvature") {
  SUBCASE("action algebroid with the canonical flat connection") {
    BasicCurvature rb(so3_action(), LinearConnection(3, 3));
    CHECK(rb.max_abs({}) < 1e-12);
  }
  SUBCASE("tangent algebroid with a flat torsion-free connection") {
    BasicCurvature rb(tangent_algebroid(Chart(2)), LinearConnection(2, 2));
    CHECK(rb.max_abs({}) < 1e-12);
  }
  SUBCASE("perturbed connection on the action algebroid") {
    ExprMatrix g1 = ExprMatrix::identity(3);
    for (auto& e : g1.data) e = e * Expr::coordinate(1);
    LinearConnection conn(3, 3, {g1, ExprMatrix(3, 3), ExprMatrix(3, 3)});
    BasicCurvature rb(so3_action(), conn);
    CHECK(rb.max_abs({}) > 1e-3);
  }
  SUBCASE("frame storage agrees with the direct five-term formula") {
    std::mt19937_64 rng(23);
    LieAlgebroid a = so3_action();
    std::vector<ExprMatrix> g;
    for (int i = 0; i < 3; ++i) {
      ExprMatrix m(3, 3);
      for (auto& e : m.data) e = random_polynomial(3, 1, rng);
      g.push_back(m);
    }
    LinearConnection conn(3, 3, g);
    BasicCurvature rb(a, conn);
    Section al = random_section(3, 3, rng, 1), be = random_section(3, 3, rng, 1);
    VectorField x = random_section(3, 3, rng, 1);
    Section direct = basic_curvature_value(a, conn, al, be, x);
    CHECK(sampled_max_abs(a.chart(), direct - rb.value(al, be, x), SamplePlan{3, 40}) < 1e-9);
    Point p = testing::random_point(rng, 3);
    std::vector<double> av{0.3, -0.2, 0.5}, bv{0.1, 0.4, -0.7}, xv{1.0, 0.0, -2.0};
    Section cal, cbe;
    VectorField cx;
    for (int c = 0; c < 3; ++c) {
      cal.push_back(Expr(av[c]));
      cbe.push_back(Expr(bv[c]));
      cx.push_back(Expr(xv[c]));
    }
    auto num = rb.evaluate(av, bv, xv, p);
    Section sym = basic_curvature_value(a, conn, cal, cbe, cx);
    for (int c = 0; c < 3; ++c) CHECK(num[c] == doctest::Approx(evaluate(sym[c], p)).epsilon(1e-9));
  }
}

TEST_CASE("Cartan construction on the radial ideal") {
  ActionParams p = so3_radial_action();
  ExprMatrix pinv = inverse(p.frame);
  LieAlgebroid a = action_algebroid(p.chart, p.algebra, p.fields).change_frame(p.frame, pinv);
  LinearConnection conn = LinearConnection(3, 3).change_frame(p.frame, pinv);
  IdealBundle ideal(a, 1);

  // equivariance of the radial projection, checked in the constant frame
  LieAlgebroid std_a = action_algebroid(p.chart, p.algebra, p.fields);
  Expr x1 = Expr::coordinate(0), x2 = Expr::coordinate(1), x3 = Expr::coordinate(2);
  Expr r2 = x1 * x1 + x2 * x2 + x3 * x3;
  auto proj = [&](const Section& w) {
    Expr ip = (w[0] * x1 + w[1] * x2 + w[2] * x3) / r2;
    return Section{ip * x1, ip * x2, ip * x3};
  };
  for (int v = 0; v < 3; ++v)
    for (int w = 0; w < 3; ++w) {
      Section lhs = proj(std_a.bracket(frame_section(3, v), frame_section(3, w)));
      Section rhs = std_a.bracket(frame_section(3, v), proj(frame_section(3, w)));
      CHECK(sampled_max_abs(p.chart, lhs - rhs, {}) < 1e-12);
    }

  Report pre = cartan_preconditions(a, ideal, p.splitting, conn);
  CHECK(pre.pass());
  IMForm form = cartan_build_connection(a, ideal, p.splitting, conn);
  Report im = check_im_form(form, canonical_representation(a, ideal));
  CHECK(im.pass());
  CHECK(im.flags.at("connection_predicate"));

  SUBCASE("a non-equivariant splitting is refused") {
    ExprMatrix bad(1, 3);
    bad(0, 0) = Expr(1.0);
    bad(0, 1) = Expr::coordinate(1);
    Report r = cartan_preconditions(a, ideal, bad, conn);
    CHECK(r.residual("bar_nabla_l") > 1e-3);
    CHECK_THROWS_AS(cartan_build_connection(a, ideal, bad, conn), PreconditionError);
  }
}

TEST_CASE("Cartan construction on a product reproduces L(alpha, f) = df") {
  Model m = make_example(product_so3_example());
  ExprMatrix l(3, 5);
  for (int c = 0; c < 3; ++c) l(c, c) = Expr(1.0);
  LinearConnection triv(2, 5);
  IMForm form = cartan_build_connection(m.algebroid, *m.ideal, l, triv);
  // L of a g-valued function f is its differential and L vanishes on B
  std::mt19937_64 rng(31);
  Section f = random_section(3, 2, rng);
  Section s = f;
  s.push_back(Expr());
  s.push_back(Expr());
  CoeffForm lf = form.L(s);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(max_difference(m.algebroid.chart(), lf.at(i, c), differentiate(f[c], i)) < 1e-12);
  for (int a = 3; a < 5; ++a) CHECK(sampled_max_abs(m.algebroid.chart(), form.op(a).components(), {}) == 0.0);
  CHECK(check_im_form(form, canonical_representation(m.algebroid, *m.ideal)).pass());
}

TEST_CASE("anchor morphism uses an independent numeric commutator") {
  LieAlgebroid a = so3_action();
  std::mt19937_64 rng(41);
  Section x = random_section(3, 3, rng), y = random_section(3, 3, rng);
  VectorField rx = a.anchor_of(x), ry = a.anchor_of(y);
  VectorField lhs = a.anchor_of(a.bracket(x, y));
  for (int t = 0; t < 10; ++t) {
    Point p = testing::random_point(rng, 3);
    for (int l = 0; l < 3; ++l) {
      double want = 0.0;
      for (int i = 0; i < 3; ++i)
        want += evaluate(rx[i], p) * testing::central_difference(ry[l], p, i, 1e-5) -
                evaluate(ry[i], p) * testing::central_difference(rx[l], p, i, 1e-5);
      CHECK(evaluate(lhs[l], p) == doctest::Approx(want).epsilon(1e-7));
    }
  }
}
