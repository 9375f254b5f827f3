// SPDX-License-Identifier: Apache-2.0
#include <stdexcept>

#include "doctest.h"
#include "imtk/examples.hpp"
#include "support.hpp"

using namespace imtk;

namespace {

void check_suite(const Model& m) {
  CAPTURE(m.family);
  REQUIRE(m.ideal.has_value());
  Report ax = check_axioms(m.algebroid, &*m.ideal, SamplePlan{42, 200});
  CHECK(ax.pass());
  if (m.form) {
    Report im = check_im_form(*m.form, canonical_representation(m.algebroid, *m.ideal));
    CHECK(im.pass());
    CHECK(im.flags.at("connection_predicate"));
  }
  if (m.coupling) CHECK(check_structure_equations(*m.coupling).pass());
}

ExampleSpec transitive_flat() {
  ExampleSpec s = principal_flat_example();
  s.name = "transitive";
  return s;
}

LieAlgebraBundleParams so3_plus_line(LinearConnection conn) {
  FiberBracket g = so3_bracket();
  FiberBracket h(4);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (int c = 0; c < 3; ++c) h.set(a, b, c, g.structure(a, b, c));
  return {Chart(2), h, 3, std::move(conn)};
}

}  // namespace

TEST_CASE("product") {
  Model m = make_example(product_so3_example());
  CHECK(m.family == "product");
  CHECK(m.algebroid.rank() == 5);
  CHECK(m.ideal->k == 3);
  CHECK(classify_flatness(*m.coupling).totally_flat);
  check_suite(m);
}

TEST_CASE("action with the radial ideal") {
  Model m = make_example({"action", so3_radial_action()});
  IdealBundle ideal(m.algebroid, 1);
  Report r = check_axioms(m.algebroid, &ideal, {});
  CHECK(r.find("ideal_anchor")->pass);
  CHECK(r.find("ideal_bracket")->pass);
  check_suite(m);

  ActionParams bad = so3_radial_action();
  bad.frame = ExprMatrix();
  CHECK_THROWS_AS(make_example({"action", bad}), PreconditionError);
}

TEST_CASE("principal type") {
  SUBCASE("kernel flat") {
    Model m = make_example(principal_flat_example());
    FlatnessClass f = classify_flatness(*m.coupling);
    CHECK(f.kernel_flat);
    CHECK_FALSE(f.leafwise_flat);
    check_suite(m);
  }
  SUBCASE("so(3)") {
    Model m = make_example(principal_so3_example());
    check_suite(m);
  }
  SUBCASE("Omega that does not match the curvature is rejected") {
    ExampleSpec s = principal_so3_example();
    auto& p = std::get<PrincipalParams>(s.params);
    p.omega.at(0, 0) = p.omega.at(0, 0) + Expr(1.0);
    try {
      make_example(s);
      FAIL("expected a precondition failure");
    } catch (const PreconditionError& e) {
      CHECK_FALSE(e.report().find("curvature_is_ad_omega")->pass);
    }
  }
  SUBCASE("non-central Omega is rejected by the flat family") {
    ExampleSpec s = principal_so3_example();
    s.name = "principal_type_flat";
    CHECK_THROWS_AS(make_example(s), PreconditionError);
  }
  SUBCASE("non-closed Omega is rejected on R^3") {
    CoeffForm omega(3, 1, 2);
    omega.at(2, 0) = Expr::coordinate(0);  // x1 dx2 ^ dx3
    ExampleSpec s{"principal_type_flat",
                  PrincipalParams{tangent_algebroid(Chart(3)), FiberBracket(1), LinearConnection(3, 1), omega}};
    try {
      make_example(s);
      FAIL("expected a precondition failure");
    } catch (const PreconditionError& e) {
      CHECK_FALSE(e.report().find("omega_closed")->pass);
    }
  }
}

TEST_CASE("transitive") {
  SUBCASE("tau(X) = (X, 0) reproduces the coupling form") {
    Model m = make_example(transitive_flat());
    check_suite(m);
    CHECK(im_form_difference(*m.form, coupling_to_im(*m.coupling)) < 1e-10);
    CouplingData cd = extract_coupling(m.algebroid, *m.ideal, *m.form);
    // U(b_1, d_2) = Omega(d_1, d_2) = 1
    CHECK(max_difference(cd.chart(), cd.U(0, 1, 0), Expr(1.0)) < 1e-10);
    CHECK(max_difference(cd.chart(), cd.U(1, 0, 0), Expr(-1.0)) < 1e-10);
    CHECK(coupling_difference(cd, *m.coupling) < 1e-10);
  }
  SUBCASE("nonabelian isotropy") {
    ExampleSpec s = principal_so3_example();
    s.name = "transitive";
    Model m = make_example(s);
    check_suite(m);
    CHECK(im_form_difference(*m.form, coupling_to_im(*m.coupling)) < 1e-10);
  }
  SUBCASE("trivial isotropy gives the zero form") {
    LieAlgebroid tm = tangent_algebroid(Chart(2));
    IMForm f = transitive_im_connection(tm, ExprMatrix::identity(2));
    CHECK(f.value_rank() == 0);
    CHECK(im_form_difference(f, IMForm::zero(tm, 0, 1)) == 0.0);
  }
  SUBCASE("invalid splittings") {
    LieAlgebroid tm = tangent_algebroid(Chart(2));
    ExprMatrix half = ExprMatrix::identity(2);
    half(0, 0) = Expr(0.5);
    CHECK_THROWS_AS(transitive_im_connection(tm, half), PreconditionError);
    LieAlgebroid a = bundle_of_algebras(Chart(2), FiberBracket(2));
    CHECK_THROWS_AS(transitive_im_connection(a, ExprMatrix(2, 2)), PreconditionError);
  }
  SUBCASE("base must be the tangent algebroid") {
    ExampleSpec s = principal_flat_example();
    s.name = "transitive";
    std::get<PrincipalParams>(s.params).base = bundle_of_algebras(Chart(2), FiberBracket(2));
    CHECK_THROWS(make_example(s));
  }
}

TEST_CASE("Lie algebra bundle") {
  SUBCASE("so(3) + R with a bracket-preserving connection") {
    FiberBracket g = so3_bracket();
    Section th{Expr::coordinate(1), Expr(), Expr()};
    Model m = make_example({"lie_algebra_bundle", so3_plus_line(LinearConnection(2, 3, {g.ad(th), ExprMatrix(3, 3)}))});
    CHECK(m.algebroid.rank() == 4);
    check_suite(m);
  }
  SUBCASE("a connection that does not preserve the bracket is refused") {
    ExprMatrix g1(3, 3);
    g1(0, 0) = Expr::coordinate(0);
    try {
      make_example({"lie_algebra_bundle", so3_plus_line(LinearConnection(2, 3, {g1, ExprMatrix(3, 3)}))});
      FAIL("expected a precondition failure");
    } catch (const PreconditionError& e) {
      CHECK_FALSE(e.report().find("preserves_bracket")->pass);
    }
  }
  SUBCASE("a line in so(3) is not an ideal") {
    FiberBracket g = so3_bracket();
    LieAlgebraBundleParams p{Chart(2), g, 1, LinearConnection(2, 1)};
    CHECK_THROWS_AS(make_example({"lie_algebra_bundle", p}), PreconditionError);
  }
}

TEST_CASE("rank one") {
  LieAlgebroid tm = tangent_algebroid(Chart(2));
  SUBCASE("closed V and any lambda on R^2") {
    Model m = make_example({"rank_one", RankOneParams{tm, {Expr::coordinate(1), Expr::coordinate(0)}, {Expr(1.0)}}});
    CHECK(m.algebroid.rank() == 3);
    check_suite(m);
  }
  SUBCASE("non-closed V is refused") {
    CHECK_THROWS_AS(make_example({"rank_one", RankOneParams{tm, {Expr::coordinate(1), Expr()}, {Expr()}}}),
                    PreconditionError);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(make_example({"rank_one", RankOneParams{tm, {Expr()}, {Expr()}}}), DimensionError);
  }
}

TEST_CASE("family mismatches") {
  CHECK_THROWS_AS(make_example({"unknown", ProductParams{}}), std::invalid_argument);
  CHECK_THROWS_AS(make_example({"product", so3_radial_action()}), std::invalid_argument);
}
