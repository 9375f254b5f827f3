// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "imtk/coupling.hpp"
#include "imtk/groupoid.hpp"
#include "support.hpp"

using namespace imtk;

namespace {

Eigen::MatrixXd rotation_z(double t) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(3, 3);
  r(0, 0) = std::cos(t);
  r(0, 1) = -std::sin(t);
  r(1, 0) = std::sin(t);
  r(1, 1) = std::cos(t);
  return r;
}

// alpha + s^* beta with beta = x2 dx1 on the radial chart
MultForm perturbed_radial(const GroupoidFixture& f) {
  CoeffForm beta(3, 1, 1);
  beta.at(0, 0) = Expr::coordinate(1);
  return connection_from_splitting(f.gpd, f.splitting) + source_pullback(f.gpd, beta);
}

}  // namespace

TEST_CASE("matrix group") {
  MatrixGroup g = so3_group();
  CHECK(g.dim() == 3);
  CHECK(g.structure(0, 1, 2) == doctest::Approx(1.0));
  CHECK(g.structure(1, 0, 2) == doctest::Approx(-1.0));
  CHECK(g.closure_residual() < 1e-12);

  SUBCASE("exp against the closed form rotation") {
    Eigen::VectorXd v = Eigen::Vector3d(0, 0, 0.7);
    CHECK((g.exp(v) - rotation_z(0.7)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd big = Eigen::Vector3d(0, 0, 5.0);
    CHECK((g.exp(big) - rotation_z(5.0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("coordinates") {
    Eigen::VectorXd v = Eigen::Vector3d(0.3, -1.2, 0.4);
    double res = 1.0;
    CHECK((g.vee(g.hat(v), &res) - v).norm() < 1e-14);
    CHECK(res < 1e-14);
    g.vee(Eigen::MatrixXd::Identity(3, 3), &res);
    CHECK(res > 0.1);
  }
  SUBCASE("Ad on so(3) is the rotation itself") {
    Eigen::MatrixXd r = rotation_z(0.9);
    CHECK((g.adjoint(r) - r).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("dexp at 0 and against a difference quotient") {
    Eigen::MatrixXd t = g.hat(Eigen::Vector3d(0.2, 0.5, -0.3));
    CHECK((MatrixGroup::dexp_left(Eigen::MatrixXd::Zero(3, 3), g.basis(0)) - g.basis(0)).cwiseAbs().maxCoeff() < 1e-14);
    const double h = 1e-5;
    Eigen::MatrixXd fd = MatrixGroup::expm(-t) *
                         (MatrixGroup::expm(t + h * g.basis(1)) - MatrixGroup::expm(t - h * g.basis(1))) / (2 * h);
    CHECK((MatrixGroup::dexp_left(t, g.basis(1)) - fd).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("invalid bases") {
    CHECK_THROWS_AS(MatrixGroup(3, {g.basis(0), 2.0 * g.basis(0)}), std::invalid_argument);
    CHECK_THROWS_AS(MatrixGroup(3, {g.basis(0), g.basis(1)}), std::invalid_argument);
    CHECK_THROWS_AS(MatrixGroup(2, {g.basis(0)}), std::invalid_argument);
  }
}

TEST_CASE("action groupoids") {
  for (const GroupoidFixture& f : {so2_trivial_fixture(), so3_radial_fixture()}) {
    Report r = f.gpd.check();
    CAPTURE(r.summary());
    CHECK(r.pass());
    CHECK(check_axioms(f.gpd.algebroid(), nullptr, {}).pass());
  }
  GroupoidFixture r = so3_radial_fixture();
  SUBCASE("anchor is minus the fundamental vector fields") {
    // rho(e_a)(x) = x cross e_a
    Expr x1 = Expr::coordinate(0), x2 = Expr::coordinate(1), x3 = Expr::coordinate(2);
    const ExprMatrix& a = r.gpd.anchor();
    CHECK(max_difference(r.gpd.chart(), a(1, 0), x3) < 1e-14);
    CHECK(max_difference(r.gpd.chart(), a(2, 0), -x2) < 1e-14);
    CHECK(max_difference(r.gpd.chart(), a(0, 1), -x3) < 1e-14);
    CHECK(max_difference(r.gpd.chart(), a(0, 0), Expr(0.0)) < 1e-14);
  }
  SUBCASE("adapted algebroid carries the radial ideal") {
    LieAlgebroid a = r.gpd.adapted_algebroid();
    IdealBundle ideal(a, 1);
    CHECK(check_axioms(a, &ideal, {}).pass());
  }
  SUBCASE("a non-invariant subbundle is flagged") {
    ExprMatrix k(3, 1), adapted = ExprMatrix::identity(3);
    k(0, 0) = Expr(1.0);
    ActionGroupoid bad(so3_group(), r.gpd.chart(), r.gpd.action(), k, adapted);
    Report rep = bad.check();
    CHECK_FALSE(rep.find("ideal_invariance")->pass);
    CHECK_FALSE(rep.find("ideal_in_kernel")->pass);
  }
  SUBCASE("an action that is not associative is flagged") {
    std::vector<Expr> act = r.gpd.action();
    act[0] = act[0] + Expr::coordinate(3) * Expr::coordinate(3) - Expr(1.0);
    ActionGroupoid bad(so3_group(), r.gpd.chart(), act, r.gpd.kframe(), r.gpd.adapted_frame());
    CHECK_FALSE(bad.check().find("composition")->pass);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(ActionGroupoid(so3_group(), r.gpd.chart(), {Expr::coordinate(0)}, r.gpd.kframe(),
                                   r.gpd.adapted_frame()),
                    DimensionError);
    CHECK_THROWS_AS(ActionGroupoid(so3_group(), r.gpd.chart(), r.gpd.action(), r.gpd.kframe()),
                    std::invalid_argument);
  }
  SUBCASE("act_derivative against a difference quotient") {
    std::mt19937_64 rng(3);
    Arrow p = r.gpd.random_arrow(rng);
    GTangent t = r.gpd.random_tangent(rng);
    const double h = 1e-6;
    auto moved = [&](double e) {
      Point x = p.x;
      for (int i = 0; i < 3; ++i) x[static_cast<std::size_t>(i)] += e * t.w(i);
      return r.gpd.act(p.g * r.gpd.group().exp(e * t.v), x);
    };
    Point a = moved(h), b = moved(-h);
    Eigen::VectorXd d = r.gpd.act_derivative(p.g, p.x, t.v, t.w);
    for (int i = 0; i < 3; ++i) CHECK(std::abs((a[i] - b[i]) / (2 * h) - d(i)) < 1e-8);
  }
}

TEST_CASE("connection forms from splittings") {
  SUBCASE("SO(2) on R: the Maurer-Cartan component") {
    GroupoidFixture f = so2_trivial_fixture();
    MultForm alpha = connection_from_splitting(f.gpd, f.splitting);
    std::mt19937_64 rng(1);
    Arrow p = f.gpd.random_arrow(rng);
    GTangent t{Eigen::VectorXd::Constant(1, 0.8), Eigen::VectorXd::Constant(1, -2.0)};
    CHECK(alpha(p, std::span<const GTangent>(&t, 1))(0) == doctest::Approx(0.8));
    CHECK(delta_residual(f.gpd, alpha, 100, 42) < 1e-8);
  }
  SUBCASE("SO(3) radial") {
    GroupoidFixture f = so3_radial_fixture();
    MultForm alpha = connection_from_splitting(f.gpd, f.splitting);
    CHECK(delta_residual(f.gpd, alpha, 100, 42) < 1e-7);
    CHECK(check_multform(f.gpd, alpha).pass());
  }
  SUBCASE("a fixed-axis projection is refused") {
    GroupoidFixture f = so3_radial_fixture();
    ExprMatrix l(1, 3);
    l(0, 0) = Expr(1.0) / Expr::coordinate(0);
    Report pre = splitting_preconditions(f.gpd, l);
    CHECK(pre.find("splitting_identity")->pass);
    CHECK(pre.residual("equivariance") > 1e-3);
    CHECK_THROWS_AS(connection_from_splitting(f.gpd, l), PreconditionError);
  }
  SUBCASE("shape") {
    GroupoidFixture f = so3_radial_fixture();
    CHECK_THROWS_AS(connection_from_splitting(f.gpd, ExprMatrix(3, 1)), DimensionError);
  }
}

TEST_CASE("simplicial differential") {
  GroupoidFixture f = so3_radial_fixture();
  SUBCASE("delta of delta f vanishes") {
    auto fn = [](std::span<const double> x) {
      return Eigen::VectorXd::Constant(1, std::sin(x[0]) + x[1] * x[2]);
    };
    MultForm df = delta_function(f.gpd, fn);
    CHECK(delta_residual(f.gpd, df, 100, 5) < 1e-7);
    std::mt19937_64 rng(2);
    Arrow p = f.gpd.random_arrow(rng);
    CHECK(std::abs(df(p, {})(0)) > 1e-6);
  }
  SUBCASE("a source pullback breaks multiplicativity") {
    CHECK(delta_residual(f.gpd, perturbed_radial(f), 100, 42) > 1e-3);
  }
  SUBCASE("composability") {
    std::mt19937_64 rng(4);
    Arrow a2 = f.gpd.random_arrow(rng);
    Arrow a1{f.gpd.group().exp(Eigen::Vector3d(0.1, 0.2, 0.3)), f.gpd.act(a2.g, a2.x)};
    ComposablePair p = compose(f.gpd, a1, a2);
    CHECK((p.g1 - a1.g).norm() == 0.0);
    a1.x[0] += 0.1;
    CHECK_THROWS_AS(compose(f.gpd, a1, a2), std::invalid_argument);
  }
}

TEST_CASE("curvature and the structure equation") {
  SUBCASE("SO(2) trivial action") {
    GroupoidFixture f = so2_trivial_fixture();
    MultForm alpha = connection_from_splitting(f.gpd, f.splitting);
    LinearConnection conn = splitting_connection(f.gpd, f.splitting);
    MultForm omega = covariant_exterior_D(f.gpd, alpha, alpha, conn);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 10; ++i) {
      Arrow p = f.gpd.random_arrow(rng);
      std::vector<GTangent> t{f.gpd.random_tangent(rng), f.gpd.random_tangent(rng)};
      CHECK(std::abs(omega(p, t)(0)) < 1e-12);
    }
    Report r = check_groupoid_properties(f.gpd, alpha, omega, conn);
    CAPTURE(r.summary());
    CHECK(r.pass());
  }
  SUBCASE("SO(3) radial") {
    GroupoidFixture f = so3_radial_fixture();
    MultForm alpha = connection_from_splitting(f.gpd, f.splitting);
    LinearConnection conn = splitting_connection(f.gpd, f.splitting);
    MultForm omega = covariant_exterior_D(f.gpd, alpha, alpha, conn);
    CHECK(structure_residual(f.gpd, alpha, omega, conn, 50, 42) < 1e-5);
    CHECK(check_multform(f.gpd, omega).pass());
    Report r = check_groupoid_properties(f.gpd, alpha, omega, conn);
    CAPTURE(r.summary());
    CHECK(r.pass());
    Report h = step_halving(f.gpd, alpha, conn);
    CAPTURE(h.summary());
    CHECK(h.pass());
  }
  SUBCASE("broken multiplicativity fails delta alpha") {
    GroupoidFixture f = so3_radial_fixture();
    MultForm alpha = perturbed_radial(f);
    LinearConnection conn = splitting_connection(f.gpd, f.splitting);
    MultForm omega = covariant_exterior_D(f.gpd, alpha, alpha, conn);
    Report r = check_groupoid_properties(f.gpd, alpha, omega, conn, SamplePlan{42, 40});
    CHECK_FALSE(r.find("delta_alpha")->pass);
  }
}

TEST_CASE("Lie functor") {
  SUBCASE("SO(3) radial") {
    GroupoidFixture f = so3_radial_fixture();
    MultForm alpha = connection_from_splitting(f.gpd, f.splitting);
    IMForm form = differentiate_to_im(f.gpd, alpha);
    // the symbol in the constant frame is the splitting
    ExprMatrix p = f.gpd.adapted_frame();
    ExprMatrix back = form.change_frame(inverse(p), p).symbol_matrix();
    CHECK(max_difference(f.gpd.chart(), back, f.splitting) < 1e-6);
    Report r = lie_functor_report(f.gpd, alpha);
    CAPTURE(r.summary());
    CHECK(r.pass());
    CHECK(r.flags.at("connection_predicate"));
    CHECK(r.find("coupling:S3") != nullptr);
  }
  SUBCASE("SO(2) gives the product connection") {
    GroupoidFixture f = so2_trivial_fixture();
    MultForm alpha = connection_from_splitting(f.gpd, f.splitting);
    IMForm form = differentiate_to_im(f.gpd, alpha);
    CHECK(max_difference(f.gpd.chart(), form.symbol(0).at(0, 0), Expr(1.0)) < 1e-12);
    CHECK(max_difference(f.gpd.chart(), form.op(0).at(0, 0), Expr(0.0)) < 1e-12);
    Report r = lie_functor_report(f.gpd, alpha);
    CAPTURE(r.summary());
    CHECK(r.pass());
  }
}
