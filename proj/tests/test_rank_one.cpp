// SPDX-License-Identifier: Apache-2.0
#include <memory>
#include <stdexcept>

#include "doctest.h"
#include "imtk/examples.hpp"
#include "imtk/rank_one.hpp"
#include "support.hpp"

using namespace imtk;

namespace {

CouplingData line_product() {
  return *make_example({"product", ProductParams{tangent_algebroid(Chart(2)), FiberBracket(1)}}).coupling;
}

CouplingData kernel_flat() { return *make_example(principal_flat_example()).coupling; }

LinearConnection line(const char* g1, const char* g2) {
  return LinearConnection(2, 1, {testing::matrix(1, 1, {g1}, 2), testing::matrix(1, 1, {g2}, 2)});
}

CoeffForm one_form(std::vector<Expr> c) {
  CoeffForm w(static_cast<int>(c.size()), 1, 1);
  for (std::size_t i = 0; i < c.size(); ++i) w.at(static_cast<int>(i), 0) = c[i];
  return w;
}

RankOneData rank_one_model(const LieAlgebroid& base, std::vector<Expr> v, std::vector<Expr> lambda) {
  Model m = make_example({"rank_one", RankOneParams{base, std::move(v), std::move(lambda)}});
  return rank_one_cochains(m.algebroid);
}

}  // namespace

TEST_CASE("extraction on the product") {
  RankOneData d = extract_rank_one(line_product());
  for (const auto& e : d.theta->components()) CHECK(e.is_zero());
  for (const auto& e : d.v) CHECK(e.is_zero());
  for (const auto& e : d.lambda) CHECK(e.is_zero());
  CHECK(check_rank_one(d).pass());
}

TEST_CASE("extraction on the kernel-flat fixture") {
  RankOneData d = extract_rank_one(kernel_flat());
  REQUIRE(d.lambda.size() == 1);
  CHECK(d.lambda[0].is_constant(1.0));
  CHECK(d.lambda_at(1, 0).is_constant(-1.0));
  CHECK(check_rank_one(d).pass());
}

TEST_CASE("extraction refuses higher rank") {
  CHECK_THROWS_AS(extract_rank_one(*make_example(product_so3_example()).coupling), DimensionError);
}

TEST_CASE("cochains read off the algebroid agree with the coupling") {
  Model m = make_example(principal_flat_example());
  RankOneData a = rank_one_cochains(m.algebroid);
  RankOneData b = extract_rank_one(*m.coupling);
  for (std::size_t t = 0; t < a.lambda.size(); ++t) CHECK(max_difference(m.algebroid.chart(), a.lambda[t], b.lambda[t]) < 1e-12);
  for (std::size_t t = 0; t < a.v.size(); ++t) CHECK(max_difference(m.algebroid.chart(), a.v[t], b.v[t]) < 1e-12);
}

TEST_CASE("gauge change") {
  RankOneData d = extract_rank_one(kernel_flat());
  Expr h = exp(Expr::coordinate(0));
  RankOneData g = gauge_transform(d, h);
  Chart chart(2);
  CHECK(max_difference(chart, g.theta->at(0, 0), d.theta->at(0, 0) + Expr(1.0)) < 1e-12);
  CHECK(max_difference(chart, g.theta->at(1, 0), d.theta->at(1, 0)) < 1e-12);
  CHECK(max_difference(chart, g.v[0], d.v[0] + Expr(1.0)) < 1e-12);
  CHECK(max_difference(chart, g.v[1], d.v[1]) < 1e-12);
  CHECK(check_rank_one(g).pass() == check_rank_one(d).pass());

  CouplingData curved(tangent_algebroid(Chart(2)), FiberBracket(1), line("x2", "0"));
  RankOneData c = extract_rank_one(curved);
  CHECK(check_rank_one(gauge_transform(c, h)).pass() == check_rank_one(c).pass());
  CHECK(check_rank_one(gauge_transform(c, Expr(2.0) + Expr::coordinate(1))).pass() == check_rank_one(c).pass());
}

TEST_CASE("trivialized and intrinsic structure equations agree") {
  std::vector<CouplingData> good{line_product(), kernel_flat(), *make_example({"action", so3_radial_action()}).coupling};
  for (const auto& cd : good) {
    CHECK(check_structure_equations(cd).pass());
    CHECK(check_rank_one(extract_rank_one(cd)).pass());
  }

  SUBCASE("curved theta on the tangent algebroid fails S2''") {
    CouplingData cd(tangent_algebroid(Chart(2)), FiberBracket(1), line("x2", "0"));
    Report r = check_rank_one(extract_rank_one(cd));
    CHECK_FALSE(r.find("S2''")->pass);
    CHECK(r.residual("S2''") == doctest::Approx(1.0));
    CHECK_FALSE(check_structure_equations(cd).pass());
  }
  SUBCASE("non-closed Omega fails S3''") {
    CouplingData cd(tangent_algebroid(Chart(3)), FiberBracket(1), LinearConnection(3, 1));
    cd.U(1, 2, 0) = Expr::coordinate(0);
    cd.U(2, 1, 0) = -Expr::coordinate(0);
    CHECK_FALSE(check_rank_one(extract_rank_one(cd)).find("S3''")->pass);
    CHECK_FALSE(check_structure_equations(cd).pass());
  }
  SUBCASE("a U that is not skew fails S3''") {
    CouplingData cd = kernel_flat();
    cd.U(0, 0, 0) = cd.U(0, 0, 0) + Expr::coordinate(0);
    CHECK_FALSE(check_rank_one(extract_rank_one(cd)).find("S3''")->pass);
    CHECK_FALSE(check_structure_equations(cd).pass());
  }
  SUBCASE("a flat non-trivial theta with matching U") {
    CouplingData cd(tangent_algebroid(Chart(2)), FiberBracket(1), line("x2", "x1"));
    CHECK(check_rank_one(extract_rank_one(cd)).pass());
    CHECK(check_structure_equations(cd).pass());
  }
}

TEST_CASE("tangentiality") {
  LieAlgebroid zero_anchor = bundle_of_algebras(Chart(2), FiberBracket(2));
  SUBCASE("kernel is everything") {
    Report bad = check_rank_one(rank_one_model(zero_anchor, {Expr(), Expr()}, {Expr(1.0)}));
    CHECK_FALSE(bad.find("tangential_lambda")->pass);
    CHECK(bad.find("tangential_V")->pass);
    CHECK(check_rank_one(rank_one_model(zero_anchor, {Expr(), Expr()}, {Expr()})).pass());
    Report bad_v = check_rank_one(rank_one_model(zero_anchor, {Expr(1.0), Expr()}, {Expr()}));
    CHECK_FALSE(bad_v.find("tangential_V")->pass);
  }
  SUBCASE("injective anchor has nothing to check") {
    LieAlgebroid tm = tangent_algebroid(Chart(2));
    CHECK(check_rank_one(rank_one_model(tm, {Expr::coordinate(1), Expr::coordinate(0)}, {Expr(3.0)})).pass());
  }
  SUBCASE("rank jumps are discarded") {
    // anchor ramp(x1) d/dx1 vanishes on half of the chart
    auto f = std::make_shared<SampledFunction>();
    f->name = "ramp";
    f->fn = [](std::span<const double> x) { return x[0] > 0 ? x[0] : 0.0; };
    ExprMatrix rho(1, 1);
    rho(0, 0) = Expr::sampled(f);
    LieAlgebroid b(Chart(1), 1, rho);
    RankOneData d = rank_one_model(b, {Expr(1.0)}, {});
    Report r = check_rank_one(d);
    CHECK(r.pass());
    CHECK(r.discarded > 50);
  }
}

TEST_CASE("witnesses") {
  SUBCASE("product with h = 1 and Z = 0") {
    RankOneData d = extract_rank_one(line_product());
    Report r = verify_witness(d, WitnessKind::product, {Expr(1.0), std::vector<Expr>{Expr(), Expr()}, {}, {}, {}});
    CHECK(r.pass());
  }
  SUBCASE("principal type with Omega = dx1 ^ dx2") {
    RankOneData d = extract_rank_one(kernel_flat());
    CoeffForm omega(2, 1, 2);
    omega.at(0, 0) = Expr(1.0);
    RankOneWitness w;
    w.z = std::vector<Expr>{Expr(), Expr()};
    w.theta = one_form({Expr(), Expr()});
    w.omega = omega;
    CHECK(verify_witness(d, WitnessKind::principal_type, w).pass());

    w.omega->at(0, 0) = Expr(2.0);
    CHECK_FALSE(verify_witness(d, WitnessKind::principal_type, w).find("c2")->pass);
  }
  SUBCASE("the same data is not totally flat with Z = 0") {
    RankOneData d = extract_rank_one(kernel_flat());
    RankOneWitness w;
    w.z = std::vector<Expr>{Expr(), Expr()};
    w.theta = one_form({Expr(), Expr()});
    Report r = verify_witness(d, WitnessKind::totally_flat, w);
    CHECK_FALSE(r.pass());
    CHECK(r.residual("c2") == doctest::Approx(1.0));
    // a primitive of lambda exists since Omega = d(x1 dx2)
    w.z = std::vector<Expr>{Expr(), -Expr::coordinate(0)};
    CHECK(verify_witness(d, WitnessKind::totally_flat, w).pass());
  }
  SUBCASE("kernel flat through the IM 2-form (dU, U)") {
    CouplingData cd = kernel_flat();
    RankOneData d = extract_rank_one(cd);
    RankOneWitness w;
    w.z = std::vector<Expr>{Expr(), Expr()};
    w.theta = one_form({Expr(), Expr()});
    w.im = u_two_form(cd);
    Report r = verify_witness(d, WitnessKind::kernel_flat, w);
    CHECK(r.pass());
    w.im = IMForm::zero(cd.base, 1, 2);
    CHECK_FALSE(verify_witness(d, WitnessKind::kernel_flat, w).find("c2")->pass);
  }
  SUBCASE("leafwise flat over a zero anchor with a curved connection") {
    CouplingData cd(bundle_of_algebras(Chart(2), FiberBracket(1)), FiberBracket(1), line("x2", "0"));
    RankOneData d = extract_rank_one(cd);
    RankOneWitness w;
    w.z = std::vector<Expr>{Expr()};
    w.theta = one_form({Expr::coordinate(1), Expr()});
    CHECK(verify_witness(d, WitnessKind::leafwise_flat, w).pass());
    CHECK_FALSE(verify_witness(d, WitnessKind::totally_flat, w).find("theta_closed")->pass);
  }
  SUBCASE("a trivialization removes a closed V") {
    RankOneData d = rank_one_model(tangent_algebroid(Chart(2)), {Expr(1.0), Expr()}, {Expr()});
    RankOneWitness w;
    w.z = std::vector<Expr>{Expr(), Expr()};
    CHECK_FALSE(verify_witness(d, WitnessKind::product, w).find("c1")->pass);
    w.h = exp(-Expr::coordinate(0));
    CHECK(verify_witness(d, WitnessKind::product, w).pass());
    w.h = Expr::coordinate(0);
    CHECK_FALSE(verify_witness(d, WitnessKind::product, w).pass());
  }
  SUBCASE("missing witnesses") {
    RankOneData d = extract_rank_one(kernel_flat());
    CHECK_THROWS_AS(verify_witness(d, WitnessKind::product, {}), std::invalid_argument);
    RankOneWitness w;
    w.z = std::vector<Expr>{Expr(), Expr()};
    CHECK_THROWS_AS(verify_witness(d, WitnessKind::principal_type, w), std::invalid_argument);
    w.theta = one_form({Expr(), Expr()});
    CHECK_THROWS_AS(verify_witness(d, WitnessKind::kernel_flat, w), std::invalid_argument);
  }
  SUBCASE("kind names round trip") {
    for (WitnessKind k : {WitnessKind::product, WitnessKind::totally_flat, WitnessKind::leafwise_flat,
                          WitnessKind::kernel_flat, WitnessKind::principal_type})
      CHECK(parse_witness_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_witness_kind("sideways"), std::invalid_argument);
  }
}

TEST_CASE("twisted differential matches the change of splitting") {
  // b'_a = b_a + Z_a e changes lambda by d_B Z
  LieAlgebroid tm = tangent_algebroid(Chart(2));
  std::vector<Expr> v{Expr::coordinate(1), Expr::coordinate(0)};
  Model m = make_example({"rank_one", RankOneParams{tm, v, {Expr(1.0)}}});
  std::vector<Expr> z{Expr::coordinate(0) * Expr::coordinate(1), sin(Expr::coordinate(0))};
  ExprMatrix p = ExprMatrix::identity(3);
  p(0, 1) = z[0];
  p(0, 2) = z[1];
  LieAlgebroid moved = m.algebroid.change_frame(p, inverse(p));
  std::vector<Expr> dz = twisted_differential(tm, v, z);
  CHECK(max_difference(tm.chart(), moved.structure(1, 2, 0), Expr(1.0) + dz[0]) < 1e-10);
}
