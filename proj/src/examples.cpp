// SPDX-License-Identifier: Apache-2.0
#include "imtk/examples.hpp"

#include <cmath>
#include <stdexcept>

namespace imtk {

namespace {

Report fresh(const std::string& command, const SamplePlan& plan) {
  Report r;
  r.command = command;
  r.seed = plan.seed;
  r.samples = plan.count;
  return r;
}

void require(const Report& rep, const std::string& what) {
  if (!rep.pass()) throw PreconditionError(what + "\n" + rep.summary(), rep);
}

// Omega(rho b_a, d_i)
CouplingData coupling_from_omega(const LieAlgebroid& base, const FiberBracket& g, const LinearConnection& conn,
                                 const CoeffForm& omega) {
  if (omega.degree() != 2 || omega.rank() != g.rank() || omega.dim() != base.dim())
    throw DimensionError("Omega must be a 2-form valued in the Lie algebra bundle");
  CouplingData cd(base, g, conn);
  for (int a = 0; a < base.rank(); ++a)
    for (int i = 0; i < base.dim(); ++i)
      for (int c = 0; c < g.rank(); ++c) {
        Expr acc;
        for (int j = 0; j < base.dim(); ++j) {
          const Expr& rho = base.anchor()(j, a);
          if (rho.is_zero() || i == j) continue;
          std::vector<int> slots{j, i};
          acc += rho * omega.component(slots, c);
        }
        cd.U(a, i, c) = acc;
      }
  return cd;
}

double bracket_preservation(const LinearConnection& conn, const FiberBracket& g, const Chart& chart,
                            const SamplePlan& plan) {
  CouplingData probe(LieAlgebroid(chart, 0, ExprMatrix(chart.dim, 0)), g, conn);
  return check_structure_equations(probe, StructureVariant::S1S3, plan).residual("S1");
}

Model finish_from_coupling(const std::string& family, const CouplingData& cd, const SamplePlan& plan) {
  Model m;
  m.family = family;
  m.coupling = cd;
  m.form = coupling_to_im(cd, plan);
  m.algebroid = m.form->algebroid();
  m.ideal = IdealBundle(m.algebroid, cd.k());
  return m;
}

Model make_product(const ProductParams& p, const SamplePlan& plan) {
  CouplingData cd(p.base, p.algebra, LinearConnection(p.base.dim(), p.algebra.rank()));
  Report rep = fresh("make_example", plan);
  rep.add("jacobi_fiber", p.algebra.jacobi_residual(p.base.chart()), 1e-8);
  rep.append(check_axioms(p.base, nullptr, plan), "base:");
  require(rep, "product: invalid factors");
  return finish_from_coupling("product", cd, plan);
}

Model make_lie_algebra_bundle(const LieAlgebraBundleParams& p, const SamplePlan& plan) {
  const int r = p.algebra.rank();
  const int k = p.k;
  if (k < 1 || k > r) throw std::invalid_argument("lie_algebra_bundle: k must lie in [1, rank]");
  if (p.connection.rank() != k || p.connection.dim() != p.chart.dim)
    throw DimensionError("lie_algebra_bundle: the connection must live on the ideal");
  Report rep = fresh("make_example", plan);
  LieAlgebroid a = bundle_of_algebras(p.chart, p.algebra);
  IdealBundle ideal(a, k);
  rep.append(check_axioms(a, &ideal, plan));
  std::vector<Expr> mixed;
  for (int c = 0; c < k; ++c)
    for (int b = k; b < r; ++b)
      for (int e = 0; e < r; ++e) mixed.push_back(p.algebra.structure(c, b, e));
  rep.add("direct_product", sampled_max_abs(p.chart, mixed, plan), 1e-10);
  rep.add("preserves_bracket", bracket_preservation(p.connection, ideal.bracket, p.chart, plan), 1e-8);
  require(rep, "lie_algebra_bundle: the splitting witness fails");

  FiberBracket rest(r - k);
  for (int x = k; x < r; ++x)
    for (int y = x + 1; y < r; ++y)
      for (int z = k; z < r; ++z) rest.set(x - k, y - k, z - k, p.algebra.structure(x, y, z));
  CouplingData cd(bundle_of_algebras(p.chart, rest), ideal.bracket, p.connection);
  Model m = finish_from_coupling("lie_algebra_bundle", cd, plan);
  return m;
}

Model make_action(const ActionParams& p, const SamplePlan& plan) {
  LieAlgebroid a = action_algebroid(p.chart, p.algebra, p.fields);
  LinearConnection conn(p.chart.dim, a.rank());
  if (!p.frame.data.empty()) {
    ExprMatrix inv = inverse(p.frame);
    a = a.change_frame(p.frame, inv);
    conn = conn.change_frame(p.frame, inv);
  }
  IdealBundle ideal(a, p.k);
  Report rep = check_axioms(a, &ideal, plan);
  require(rep, "action: the algebroid or its ideal fails");
  Model m;
  m.family = "action";
  m.algebroid = a;
  m.ideal = ideal;
  m.connection = conn;
  m.splitting = p.splitting;
  m.form = cartan_build_connection(a, ideal, p.splitting, conn, plan);
  m.coupling = extract_coupling(a, ideal, *m.form, plan);
  return m;
}

Model make_principal(const std::string& family, const PrincipalParams& p, const SamplePlan& plan) {
  const int n = p.base.dim();
  const int k = p.algebra.rank();
  if (p.connection.rank() != k || p.connection.dim() != n)
    throw DimensionError(family + ": the connection must live on the Lie algebra bundle");
  const Chart& chart = p.base.chart();
  Report rep = fresh("make_example", plan);
  rep.add("preserves_bracket", bracket_preservation(p.connection, p.algebra, chart, plan), 1e-8);
  Curvature r = curvature_tensor(p.connection);
  const auto& pairs = increasing_tuples(n, 2);
  if (family == "principal_type_flat") {
    std::vector<Expr> curv;
    for (const auto& m : r.r) curv.insert(curv.end(), m.data.begin(), m.data.end());
    rep.add("kernel_flat", sampled_max_abs(chart, curv, plan), 1e-8);
    std::vector<Section> vals;
    for (std::size_t t = 0; t < pairs.size(); ++t) vals.push_back(p.omega.value(pairs[t]));
    try {
      rep.add("center_valued", center_residual(p.algebra, chart, vals, plan), 1e-8);
    } catch (const DegeneracyError& e) {
      rep.add("center_valued", INFINITY, 1e-8, e.what());
    }
  } else {
    std::vector<Expr> diff;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      ExprMatrix d = r.r[t] - p.algebra.ad(p.omega.value(pairs[t]));
      diff.insert(diff.end(), d.data.begin(), d.data.end());
    }
    rep.add("curvature_is_ad_omega", sampled_max_abs(chart, diff, plan), 1e-8);
  }
  if (n >= 3) {
    CoeffForm d = exterior_covariant_derivative(p.connection, p.omega);
    rep.add("omega_closed", sampled_max_abs(chart, d.components(), plan), 1e-8);
  }
  require(rep, family + ": parameters violate the construction's conditions");

  CouplingData cd = coupling_from_omega(p.base, p.algebra, p.connection, p.omega);
  Report se = check_structure_equations(cd, StructureVariant::S1S3, plan);
  require(se, family + ": coupling fails the structure equations");
  Model m = finish_from_coupling(family, cd, plan);
  if (family == "transitive") {
    ExprMatrix tau(m.algebroid.rank(), n);
    for (int i = 0; i < n; ++i) tau(k + i, i) = Expr(1.0);
    m.form = transitive_im_connection(m.algebroid, tau, plan);
  }
  return m;
}

Model make_rank_one(const RankOneParams& p, const SamplePlan& plan) {
  const LieAlgebroid& b = p.base;
  const int rb = b.rank();
  if (static_cast<int>(p.v.size()) != rb) throw DimensionError("rank_one: V needs one entry per B-frame index");
  if (p.lambda.size() != increasing_tuples(rb, 2).size())
    throw DimensionError("rank_one: lambda needs one entry per increasing pair");
  ExprMatrix anchor(b.dim(), rb + 1);
  for (int i = 0; i < b.dim(); ++i)
    for (int a = 0; a < rb; ++a) anchor(i, a + 1) = b.anchor()(i, a);
  LieAlgebroid a(b.chart(), rb + 1, anchor);
  for (int x = 0; x < rb; ++x) a.set_structure(x + 1, 0, 0, p.v[static_cast<std::size_t>(x)]);
  const auto& pairs = increasing_tuples(rb, 2);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    int x = pairs[t][0], y = pairs[t][1];
    a.set_structure(x + 1, y + 1, 0, p.lambda[t]);
    for (int z = 0; z < rb; ++z) a.set_structure(x + 1, y + 1, z + 1, b.structure(x, y, z));
  }
  IdealBundle ideal(a, 1);
  Report rep = check_axioms(a, &ideal, plan);
  require(rep, "rank_one: V or lambda is not a cocycle");
  Model m;
  m.family = "rank_one";
  m.algebroid = a;
  m.ideal = ideal;
  return m;
}

}  // namespace

// ----------------------------------------------------------- building blocks

FiberBracket so3_bracket() {
  return constant_bracket(3, {{0, 1, 2, 1.0}, {1, 2, 0, 1.0}, {0, 2, 1, -1.0}});
}

FiberBracket constant_bracket(int rank, const std::vector<std::tuple<int, int, int, double>>& entries) {
  FiberBracket br(rank);
  for (auto [a, b, c, v] : entries) br.set(a, b, c, Expr(v));
  return br;
}

LieAlgebroid tangent_algebroid(const Chart& chart) {
  return LieAlgebroid(chart, chart.dim, ExprMatrix::identity(chart.dim));
}

LieAlgebroid bundle_of_algebras(const Chart& chart, const FiberBracket& br) {
  LieAlgebroid a(chart, br.rank(), ExprMatrix(chart.dim, br.rank()));
  for (int x = 0; x < br.rank(); ++x)
    for (int y = x + 1; y < br.rank(); ++y)
      for (int z = 0; z < br.rank(); ++z) a.set_structure(x, y, z, br.structure(x, y, z));
  return a;
}

LieAlgebroid action_algebroid(const Chart& chart, const FiberBracket& g, const ExprMatrix& fields) {
  if (fields.rows != chart.dim || fields.cols != g.rank())
    throw DimensionError("action: fields must be dim x rank");
  LieAlgebroid a(chart, g.rank(), fields);
  for (int x = 0; x < g.rank(); ++x)
    for (int y = x + 1; y < g.rank(); ++y)
      for (int z = 0; z < g.rank(); ++z) a.set_structure(x, y, z, g.structure(x, y, z));
  return a;
}

ExprMatrix rotation_fields() {
  Expr x1 = Expr::coordinate(0), x2 = Expr::coordinate(1), x3 = Expr::coordinate(2);
  ExprMatrix m(3, 3);
  // columns: x cross e_1, x cross e_2, x cross e_3
  m(1, 0) = x3;
  m(2, 0) = -x2;
  m(0, 1) = -x3;
  m(2, 1) = x1;
  m(0, 2) = x2;
  m(1, 2) = -x1;
  return m;
}

Model make_example(const ExampleSpec& spec, const SamplePlan& plan) {
  const std::string& n = spec.name;
  auto mismatch = [&]() { return std::invalid_argument("example '" + n + "': parameters of the wrong family"); };
  if (n == "product") {
    if (auto* p = std::get_if<ProductParams>(&spec.params)) return make_product(*p, plan);
    throw mismatch();
  }
  if (n == "lie_algebra_bundle") {
    if (auto* p = std::get_if<LieAlgebraBundleParams>(&spec.params)) return make_lie_algebra_bundle(*p, plan);
    throw mismatch();
  }
  if (n == "action") {
    if (auto* p = std::get_if<ActionParams>(&spec.params)) return make_action(*p, plan);
    throw mismatch();
  }
  if (n == "principal_type" || n == "principal_type_flat" || n == "transitive") {
    if (auto* p = std::get_if<PrincipalParams>(&spec.params)) {
      if (n == "transitive") {
        const ExprMatrix id = ExprMatrix::identity(p->base.dim());
        if (p->base.rank() != p->base.dim() ||
            max_difference(p->base.chart(), p->base.anchor(), id) > 1e-12)
          throw std::invalid_argument("transitive: the base must be the tangent algebroid");
      }
      return make_principal(n, *p, plan);
    }
    throw mismatch();
  }
  if (n == "rank_one") {
    if (auto* p = std::get_if<RankOneParams>(&spec.params)) return make_rank_one(*p, plan);
    throw mismatch();
  }
  throw std::invalid_argument("unknown example family '" + n + "'");
}

// --------------------------------------------------------------- transitive

IMForm transitive_im_connection(const LieAlgebroid& a, const ExprMatrix& tau, const SamplePlan& plan) {
  const int r = a.rank();
  const int n = a.dim();
  if (tau.rows != r || tau.cols != n) throw DimensionError("transitive: tau must be rank x dim");
  const int k = r - n;
  Report rep = fresh("transitive_im_connection", plan);
  rep.add("splits_anchor", max_difference(a.chart(), a.anchor() * tau, ExprMatrix::identity(n), plan.count, plan.seed),
          1e-10);
  int deficient = 0;
  {
    std::vector<Expr> entries = a.anchor().data;
    ExprProgram prog(entries);
    for_each_sample(a.chart(), plan, [&](const Point& p) {
      auto v = prog.evaluate(p);
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(v.data(), n, r);
      if (numeric_rank(m) != n) ++deficient;
    });
  }
  rep.add("transitive", deficient, 0.5, "points where the anchor is not onto");
  if (k < 0) rep.add("isotropy_frame", INFINITY, 0.0, "rank below dimension");
  else {
    std::vector<Expr> iso;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) iso.push_back(a.anchor()(i, c));
    rep.add("isotropy_frame", sampled_max_abs(a.chart(), iso, plan), 1e-10);
  }
  require(rep, "transitive_im_connection refused");

  ExprMatrix proj = ExprMatrix::identity(r) - tau * a.anchor();
  ExprMatrix l = proj.block(0, 0, k, r);
  std::vector<CoeffForm> lfr;
  for (int b = 0; b < r; ++b) {
    CoeffForm w(n, k, 1);
    for (int i = 0; i < n; ++i) {
      Section t(static_cast<std::size_t>(r));
      for (int c = 0; c < r; ++c) t[static_cast<std::size_t>(c)] = tau(c, i);
      Section br = a.bracket(t, frame_section(r, b));
      for (int c = 0; c < k; ++c) {
        Expr acc;
        for (int d = 0; d < r; ++d) acc += l(c, d) * br[static_cast<std::size_t>(d)];
        w.at(static_cast<std::size_t>(i), c) = acc;
      }
    }
    lfr.push_back(w);
  }
  return IMForm::one_form(a, l, std::move(lfr));
}

// ------------------------------------------------------------------ presets

ExampleSpec product_so3_example() {
  return {"product", ProductParams{tangent_algebroid(Chart(2)), so3_bracket()}};
}

ActionParams so3_radial_action() {
  Chart chart(3, {{0.25, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}, true);
  Expr x1 = Expr::coordinate(0), x2 = Expr::coordinate(1), x3 = Expr::coordinate(2);
  ExprMatrix frame = ExprMatrix::identity(3);
  frame(0, 0) = x1;
  frame(1, 0) = x2;
  frame(2, 0) = x3;
  Expr r2 = x1 * x1 + x2 * x2 + x3 * x3;
  ExprMatrix l(1, 3);
  l(0, 0) = Expr(1.0);
  l(0, 1) = x2 / r2;
  l(0, 2) = x3 / r2;
  return ActionParams{chart, so3_bracket(), rotation_fields(), frame, 1, l};
}

ExampleSpec principal_flat_example() {
  Chart chart(2);
  CoeffForm omega(2, 1, 2);
  omega.at(0, 0) = Expr(1.0);
  return {"principal_type_flat",
          PrincipalParams{tangent_algebroid(chart), FiberBracket(1), LinearConnection(2, 1), omega}};
}

ExampleSpec principal_so3_example() {
  Chart chart(2);
  FiberBracket g = so3_bracket();
  Expr x1 = Expr::coordinate(0), x2 = Expr::coordinate(1);
  // theta = x2 dx1 e_1 + (x1 e_2 + x1 x2 e_3) dx2
  Section th1{x2, Expr(), Expr()};
  Section th2{Expr(), x1, x1 * x2};
  LinearConnection conn(2, 3, {g.ad(th1), g.ad(th2)});
  Section d = Section{differentiate(th2[0], 0), differentiate(th2[1], 0), differentiate(th2[2], 0)} -
              Section{differentiate(th1[0], 1), differentiate(th1[1], 1), differentiate(th1[2], 1)};
  Section om = d + g.bracket(th1, th2);
  CoeffForm omega(2, 3, 2);
  for (int c = 0; c < 3; ++c) omega.at(0, c) = om[static_cast<std::size_t>(c)];
  return {"principal_type", PrincipalParams{tangent_algebroid(chart), g, conn, omega}};
}

}  // namespace imtk
