// SPDX-License-Identifier: Apache-2.0
#include "imtk/coupling.hpp"

#include <cmath>

namespace imtk {

namespace {

VectorField coordinate_field(int dim, int i) {
  VectorField x(static_cast<std::size_t>(dim));
  x[static_cast<std::size_t>(i)] = Expr(1.0);
  return x;
}

void append(std::vector<Expr>& out, const Section& s) { out.insert(out.end(), s.begin(), s.end()); }

Report fresh(const char* command, const SamplePlan& plan) {
  Report r;
  r.command = command;
  r.seed = plan.seed;
  r.samples = plan.count;
  return r;
}

}  // namespace

CouplingData::CouplingData(LieAlgebroid b, FiberBracket br, LinearConnection conn)
    : base(std::move(b)), kbracket(std::move(br)), nabla(std::move(conn)) {
  if (nabla.rank() != kbracket.rank() || nabla.dim() != base.dim())
    throw DimensionError("coupling: connection must live on the Lie algebra bundle");
  u.resize(static_cast<std::size_t>(base.rank() * base.dim() * kbracket.rank()));
}

Section CouplingData::u_value(const Section& alpha, const VectorField& x) const {
  if (static_cast<int>(alpha.size()) != base_rank() || static_cast<int>(x.size()) != dim())
    throw DimensionError("U evaluated on sections of the wrong shape");
  Section out = zero_section(k());
  for (int a = 0; a < base_rank(); ++a) {
    if (alpha[static_cast<std::size_t>(a)].is_zero()) continue;
    for (int i = 0; i < dim(); ++i) {
      Expr w = alpha[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(i)];
      if (w.is_zero()) continue;
      for (int c = 0; c < k(); ++c) out[static_cast<std::size_t>(c)] += w * U(a, i, c);
    }
  }
  return out;
}

CoeffForm CouplingData::u_form(int a) const {
  CoeffForm w(dim(), k(), 1);
  for (int i = 0; i < dim(); ++i)
    for (int c = 0; c < k(); ++c) w.at(static_cast<std::size_t>(i), c) = U(a, i, c);
  return w;
}

// -------------------------------------------------------------- extraction

std::pair<ExprMatrix, ExprMatrix> splitting_frame(const IMForm& form) {
  const int r = form.algebroid().rank();
  const int k = form.value_rank();
  ExprMatrix l = form.symbol_matrix();
  ExprMatrix q = ExprMatrix::identity(r), qi = ExprMatrix::identity(r);
  for (int c = 0; c < k; ++c)
    for (int a = k; a < r; ++a) {
      q(c, a) = -l(c, a);
      qi(c, a) = l(c, a);
    }
  return {q, qi};
}

CouplingData extract_coupling(const LieAlgebroid& a, const IdealBundle& ideal, const IMForm& form,
                              const SamplePlan& plan) {
  if (form.degree() != 1 || form.value_rank() != ideal.k)
    throw DimensionError("extract_coupling: expected a 1-form valued in the ideal");
  Report pre = check_im_form(form, canonical_representation(a, ideal, plan), plan);
  if (!pre.flags["connection_predicate"]) {
    pre.add("connection_predicate", INFINITY, 0.0, "symbol is not the identity on the ideal");
  }
  if (!pre.pass()) throw PreconditionError("extract_coupling: not an IM connection 1-form\n" + pre.summary(), pre);

  const int r = a.rank();
  const int k = ideal.k;
  const int n = a.dim();
  auto [q, qi] = splitting_frame(form);
  IMForm adapted = form.change_frame(q, qi);
  const LieAlgebroid& af = adapted.algebroid();

  LieAlgebroid b(a.chart(), r - k, af.anchor().block(0, k, n, r - k));
  for (int p = k; p < r; ++p)
    for (int s = p + 1; s < r; ++s)
      for (int c = k; c < r; ++c) b.set_structure(p - k, s - k, c - k, af.structure(p, s, c));

  std::vector<ExprMatrix> gamma;
  for (int i = 0; i < n; ++i) {
    ExprMatrix g(k, k);
    for (int d = 0; d < k; ++d)
      for (int c = 0; c < k; ++c) g(c, d) = adapted.op(d).at(static_cast<std::size_t>(i), c);
    gamma.push_back(g);
  }
  CouplingData cd(b, ideal.bracket, LinearConnection(n, k, gamma));
  for (int p = 0; p < r - k; ++p)
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) cd.U(p, i, c) = -adapted.op(k + p).at(static_cast<std::size_t>(i), c);

  double skew = u_skew_residual(cd, plan);
  if (!(skew < 1e-8)) {
    Report bad = fresh("extract_coupling", plan);
    bad.add("U_skew", skew, 1e-8);
    throw PreconditionError("extract_coupling: U fails the skew pairing\n" + bad.summary(), bad);
  }
  return cd;
}

// ------------------------------------------------------------ construction

LieAlgebroid build_semidirect(const CouplingData& cd) {
  const int k = cd.k();
  const int rb = cd.base_rank();
  const int n = cd.dim();
  ExprMatrix anchor(n, k + rb);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < rb; ++a) anchor(i, k + a) = cd.base.anchor()(i, a);
  LieAlgebroid out(cd.chart(), k + rb, anchor);

  for (int c = 0; c < k; ++c)
    for (int d = c + 1; d < k; ++d)
      for (int e = 0; e < k; ++e) out.set_structure(c, d, e, cd.kbracket.structure(c, d, e));

  for (int a = 0; a < rb; ++a) {
    VectorField rho = cd.base.anchor_of(frame_section(rb, a));
    for (int c = 0; c < k; ++c) {
      Section v = covariant_derivative(cd.nabla, rho, frame_section(k, c));
      for (int e = 0; e < k; ++e) out.set_structure(k + a, c, e, v[static_cast<std::size_t>(e)]);
    }
  }
  for (int a = 0; a < rb; ++a)
    for (int b = a + 1; b < rb; ++b) {
      for (int c = 0; c < rb; ++c) out.set_structure(k + a, k + b, k + c, cd.base.structure(a, b, c));
      Section v = cd.u_value(frame_section(rb, a), cd.base.anchor_of(frame_section(rb, b)));
      for (int e = 0; e < k; ++e) out.set_structure(k + a, k + b, e, v[static_cast<std::size_t>(e)]);
    }
  return out;
}

IMForm coupling_to_im(const CouplingData& cd, const SamplePlan& plan) {
  Report se = check_structure_equations(cd, StructureVariant::S1S3, plan);
  if (!se.pass()) throw PreconditionError("coupling_to_im: structure equations fail\n" + se.summary(), se);
  const int k = cd.k();
  const int rb = cd.base_rank();
  const int n = cd.dim();
  LieAlgebroid a = build_semidirect(cd);
  ExprMatrix l(k, k + rb);
  for (int c = 0; c < k; ++c) l(c, c) = Expr(1.0);
  std::vector<CoeffForm> lfr;
  for (int c = 0; c < k; ++c) {
    CoeffForm w(n, k, 1);
    for (int i = 0; i < n; ++i)
      for (int e = 0; e < k; ++e) w.at(static_cast<std::size_t>(i), e) = cd.nabla.christoffel(i)(e, c);
    lfr.push_back(w);
  }
  for (int p = 0; p < rb; ++p) lfr.push_back(Expr(-1.0) * cd.u_form(p));
  return IMForm::one_form(a, l, std::move(lfr));
}

// -------------------------------------------------------- structure equations

double u_skew_residual(const CouplingData& cd, const SamplePlan& plan) {
  const int rb = cd.base_rank();
  std::vector<Expr> res;
  for (int a = 0; a < rb; ++a)
    for (int b = a; b < rb; ++b) {
      Section ea = frame_section(rb, a), eb = frame_section(rb, b);
      append(res, cd.u_value(ea, cd.base.anchor_of(eb)) + cd.u_value(eb, cd.base.anchor_of(ea)));
    }
  return sampled_max_abs(cd.chart(), res, plan);
}

IMForm u_two_form(const CouplingData& cd) {
  std::vector<CoeffForm> sym, op;
  for (int a = 0; a < cd.base_rank(); ++a) {
    CoeffForm w = cd.u_form(a);
    op.push_back(exterior_covariant_derivative(cd.nabla, w));
    sym.push_back(w);
  }
  return IMForm(cd.base, cd.k(), 2, std::move(sym), std::move(op));
}

namespace {

double s1_residual(const CouplingData& cd, const SamplePlan& plan, int* discarded) {
  const int k = cd.k();
  std::vector<Expr> res;
  for (int i = 0; i < cd.dim(); ++i) {
    VectorField x = coordinate_field(cd.dim(), i);
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) {
        Section ea = frame_section(k, a), eb = frame_section(k, b);
        append(res, covariant_derivative(cd.nabla, x, cd.kbracket.bracket(ea, eb)) -
                        cd.kbracket.bracket(covariant_derivative(cd.nabla, x, ea), eb) -
                        cd.kbracket.bracket(ea, covariant_derivative(cd.nabla, x, eb)));
      }
  }
  return sampled_max_abs(cd.chart(), res, plan, discarded);
}

}  // namespace

Report check_structure_equations(const CouplingData& cd, StructureVariant variant, const SamplePlan& plan) {
  Report rep = fresh("check_structure_equations", plan);
  const int k = cd.k();
  const int rb = cd.base_rank();
  const int n = cd.dim();
  const Chart& chart = cd.chart();
  Curvature r = curvature_tensor(cd.nabla);

  if (variant == StructureVariant::S1pS3p) {
    rep.add("S1'", s1_residual(cd, plan, &rep.discarded), 1e-8);
    std::vector<Expr> curv;
    for (const auto& m : r.r) curv.insert(curv.end(), m.data.begin(), m.data.end());
    rep.add("kernel_flat", sampled_max_abs(chart, curv, plan, &rep.discarded), 1e-8);
    std::vector<Section> vals;
    for (int a = 0; a < rb; ++a)
      for (int i = 0; i < n; ++i) vals.push_back(cd.u_value(frame_section(rb, a), coordinate_field(n, i)));
    try {
      rep.add("S2'", center_residual(cd.kbracket, chart, vals, plan), 1e-8);
    } catch (const DegeneracyError& e) {
      rep.add("S2'", INFINITY, 1e-8, e.what());
    }
    if (n >= 2) {
      Report im = check_im_form(u_two_form(cd), induced_representation(cd.base, cd.nabla), plan);
      im.flags.clear();
      rep.append(im, "S3':");
    } else {
      rep.notes.push_back("S3' skipped: 2-forms vanish on a 1-dimensional chart");
    }
    return rep;
  }

  rep.add("S1", s1_residual(cd, plan, &rep.discarded), 1e-8);

  std::vector<Expr> s2;
  for (int a = 0; a < rb; ++a)
    for (int j = 0; j < n; ++j) {
      ExprMatrix acc(k, k);
      for (int i = 0; i < n; ++i) {
        const Expr& rho = cd.base.anchor()(i, a);
        if (rho.is_zero() || i == j) continue;
        ExprMatrix rij = r.value(i, j);
        for (auto& e : rij.data) e = rho * e;
        acc = acc + rij;
      }
      acc = acc - cd.kbracket.ad(cd.u_value(frame_section(rb, a), coordinate_field(n, j)));
      s2.insert(s2.end(), acc.data.begin(), acc.data.end());
    }
  rep.add("S2", sampled_max_abs(chart, s2, plan, &rep.discarded), 1e-8);

  auto nab = [&](const VectorField& x, const Section& s) { return covariant_derivative(cd.nabla, x, s); };
  auto uv = [&](const Section& al, const VectorField& x) { return cd.u_value(al, x); };
  std::vector<Expr> s3;
  for (int a = 0; a < rb; ++a)
    for (int b = 0; b < rb; ++b) {
      Section al = frame_section(rb, a), be = frame_section(rb, b);
      VectorField ra = cd.base.anchor_of(al), rbv = cd.base.anchor_of(be);
      Section ab = cd.base.bracket(al, be);
      for (int j = 0; j < n; ++j) {
        VectorField x = coordinate_field(n, j);
        append(s3, nab(ra, uv(be, x)) - nab(rbv, uv(al, x)) + nab(x, uv(al, rbv)) + uv(al, vf_bracket(rbv, x)) -
                       uv(be, vf_bracket(ra, x)) - uv(ab, x));
      }
    }
  rep.add("S3", sampled_max_abs(chart, s3, plan, &rep.discarded), 1e-8);
  rep.add("U_skew", u_skew_residual(cd, plan), 1e-8);
  return rep;
}

IMForm curvature_im(const CouplingData& cd, const SamplePlan& plan) {
  Report se = check_structure_equations(cd, StructureVariant::S1S3, plan);
  if (!se.pass()) throw PreconditionError("curvature_im: structure equations fail\n" + se.summary(), se);
  if (cd.dim() < 2) throw DimensionError("curvature_im: the chart must have dimension at least 2");
  const int k = cd.k();
  const int n = cd.dim();
  Curvature r = curvature_tensor(cd.nabla);
  std::vector<CoeffForm> sym, op;
  for (int c = 0; c < k; ++c) {
    sym.emplace_back(n, k, 1);
    op.push_back(r.apply(frame_section(k, c)));
  }
  for (int a = 0; a < cd.base_rank(); ++a) {
    CoeffForm w = cd.u_form(a);
    op.push_back(Expr(-1.0) * exterior_covariant_derivative(cd.nabla, w));
    sym.push_back(Expr(-1.0) * w);
  }
  return IMForm(build_semidirect(cd), k, 2, std::move(sym), std::move(op));
}

// ---------------------------------------------------------- classification

std::vector<std::string> FlatnessClass::names() const {
  std::vector<std::string> out;
  if (totally_flat) out.emplace_back("totally_flat");
  if (leafwise_flat) out.emplace_back("leafwise_flat");
  if (kernel_flat) out.emplace_back("kernel_flat");
  if (out.empty()) out.emplace_back("none");
  return out;
}

FlatnessClass classify_flatness(const CouplingData& cd, const SamplePlan& plan) {
  FlatnessClass out;
  out.report = fresh("classify_flatness", plan);
  Report& rep = out.report;
  const int rb = cd.base_rank();
  Curvature r = curvature_tensor(cd.nabla);
  std::vector<Expr> curv;
  for (const auto& m : r.r) curv.insert(curv.end(), m.data.begin(), m.data.end());
  rep.add("kernel_flat", sampled_max_abs(cd.chart(), curv, plan, &rep.discarded), 1e-9);

  std::vector<Expr> leaf;
  for (int a = 0; a < rb; ++a)
    for (int b = 0; b < rb; ++b)
      append(leaf, cd.u_value(frame_section(rb, a), cd.base.anchor_of(frame_section(rb, b))));
  rep.add("leafwise_flat", sampled_max_abs(cd.chart(), leaf, plan, &rep.discarded), 1e-9);
  rep.add("U_zero", sampled_max_abs(cd.chart(), cd.u, plan, &rep.discarded), 1e-9);

  out.kernel_flat = rep.find("kernel_flat")->pass;
  out.leafwise_flat = rep.find("leafwise_flat")->pass;
  out.totally_flat = out.kernel_flat && out.leafwise_flat && rep.find("U_zero")->pass;
  rep.flags["totally_flat"] = out.totally_flat;
  rep.flags["leafwise_flat"] = out.leafwise_flat;
  rep.flags["kernel_flat"] = out.kernel_flat;
  return out;
}

// ------------------------------------------------------------- comparisons

double coupling_difference(const CouplingData& x, const CouplingData& y, const SamplePlan& plan) {
  if (x.k() != y.k() || x.base_rank() != y.base_rank() || x.dim() != y.dim())
    throw DimensionError("couplings of different shapes");
  std::vector<Expr> diff;
  const ExprMatrix da = x.base.anchor() - y.base.anchor();
  diff.insert(diff.end(), da.data.begin(), da.data.end());
  const int rb = x.base_rank();
  for (int a = 0; a < rb; ++a)
    for (int b = a + 1; b < rb; ++b)
      for (int c = 0; c < rb; ++c) diff.push_back(x.base.structure(a, b, c) - y.base.structure(a, b, c));
  for (int a = 0; a < x.k(); ++a)
    for (int b = a + 1; b < x.k(); ++b)
      for (int c = 0; c < x.k(); ++c) diff.push_back(x.kbracket.structure(a, b, c) - y.kbracket.structure(a, b, c));
  for (int i = 0; i < x.dim(); ++i) {
    ExprMatrix g = x.nabla.christoffel(i) - y.nabla.christoffel(i);
    diff.insert(diff.end(), g.data.begin(), g.data.end());
  }
  for (std::size_t t = 0; t < x.u.size(); ++t) diff.push_back(x.u[t] - y.u[t]);
  return sampled_max_abs(x.chart(), diff, plan);
}

double algebroid_difference(const LieAlgebroid& x, const LieAlgebroid& y, const SamplePlan& plan) {
  if (x.rank() != y.rank() || x.dim() != y.dim()) throw DimensionError("algebroids of different shapes");
  std::vector<Expr> diff;
  for (int a = 0; a < x.rank(); ++a)
    for (int b = a + 1; b < x.rank(); ++b)
      for (int c = 0; c < x.rank(); ++c) diff.push_back(x.structure(a, b, c) - y.structure(a, b, c));
  for (std::size_t t = 0; t < x.anchor().data.size(); ++t) diff.push_back(x.anchor().data[t] - y.anchor().data[t]);
  return sampled_max_abs(x.chart(), diff, plan);
}

double im_form_difference(const IMForm& x, const IMForm& y, const SamplePlan& plan) {
  if (x.degree() != y.degree() || x.value_rank() != y.value_rank() || x.algebroid().rank() != y.algebroid().rank())
    throw DimensionError("IM forms of different shapes");
  std::vector<Expr> diff;
  for (int a = 0; a < x.algebroid().rank(); ++a) {
    CoeffForm ds = x.symbol(a) - y.symbol(a);
    CoeffForm dl = x.op(a) - y.op(a);
    diff.insert(diff.end(), ds.components().begin(), ds.components().end());
    diff.insert(diff.end(), dl.components().begin(), dl.components().end());
  }
  return sampled_max_abs(x.algebroid().chart(), diff, plan);
}

}  // namespace imtk
