// SPDX-License-Identifier: Apache-2.0
#include "imtk/algebroid.hpp"

#include <cmath>

#include "imtk/im_forms.hpp"

namespace imtk {

// ------------------------------------------------------------ LieAlgebroid

LieAlgebroid::LieAlgebroid(Chart chart, int rank, ExprMatrix anchor)
    : chart_(std::move(chart)), rank_(rank), anchor_(std::move(anchor)),
      c_(static_cast<std::size_t>(rank * rank * rank)) {
  if (rank < 0) throw DimensionError("algebroid rank must be non-negative");
  if (anchor_.rows != chart_.dim || anchor_.cols != rank)
    throw DimensionError("anchor is " + std::to_string(anchor_.rows) + "x" + std::to_string(anchor_.cols) +
                         " but the chart has dimension " + std::to_string(chart_.dim) + " and the rank is " +
                         std::to_string(rank));
}

void LieAlgebroid::set_structure(int a, int b, int c, const Expr& e) {
  if (a < 0 || b < 0 || c < 0 || a >= rank_ || b >= rank_ || c >= rank_)
    throw DimensionError("structure index out of range");
  if (a == b) {
    if (!e.is_zero()) throw std::invalid_argument("structure functions: [e_a, e_a] must vanish");
    return;
  }
  c_[static_cast<std::size_t>((a * rank_ + b) * rank_ + c)] = e;
  c_[static_cast<std::size_t>((b * rank_ + a) * rank_ + c)] = -e;
}

const Expr& LieAlgebroid::structure(int a, int b, int c) const {
  return c_[static_cast<std::size_t>((a * rank_ + b) * rank_ + c)];
}

VectorField LieAlgebroid::anchor_of(const Section& s) const {
  if (static_cast<int>(s.size()) != rank_) throw DimensionError("anchor: section rank mismatch");
  VectorField x(static_cast<std::size_t>(dim()));
  for (int i = 0; i < dim(); ++i) {
    Expr acc;
    for (int a = 0; a < rank_; ++a) acc += anchor_(i, a) * s[static_cast<std::size_t>(a)];
    x[static_cast<std::size_t>(i)] = acc;
  }
  return x;
}

Section LieAlgebroid::frame_bracket(int a, int b) const {
  Section s(static_cast<std::size_t>(rank_));
  for (int c = 0; c < rank_; ++c) s[static_cast<std::size_t>(c)] = structure(a, b, c);
  return s;
}

Section LieAlgebroid::bracket(const Section& x, const Section& y) const {
  if (static_cast<int>(x.size()) != rank_ || static_cast<int>(y.size()) != rank_)
    throw DimensionError("bracket: section rank mismatch");
  Section z = derive(anchor_of(x), y) - derive(anchor_of(y), x);
  for (int a = 0; a < rank_; ++a) {
    const Expr& xa = x[static_cast<std::size_t>(a)];
    if (xa.is_zero()) continue;
    for (int b = 0; b < rank_; ++b) {
      const Expr& yb = y[static_cast<std::size_t>(b)];
      if (yb.is_zero() || a == b) continue;
      Expr w = xa * yb;
      for (int c = 0; c < rank_; ++c) {
        const Expr& s = structure(a, b, c);
        if (!s.is_zero()) z[static_cast<std::size_t>(c)] += w * s;
      }
    }
  }
  return z;
}

LieAlgebroid LieAlgebroid::change_frame(const ExprMatrix& p, const ExprMatrix& p_inv) const {
  if (p.rows != rank_ || p.cols != rank_ || p_inv.rows != rank_ || p_inv.cols != rank_)
    throw DimensionError("frame change: matrices must be rank x rank");
  if (max_difference(chart_, p * p_inv, ExprMatrix::identity(rank_)) > 1e-10)
    throw std::invalid_argument("frame change: P * P_inv is not the identity");
  LieAlgebroid out(chart_, rank_, anchor_ * p);
  std::vector<Section> cols(static_cast<std::size_t>(rank_));
  for (int a = 0; a < rank_; ++a) {
    cols[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(rank_));
    for (int b = 0; b < rank_; ++b) cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = p(b, a);
  }
  for (int a = 0; a < rank_; ++a)
    for (int b = a + 1; b < rank_; ++b) {
      Section old = bracket(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
      for (int c = 0; c < rank_; ++c) {
        Expr acc;
        for (int d = 0; d < rank_; ++d) acc += p_inv(c, d) * old[static_cast<std::size_t>(d)];
        out.set_structure(a, b, c, acc);
      }
    }
  return out;
}

FiberBracket LieAlgebroid::restricted_bracket(int k) const {
  FiberBracket br(k);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      for (int c = 0; c < k; ++c) br.set(a, b, c, structure(a, b, c));
  return br;
}

Section bracket(const LieAlgebroid& a, const Section& x, const Section& y) { return a.bracket(x, y); }

// ---------------------------------------------------------------- ideals

IdealBundle::IdealBundle(LieAlgebroid a, int kk) : parent(std::move(a)), k(kk) {
  if (k < 1 || k > parent.rank()) throw DimensionError("ideal rank must lie in [1, rank]");
  bracket = parent.restricted_bracket(k);
}

Section IdealBundle::include(const Section& xi) const {
  if (static_cast<int>(xi.size()) != k) throw DimensionError("ideal section rank mismatch");
  Section s = zero_section(parent.rank());
  for (int a = 0; a < k; ++a) s[static_cast<std::size_t>(a)] = xi[static_cast<std::size_t>(a)];
  return s;
}

Section IdealBundle::truncate(const Section& s) const { return Section(s.begin(), s.begin() + k); }

// -------------------------------------------------------- representations

Section ARepresentation::act(const Section& alpha, const Section& s) const {
  if (static_cast<int>(s.size()) != rank) throw DimensionError("representation: section rank mismatch");
  Section out = derive(algebroid.anchor_of(alpha), s);
  for (int b = 0; b < algebroid.rank(); ++b) {
    const Expr& ab = alpha[static_cast<std::size_t>(b)];
    if (ab.is_zero()) continue;
    const ExprMatrix& m = coeffs[static_cast<std::size_t>(b)];
    for (int c = 0; c < rank; ++c) {
      Expr acc;
      for (int a = 0; a < rank; ++a) acc += m(c, a) * s[static_cast<std::size_t>(a)];
      out[static_cast<std::size_t>(c)] += ab * acc;
    }
  }
  return out;
}

CoeffForm ARepresentation::act(const Section& alpha, const CoeffForm& w) const {
  CoeffForm out(w.dim(), w.rank(), w.degree());
  for (std::size_t t = 0; t < w.tuple_count(); ++t) {
    Section s(static_cast<std::size_t>(w.rank()));
    for (int a = 0; a < w.rank(); ++a) s[static_cast<std::size_t>(a)] = w.at(t, a);
    Section v = act(alpha, s);
    for (int a = 0; a < w.rank(); ++a) out.at(t, a) = v[static_cast<std::size_t>(a)];
  }
  return out;
}

double ARepresentation::flatness_residual(const SamplePlan& plan) const {
  std::vector<Expr> all;
  const int r = algebroid.rank();
  for (int a = 0; a < r; ++a)
    for (int b = a + 1; b < r; ++b) {
      Section ea = frame_section(r, a), eb = frame_section(r, b);
      Section ab = algebroid.bracket(ea, eb);
      for (int c = 0; c < rank; ++c) {
        Section s = frame_section(rank, c);
        Section f = act(ab, s) - act(ea, act(eb, s)) + act(eb, act(ea, s));
        all.insert(all.end(), f.begin(), f.end());
      }
    }
  return sampled_max_abs(algebroid.chart(), all, plan);
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) { return seed * 0x9E3779B97F4A7C15ULL + salt; }

void ideal_clauses(const LieAlgebroid& a, const IdealBundle& ideal, const SamplePlan& plan, Report& rep) {
  std::vector<Expr> anchor_part;
  for (int i = 0; i < a.dim(); ++i)
    for (int c = 0; c < ideal.k; ++c) anchor_part.push_back(a.anchor()(i, c));
  rep.add("ideal_anchor", sampled_max_abs(a.chart(), anchor_part, plan, &rep.discarded), 1e-8);

  std::vector<Expr> out_part;
  for (int b = 0; b < a.rank(); ++b)
    for (int c = 0; c < ideal.k; ++c)
      for (int d = ideal.k; d < a.rank(); ++d) out_part.push_back(a.structure(b, c, d));
  std::mt19937_64 rng(mix(plan.seed, 3));
  for (int t = 0; t < 2; ++t) {
    Section alpha = random_section(a.rank(), a.dim(), rng);
    Section gamma = ideal.include(random_section(ideal.k, a.dim(), rng));
    Section br = a.bracket(alpha, gamma);
    for (int d = ideal.k; d < a.rank(); ++d) out_part.push_back(br[static_cast<std::size_t>(d)]);
  }
  rep.add("ideal_bracket", sampled_max_abs(a.chart(), out_part, plan, &rep.discarded), 1e-8);
}

}  // namespace

Report check_axioms(const LieAlgebroid& a, const IdealBundle* ideal, const SamplePlan& plan) {
  Report rep;
  rep.command = "check_axioms";
  rep.seed = plan.seed;
  rep.samples = plan.count;
  const int r = a.rank();
  std::mt19937_64 rng(mix(plan.seed, 1));

  std::vector<Expr> jac;
  auto jacobiator = [&](const Section& x, const Section& y, const Section& z) {
    Section j = a.bracket(x, a.bracket(y, z)) + a.bracket(y, a.bracket(z, x)) + a.bracket(z, a.bracket(x, y));
    jac.insert(jac.end(), j.begin(), j.end());
  };
  for (int p = 0; p < r; ++p)
    for (int q = p + 1; q < r; ++q)
      for (int s = q + 1; s < r; ++s) jacobiator(frame_section(r, p), frame_section(r, q), frame_section(r, s));
  for (int t = 0; t < 3; ++t) {
    Section x = random_section(r, a.dim(), rng);
    Section y = random_section(r, a.dim(), rng);
    Section z = random_section(r, a.dim(), rng);
    jacobiator(x, y, z);
  }
  rep.add("jacobi", sampled_max_abs(a.chart(), jac, plan, &rep.discarded), 1e-8);

  std::vector<Expr> mor;
  auto morphism = [&](const Section& x, const Section& y) {
    VectorField lhs = a.anchor_of(a.bracket(x, y));
    VectorField rhs = vf_bracket(a.anchor_of(x), a.anchor_of(y));
    for (std::size_t i = 0; i < lhs.size(); ++i) mor.push_back(lhs[i] - rhs[i]);
  };
  for (int p = 0; p < r; ++p)
    for (int q = p + 1; q < r; ++q) morphism(frame_section(r, p), frame_section(r, q));
  for (int t = 0; t < 3; ++t) morphism(random_section(r, a.dim(), rng), random_section(r, a.dim(), rng));
  rep.add("anchor_morphism", sampled_max_abs(a.chart(), mor, plan, &rep.discarded), 1e-8);

  if (ideal) ideal_clauses(a, *ideal, plan, rep);
  return rep;
}

ARepresentation canonical_representation(const LieAlgebroid& a, const IdealBundle& ideal, const SamplePlan& plan) {
  Report rep;
  ideal_clauses(a, ideal, plan, rep);
  if (!rep.pass()) throw PreconditionError("canonical representation: ideal clauses fail\n" + rep.summary(), rep);
  ARepresentation out;
  out.algebroid = a;
  out.rank = ideal.k;
  for (int b = 0; b < a.rank(); ++b) {
    ExprMatrix m(ideal.k, ideal.k);
    for (int c = 0; c < ideal.k; ++c)
      for (int d = 0; d < ideal.k; ++d) m(d, c) = a.structure(b, c, d);
    out.coeffs.push_back(m);
  }
  return out;
}

// -------------------------------------------------------- Lie derivatives

CoeffForm lie_derivative_vf(const VectorField& x, const CoeffForm& w) {
  if (static_cast<int>(x.size()) != w.dim()) throw DimensionError("Lie derivative: dimension mismatch");
  CoeffForm out(w.dim(), w.rank(), w.degree());
  std::vector<std::vector<Expr>> dx(x.size());  // dx[l][i] = d_i X^l
  for (std::size_t l = 0; l < x.size(); ++l)
    for (int i = 0; i < w.dim(); ++i) dx[l].push_back(differentiate(x[l], i));
  for (std::size_t t = 0; t < w.tuple_count(); ++t) {
    const auto& tup = w.tuple(t);
    for (int a = 0; a < w.rank(); ++a) {
      Expr acc = derive(x, w.at(t, a));
      for (std::size_t m = 0; m < tup.size(); ++m)
        for (int l = 0; l < w.dim(); ++l) {
          const Expr& d = dx[static_cast<std::size_t>(l)][static_cast<std::size_t>(tup[m])];
          if (d.is_zero()) continue;
          std::vector<int> slots = tup;
          slots[m] = l;
          acc += d * w.component(slots, a);
        }
      out.at(t, a) = acc;
    }
  }
  return out;
}

CoeffForm lie_derivative_form(const Section& alpha, const ARepresentation& rep, const CoeffForm& w) {
  if (w.rank() != rep.rank) throw DimensionError("Lie derivative: form not valued in the representation");
  CoeffForm out = lie_derivative_vf(rep.algebroid.anchor_of(alpha), w);
  for (int b = 0; b < rep.algebroid.rank(); ++b) {
    const Expr& ab = alpha[static_cast<std::size_t>(b)];
    if (ab.is_zero()) continue;
    out = out + ab * apply(rep.coeffs[static_cast<std::size_t>(b)], w);
  }
  return out;
}

Report check_A_invariant(const LinearConnection& conn, const ARepresentation& rep, const SamplePlan& plan) {
  Report out;
  out.command = "check_A_invariant";
  out.seed = plan.seed;
  out.samples = plan.count;
  const LieAlgebroid& a = rep.algebroid;
  if (conn.rank() != rep.rank || conn.dim() != a.dim())
    throw DimensionError("A-invariance: connection and representation live on different bundles");
  std::vector<Expr> inv, curv;
  Curvature r = curvature_tensor(conn);
  for (int b = 0; b < a.rank(); ++b) {
    ExprMatrix m = rep.coeffs[static_cast<std::size_t>(b)];
    for (int i = 0; i < a.dim(); ++i) {
      ExprMatrix scaled = conn.christoffel(i);
      for (auto& e : scaled.data) e = a.anchor()(i, b) * e;
      m = m - scaled;
    }
    inv.insert(inv.end(), m.data.begin(), m.data.end());
    for (int j = 0; j < a.dim(); ++j) {
      ExprMatrix acc(rep.rank, rep.rank);
      for (int i = 0; i < a.dim(); ++i) {
        ExprMatrix rij = r.value(i, j);
        for (auto& e : rij.data) e = a.anchor()(i, b) * e;
        acc = acc + rij;
      }
      curv.insert(curv.end(), acc.data.begin(), acc.data.end());
    }
  }
  out.add("A_invariance", sampled_max_abs(a.chart(), inv, plan, &out.discarded), 1e-9);
  out.add("curvature_along_anchor", sampled_max_abs(a.chart(), curv, plan, &out.discarded), 1e-9);
  return out;
}

// -------------------------------------------------------- basic curvature

Section basic_connection_on_a(const LieAlgebroid& a, const LinearConnection& conn, const Section& alpha,
                              const Section& beta) {
  return covariant_derivative(conn, a.anchor_of(beta), alpha) + a.bracket(alpha, beta);
}

VectorField basic_connection_on_tm(const LieAlgebroid& a, const LinearConnection& conn, const Section& alpha,
                                   const VectorField& x) {
  VectorField v = a.anchor_of(covariant_derivative(conn, x, alpha));
  VectorField w = vf_bracket(a.anchor_of(alpha), x);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  return v;
}

Section basic_curvature_value(const LieAlgebroid& a, const LinearConnection& conn, const Section& alpha,
                              const Section& beta, const VectorField& x) {
  auto nab = [&](const VectorField& y, const Section& s) { return covariant_derivative(conn, y, s); };
  return nab(x, a.bracket(alpha, beta)) - a.bracket(nab(x, alpha), beta) - a.bracket(alpha, nab(x, beta)) -
         nab(basic_connection_on_tm(a, conn, beta, x), alpha) + nab(basic_connection_on_tm(a, conn, alpha, x), beta);
}

BasicCurvature::BasicCurvature(const LieAlgebroid& a, const LinearConnection& conn) : a_(a), conn_(conn) {
  if (conn.rank() != a.rank() || conn.dim() != a.dim())
    throw DimensionError("basic curvature: connection must live on the algebroid bundle");
  const int r = a.rank();
  const int n = a.dim();
  r_.resize(static_cast<std::size_t>(r * r * n), zero_section(r));
  for (int p = 0; p < r; ++p)
    for (int q = p + 1; q < r; ++q)
      for (int i = 0; i < n; ++i) {
        VectorField x(static_cast<std::size_t>(n));
        x[static_cast<std::size_t>(i)] = Expr(1.0);
        Section v = basic_curvature_value(a, conn, frame_section(r, p), frame_section(r, q), x);
        r_[static_cast<std::size_t>((p * r + q) * n + i)] = v;
        r_[static_cast<std::size_t>((q * r + p) * n + i)] = Expr(-1.0) * v;
      }
}

const Section& BasicCurvature::frame_value(int a, int b, int i) const {
  return r_[static_cast<std::size_t>((a * a_.rank() + b) * a_.dim() + i)];
}

Section BasicCurvature::value(const Section& alpha, const Section& beta, const VectorField& x) const {
  const int r = a_.rank();
  Section out = zero_section(r);
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q)
      for (int i = 0; i < a_.dim(); ++i) {
        Expr w = alpha[static_cast<std::size_t>(p)] * beta[static_cast<std::size_t>(q)] * x[static_cast<std::size_t>(i)];
        if (w.is_zero()) continue;
        out = out + w * frame_value(p, q, i);
      }
  return out;
}

std::vector<double> BasicCurvature::evaluate(std::span<const double> alpha, std::span<const double> beta,
                                             std::span<const double> x, std::span<const double> point) const {
  const int r = a_.rank();
  std::vector<Expr> flat;
  for (const auto& s : r_) flat.insert(flat.end(), s.begin(), s.end());
  ExprProgram prog(flat);
  auto v = prog.evaluate(point);
  std::vector<double> out(static_cast<std::size_t>(r), 0.0);
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q)
      for (int i = 0; i < a_.dim(); ++i) {
        const double w = alpha[static_cast<std::size_t>(p)] * beta[static_cast<std::size_t>(q)] * x[static_cast<std::size_t>(i)];
        const std::size_t base = static_cast<std::size_t>(((p * r + q) * a_.dim() + i) * r);
        for (int c = 0; c < r; ++c) out[static_cast<std::size_t>(c)] += w * v[base + static_cast<std::size_t>(c)];
      }
  return out;
}

double BasicCurvature::max_abs(const SamplePlan& plan) const {
  std::vector<Expr> flat;
  for (const auto& s : r_) flat.insert(flat.end(), s.begin(), s.end());
  return sampled_max_abs(a_.chart(), flat, plan);
}

// ------------------------------------------------------------------ Cartan

namespace {
Section apply_l(const ExprMatrix& l, const Section& s) {
  Section out(static_cast<std::size_t>(l.rows));
  for (int c = 0; c < l.rows; ++c) {
    Expr acc;
    for (int a = 0; a < l.cols; ++a) acc += l(c, a) * s[static_cast<std::size_t>(a)];
    out[static_cast<std::size_t>(c)] = acc;
  }
  return out;
}
}  // namespace

Report cartan_preconditions(const LieAlgebroid& a, const IdealBundle& ideal, const ExprMatrix& l,
                            const LinearConnection& conn, const SamplePlan& plan) {
  const int r = a.rank();
  const int k = ideal.k;
  if (l.rows != k || l.cols != r) throw DimensionError("Cartan: the symbol must be k x r");
  Report rep;
  rep.command = "cartan_build_connection";
  rep.seed = plan.seed;
  rep.samples = plan.count;

  std::vector<Expr> id;
  for (int c = 0; c < k; ++c)
    for (int d = 0; d < k; ++d) id.push_back(l(c, d) - Expr(c == d ? 1.0 : 0.0));
  rep.add("l_identity_on_ideal", sampled_max_abs(a.chart(), id, plan, &rep.discarded), 1e-10);

  std::vector<Expr> inv;
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q) {
      Section ep = frame_section(r, p), eq = frame_section(r, q);
      Section lhs = ideal.truncate(a.bracket(ep, ideal.include(apply_l(l, eq))));
      Section rhs = apply_l(l, basic_connection_on_a(a, conn, ep, eq));
      Section d = lhs - rhs;
      inv.insert(inv.end(), d.begin(), d.end());
    }
  rep.add("bar_nabla_l", sampled_max_abs(a.chart(), inv, plan, &rep.discarded), 1e-8);

  BasicCurvature rb(a, conn);
  std::vector<Expr> lr;
  for (const auto& s : rb.all()) {
    Section v = apply_l(l, s);
    lr.insert(lr.end(), v.begin(), v.end());
  }
  rep.add("l_basic_curvature", sampled_max_abs(a.chart(), lr, plan, &rep.discarded), 1e-8);
  return rep;
}

IMForm cartan_build_connection(const LieAlgebroid& a, const IdealBundle& ideal, const ExprMatrix& l,
                               const LinearConnection& conn, const SamplePlan& plan) {
  Report rep = cartan_preconditions(a, ideal, l, conn, plan);
  if (!rep.pass()) throw PreconditionError("Cartan construction refused\n" + rep.summary(), rep);
  const int r = a.rank();
  std::vector<CoeffForm> lfr;
  for (int p = 0; p < r; ++p) {
    CoeffForm w(a.dim(), ideal.k, 1);
    for (int i = 0; i < a.dim(); ++i) {
      VectorField x(static_cast<std::size_t>(a.dim()));
      x[static_cast<std::size_t>(i)] = Expr(1.0);
      Section v = apply_l(l, covariant_derivative(conn, x, frame_section(r, p)));
      for (int c = 0; c < ideal.k; ++c) w.at(static_cast<std::size_t>(i), c) = v[static_cast<std::size_t>(c)];
    }
    lfr.push_back(w);
  }
  return IMForm::one_form(a, l, lfr);
}

}  // namespace imtk
