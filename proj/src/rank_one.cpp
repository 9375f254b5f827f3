// SPDX-License-Identifier: Apache-2.0
#include "imtk/rank_one.hpp"

#include <cmath>
#include <stdexcept>

namespace imtk {

namespace {

std::size_t pair_index(int rb, int a, int b) {
  const auto& pairs = increasing_tuples(rb, 2);
  for (std::size_t t = 0; t < pairs.size(); ++t)
    if (pairs[t][0] == a && pairs[t][1] == b) return t;
  throw DimensionError("rank-one: pair index out of range");
}

Report fresh(const std::string& command, const SamplePlan& plan) {
  Report r;
  r.command = command;
  r.seed = plan.seed;
  r.samples = plan.count;
  return r;
}

// rho_B^* w for a scalar 1-form
std::vector<Expr> pullback1(const LieAlgebroid& b, const CoeffForm& w) {
  std::vector<Expr> out;
  for (int a = 0; a < b.rank(); ++a) {
    Expr acc;
    for (int i = 0; i < b.dim(); ++i) acc += b.anchor()(i, a) * w.at(i, 0);
    out.push_back(acc);
  }
  return out;
}

// rho_B^* w for a scalar 2-form, on increasing pairs
std::vector<Expr> pullback2(const LieAlgebroid& b, const CoeffForm& w) {
  std::vector<Expr> out;
  for (const auto& pr : increasing_tuples(b.rank(), 2)) {
    VectorField x = b.anchor_of(frame_section(b.rank(), pr[0]));
    VectorField y = b.anchor_of(frame_section(b.rank(), pr[1]));
    out.push_back(contract(w, {x, y})[0]);
  }
  return out;
}

LinearConnection line_connection(const CoeffForm& theta) {
  std::vector<ExprMatrix> g;
  for (int i = 0; i < theta.dim(); ++i) {
    ExprMatrix m(1, 1);
    m(0, 0) = theta.at(i, 0);
    g.push_back(m);
  }
  return LinearConnection(theta.dim(), 1, std::move(g));
}

void check_shape(const RankOneData& d) {
  const int rb = d.base.rank();
  if (static_cast<int>(d.v.size()) != rb || d.lambda.size() != increasing_tuples(rb, 2).size())
    throw DimensionError("rank-one data: V or lambda has the wrong length");
  if (d.theta && (d.theta->degree() != 1 || d.theta->rank() != 1 || d.theta->dim() != d.base.dim()))
    throw DimensionError("rank-one data: theta must be a scalar 1-form on the chart");
  if (d.theta && static_cast<int>(d.u1.size()) != rb)
    throw DimensionError("rank-one data: U needs one 1-form per B-frame index");
}

template <class T>
const T& need(const std::optional<T>& x, const char* name, WitnessKind kind) {
  if (!x) throw std::invalid_argument("witness '" + std::string(name) + "' is required for " + to_string(kind));
  return *x;
}

double closedness(const CoeffForm& w, const LinearConnection& conn, const Chart& chart, const SamplePlan& plan,
                  int* discarded) {
  if (w.degree() + 1 > w.dim()) return 0.0;
  return sampled_max_abs(chart, exterior_covariant_derivative(conn, w).components(), plan, discarded);
}

}  // namespace

Expr RankOneData::lambda_at(int a, int b) const {
  if (a == b) return Expr();
  if (a < b) return lambda[pair_index(base.rank(), a, b)];
  return -lambda[pair_index(base.rank(), b, a)];
}

RankOneData extract_rank_one(const CouplingData& cd) {
  if (cd.k() != 1) throw DimensionError("extract_rank_one: the ideal must have rank one");
  RankOneData d;
  d.base = cd.base;
  CoeffForm theta(cd.dim(), 1, 1);
  for (int i = 0; i < cd.dim(); ++i) theta.at(i, 0) = cd.nabla.christoffel(i)(0, 0);
  d.theta = theta;
  d.v = pullback1(cd.base, theta);
  const int rb = cd.base_rank();
  for (const auto& pr : increasing_tuples(rb, 2))
    d.lambda.push_back(cd.u_value(frame_section(rb, pr[0]), cd.base.anchor_of(frame_section(rb, pr[1])))[0]);
  for (int a = 0; a < rb; ++a) d.u1.push_back(cd.u_form(a));
  return d;
}

RankOneData rank_one_cochains(const LieAlgebroid& a) {
  if (a.rank() < 1) throw DimensionError("rank_one_cochains: empty frame");
  const int rb = a.rank() - 1;
  ExprMatrix anchor(a.dim(), rb);
  for (int i = 0; i < a.dim(); ++i)
    for (int x = 0; x < rb; ++x) anchor(i, x) = a.anchor()(i, x + 1);
  for (int i = 0; i < a.dim(); ++i)
    if (!a.anchor()(i, 0).is_zero()) throw PreconditionError("rank_one_cochains: the ideal must have zero anchor", {});
  LieAlgebroid b(a.chart(), rb, anchor);
  for (int x = 0; x < rb; ++x)
    for (int y = x + 1; y < rb; ++y)
      for (int z = 0; z < rb; ++z) b.set_structure(x, y, z, a.structure(x + 1, y + 1, z + 1));
  RankOneData d;
  d.base = b;
  for (int x = 0; x < rb; ++x) d.v.push_back(a.structure(x + 1, 0, 0));
  for (const auto& pr : increasing_tuples(rb, 2)) d.lambda.push_back(a.structure(pr[0] + 1, pr[1] + 1, 0));
  return d;
}

std::vector<Expr> twisted_differential(const LieAlgebroid& b, const std::vector<Expr>& v,
                                       const std::vector<Expr>& z) {
  const int rb = b.rank();
  if (static_cast<int>(z.size()) != rb || static_cast<int>(v.size()) != rb)
    throw DimensionError("twisted_differential: one entry per B-frame index expected");
  std::vector<Expr> out;
  for (const auto& pr : increasing_tuples(rb, 2)) {
    const int x = pr[0], y = pr[1];
    Expr acc = derive(b.anchor_of(frame_section(rb, x)), z[y]) - derive(b.anchor_of(frame_section(rb, y)), z[x]);
    acc += v[x] * z[y] - v[y] * z[x];
    for (int c = 0; c < rb; ++c) acc -= b.structure(x, y, c) * z[c];
    out.push_back(acc);
  }
  return out;
}

Report check_rank_one(const RankOneData& d, const SamplePlan& plan) {
  check_shape(d);
  Report rep = fresh("check_rank_one", plan);
  const LieAlgebroid& b = d.base;
  const int rb = b.rank();
  const int n = b.dim();
  const Chart& chart = b.chart();

  if (d.has_coupling()) {
    const CoeffForm& theta = *d.theta;
    CoeffForm dtheta = n >= 2 ? exterior_derivative(theta) : CoeffForm(n, 1, 2);
    std::vector<Expr> s2;
    for (int a = 0; a < rb; ++a) {
      CoeffForm c = interior(b.anchor_of(frame_section(rb, a)), dtheta);
      s2.insert(s2.end(), c.components().begin(), c.components().end());
    }
    rep.add("S2''", sampled_max_abs(chart, s2, plan, &rep.discarded), 1e-8);

    std::vector<Expr> s3;
    for (int x = 0; x < rb; ++x)
      for (int y = 0; y < rb; ++y) {
        VectorField rx = b.anchor_of(frame_section(rb, x)), ry = b.anchor_of(frame_section(rb, y));
        CoeffForm lhs(n, 1, 1);
        for (int c = 0; c < rb; ++c) lhs = lhs + b.structure(x, y, c) * d.u1[c];
        Expr th_rx;
        for (int i = 0; i < n; ++i) th_rx += rx[i] * theta.at(i, 0);
        CoeffForm du = n >= 2 ? exterior_derivative(d.u1[x]) : CoeffForm(n, 1, 2);
        CoeffForm tu = n >= 2 ? wedge(theta, d.u1[x]) : CoeffForm(n, 1, 2);
        CoeffForm rhs = lie_derivative_vf(rx, d.u1[y]) - interior(ry, du) + th_rx * d.u1[y] - interior(ry, tu);
        CoeffForm diff = lhs - rhs;
        s3.insert(s3.end(), diff.components().begin(), diff.components().end());
      }
    rep.add("S3''", sampled_max_abs(chart, s3, plan, &rep.discarded), 1e-8);
  }

  // tangentiality at points of generic anchor rank
  struct Local {
    int rank;
    double v, lambda;
  };
  std::vector<Local> locals;
  rep.discarded += for_each_sample(chart, plan, [&](const Point& p) {
    Eigen::MatrixXd rho = b.anchor().evaluate(p);
    Eigen::VectorXd vv(rb);
    Eigen::MatrixXd lam(rb, rb);
    for (int a = 0; a < rb; ++a) {
      vv(a) = evaluate(d.v[a], p);
      for (int c = 0; c < rb; ++c) lam(a, c) = evaluate(d.lambda_at(a, c), p);
    }
    Local l{numeric_rank(rho), 0.0, 0.0};
    if (rb > 0) {
      Eigen::MatrixXd k = kernel_basis(rho);
      if (k.cols() > 0) {
        l.v = (k.transpose() * vv).cwiseAbs().maxCoeff();
        l.lambda = (k.transpose() * lam).cwiseAbs().maxCoeff();
      }
    }
    locals.push_back(l);
  });
  int generic = 0;
  for (const auto& l : locals) generic = std::max(generic, l.rank);
  double tv = 0.0, tl = 0.0;
  int jumps = 0;
  for (const auto& l : locals) {
    if (l.rank != generic) {
      ++jumps;
      continue;
    }
    tv = std::max(tv, l.v);
    tl = std::max(tl, l.lambda);
  }
  rep.discarded += jumps;
  if (jumps > 0) rep.notes.push_back(std::to_string(jumps) + " samples dropped where the anchor rank jumps");
  rep.notes.push_back("tangentiality is checked for the supplied representatives only");
  rep.add("tangential_V", tv, 1e-8);
  rep.add("tangential_lambda", tl, 1e-8);
  return rep;
}

RankOneData gauge_transform(const RankOneData& d, const Expr& h) {
  check_shape(d);
  const LieAlgebroid& b = d.base;
  RankOneData out = d;
  Expr inv_h = Expr(1.0) / h;
  CoeffForm dlog(b.dim(), 1, 1);
  for (int i = 0; i < b.dim(); ++i) dlog.at(i, 0) = differentiate(h, i) * inv_h;
  std::vector<Expr> shift = pullback1(b, dlog);
  for (int a = 0; a < b.rank(); ++a) out.v[a] = d.v[a] + shift[a];
  for (auto& e : out.lambda) e = e * inv_h;
  if (d.theta) out.theta = *d.theta + dlog;
  for (auto& u : out.u1) u = inv_h * u;
  return out;
}

WitnessKind parse_witness_kind(const std::string& name) {
  for (WitnessKind k : {WitnessKind::product, WitnessKind::totally_flat, WitnessKind::leafwise_flat,
                        WitnessKind::kernel_flat, WitnessKind::principal_type})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown witness kind '" + name + "'");
}

std::string to_string(WitnessKind kind) {
  switch (kind) {
    case WitnessKind::product: return "product";
    case WitnessKind::totally_flat: return "totally_flat";
    case WitnessKind::leafwise_flat: return "leafwise_flat";
    case WitnessKind::kernel_flat: return "kernel_flat";
    case WitnessKind::principal_type: return "principal_type";
  }
  return "unknown";
}

Report verify_witness(const RankOneData& data, WitnessKind kind, const RankOneWitness& w, const SamplePlan& plan) {
  check_shape(data);
  const std::vector<Expr>& z = need(w.z, "Z", kind);
  const LieAlgebroid& b = data.base;
  const int n = b.dim();
  const Chart& chart = b.chart();
  if (static_cast<int>(z.size()) != b.rank()) throw DimensionError("witness Z needs one entry per B-frame index");

  Report rep = fresh("verify_witness", plan);
  rep.notes.push_back("witness kind " + to_string(kind));
  RankOneData d = data;
  if (w.h) {
    double smallest = INFINITY;
    for_each_sample(chart, plan, [&](const Point& p) { smallest = std::min(smallest, std::abs(evaluate(*w.h, p))); });
    rep.add("h_nonvanishing", smallest > 1e-12 ? 0.0 : 1.0, 0.5, "min |h| = " + std::to_string(smallest));
    d = gauge_transform(data, *w.h);
  }

  std::vector<Expr> target(d.lambda.size());
  std::optional<CoeffForm> theta;
  if (kind != WitnessKind::product) {
    theta = need(w.theta, "theta", kind);
    if (theta->degree() != 1 || theta->rank() != 1 || theta->dim() != n)
      throw DimensionError("witness theta must be a scalar 1-form on the chart");
  }

  // c1
  std::vector<Expr> c1 = d.v;
  if (theta) {
    std::vector<Expr> pb = pullback1(b, *theta);
    for (std::size_t a = 0; a < c1.size(); ++a) c1[a] = c1[a] - pb[a];
  }
  rep.add("c1", sampled_max_abs(chart, c1, plan, &rep.discarded), 1e-8);

  if (theta) {
    CoeffForm dtheta = n >= 2 ? exterior_derivative(*theta) : CoeffForm(n, 1, 2);
    if (kind == WitnessKind::leafwise_flat) {
      std::vector<Expr> inv;
      for (int a = 0; a < b.rank(); ++a) {
        CoeffForm c = interior(b.anchor_of(frame_section(b.rank(), a)), dtheta);
        inv.insert(inv.end(), c.components().begin(), c.components().end());
      }
      rep.add("theta_invariant", sampled_max_abs(chart, inv, plan, &rep.discarded), 1e-8);
    } else {
      rep.add("theta_closed", sampled_max_abs(chart, dtheta.components(), plan, &rep.discarded), 1e-8);
    }
  }

  if (kind == WitnessKind::kernel_flat) {
    const IMForm& g = need(w.im, "im", kind);
    if (g.degree() != 2 || g.value_rank() != 1 || g.algebroid().rank() != b.rank())
      throw DimensionError("witness im must be a scalar IM 2-form on B");
    LinearConnection conn = line_connection(*theta);
    ARepresentation rep_b = induced_representation(b, conn);
    rep.append(check_im_form(g, rep_b, plan), "im:");
    std::vector<Expr> closed;
    for (int a = 0; a < b.rank(); ++a) {
      CoeffForm s = g.op(a) - exterior_covariant_derivative(conn, g.symbol(a));
      closed.insert(closed.end(), s.components().begin(), s.components().end());
    }
    double res = sampled_max_abs(chart, closed, plan, &rep.discarded);
    for (int a = 0; a < b.rank(); ++a) res = std::max(res, closedness(g.op(a), conn, chart, plan, &rep.discarded));
    rep.add("im_closed", res, 1e-8);
    AlgebroidCochain cm = chain_map(g);
    for (std::size_t t = 0; t < target.size(); ++t) target[t] = cm.values[t][0];
  } else if (kind == WitnessKind::principal_type) {
    const CoeffForm& om = need(w.omega, "omega", kind);
    if (om.degree() != 2 || om.rank() != 1 || om.dim() != n)
      throw DimensionError("witness omega must be a scalar 2-form on the chart");
    rep.add("omega_closed", closedness(om, line_connection(*theta), chart, plan, &rep.discarded), 1e-8);
    target = pullback2(b, om);
  }

  std::vector<Expr> dz = twisted_differential(b, d.v, z);
  std::vector<Expr> c2;
  for (std::size_t t = 0; t < d.lambda.size(); ++t) c2.push_back(d.lambda[t] + dz[t] - target[t]);
  rep.add("c2", sampled_max_abs(chart, c2, plan, &rep.discarded), 1e-8);
  return rep;
}

}  // namespace imtk
